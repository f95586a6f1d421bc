//! Simplify, classify, route.
//!
//! Each input sentence is sent to the simplification engine; the classifier
//! judges the (original, simplified) pair and the simplified sentence is
//! forwarded only when the judgement is `Yes`. Any failure along the way
//! routes the original sentence and records a flag; the pipeline itself never
//! aborts on a single sentence.
//!
//! Engines speak a line protocol: one sentence per line on standard input,
//! exactly one output line per input line on standard output.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use crate::classifiers::{load_model, Classifier, Model, Prediction};
use crate::corpus::{tokenize, Label};
use crate::features::FeatureResources;
use crate::resources::load_bundle;
use crate::{Error, Result};

pub const DEFAULT_TIMEOUT_S: f64 = 30.0;
const STDERR_EXCERPT: usize = 400;

/// Engine description as it appears in the pipeline config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineSpec {
    /// Program and arguments.
    Cmd(Vec<String>),
    /// Exact-match lookup table; unknown input is echoed.
    Mock(BTreeMap<String, String>),
}

#[derive(Debug, Clone)]
pub struct EngineAdapter {
    spec: EngineSpec,
    timeout: Duration,
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

fn excerpt(bytes: &[u8]) -> String {
    let text = String::from_utf8_lossy(bytes);
    let text = text.trim();
    let skip = text.chars().count().saturating_sub(STDERR_EXCERPT);
    text.chars().skip(skip).collect()
}

impl EngineAdapter {
    pub fn new(spec: EngineSpec, timeout: Duration) -> Result<Self> {
        if let EngineSpec::Cmd(argv) = &spec {
            if argv.is_empty() {
                return Err(Error::InvalidInput("engine command is empty".into()));
            }
        }
        Ok(EngineAdapter { spec, timeout })
    }

    pub fn mock(table: BTreeMap<String, String>) -> Self {
        EngineAdapter {
            spec: EngineSpec::Mock(table),
            timeout: Duration::from_secs_f64(DEFAULT_TIMEOUT_S),
        }
    }

    pub fn command<S: Into<String>>(
        argv: impl IntoIterator<Item = S>,
        timeout: Duration,
    ) -> Result<Self> {
        Self::new(
            EngineSpec::Cmd(argv.into_iter().map(Into::into).collect()),
            timeout,
        )
    }

    pub fn spec(&self) -> &EngineSpec {
        &self.spec
    }

    pub fn simplify(&self, sentence: &str) -> Result<String> {
        let mut out = self.run_lines(&[sentence.to_string()])?;
        Ok(out.pop().expect("line count checked"))
    }

    /// Sends all lines in one engine invocation and returns one output per input.
    pub fn run_lines(&self, lines: &[String]) -> Result<Vec<String>> {
        match &self.spec {
            EngineSpec::Mock(table) => Ok(lines
                .iter()
                .map(|l| table.get(l).cloned().unwrap_or_else(|| l.clone()))
                .collect()),
            EngineSpec::Cmd(argv) => self.run_external(argv, lines),
        }
    }

    fn run_external(&self, argv: &[String], lines: &[String]) -> Result<Vec<String>> {
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::engine(format!("cannot start {:?}: {e}", argv[0]), ""))?;

        let mut payload = String::new();
        for l in lines {
            payload.push_str(&one_line(l));
            payload.push('\n');
        }
        let mut stdin = child.stdin.take().expect("piped stdin");
        // the engine may exit without reading; a broken pipe is reported via its status
        let writer = thread::spawn(move || {
            let _ = stdin.write_all(payload.as_bytes());
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let out_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout.read_to_end(&mut buf);
            buf
        });
        let err_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
            buf
        });

        let status = match child.wait_timeout(self.timeout) {
            Ok(Some(status)) => status,
            Ok(None) => {
                let _ = child.kill();
                let _ = child.wait();
                let _ = writer.join();
                let err = err_reader.join().unwrap_or_default();
                return Err(Error::engine(
                    format!("timed out after {:.1}s", self.timeout.as_secs_f64()),
                    excerpt(&err),
                ));
            }
            Err(e) => return Err(Error::engine(format!("wait failed: {e}"), "")),
        };
        let _ = writer.join();
        let out = out_reader.join().unwrap_or_default();
        let err = err_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(Error::engine(
                format!("engine exited with {status}"),
                excerpt(&err),
            ));
        }
        let text = String::from_utf8_lossy(&out);
        let produced: Vec<String> = text.lines().map(str::to_string).collect();
        if produced.len() != lines.len() {
            return Err(Error::engine(
                format!(
                    "output line count mismatch: expected {}, got {}",
                    lines.len(),
                    produced.len()
                ),
                excerpt(&err),
            ));
        }
        Ok(produced)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub original: String,
    /// Engine output; empty when the engine failed.
    pub simplified: String,
    /// Absent when no prediction could be made.
    pub prediction: Option<Prediction>,
    pub routed: String,
    pub routed_is_simplified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
    /// Output of the downstream engine for `routed`, when one is configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<String>,
}

impl GateDecision {
    fn fallback(original: &str, simplified: &str, flag: String) -> Self {
        GateDecision {
            original: original.to_string(),
            simplified: simplified.to_string(),
            prediction: None,
            routed: original.to_string(),
            routed_is_simplified: false,
            flag: Some(flag),
            translation: None,
        }
    }
}

/// Classifies a pair and routes accordingly. Never fails: problems are
/// recorded in `flag` and the original sentence is routed.
pub fn decide<C: Classifier + ?Sized>(
    resources: &FeatureResources,
    classifier: &C,
    original: &str,
    simplified: &str,
) -> GateDecision {
    if simplified.trim().is_empty() {
        return GateDecision::fallback(original, simplified, "engine returned empty".into());
    }
    let prediction = resources
        .extract(&tokenize(original), &tokenize(simplified))
        .and_then(|v| classifier.predict(v.values()));
    match prediction {
        Ok(p) => {
            let yes = p.label == Label::Yes;
            GateDecision {
                original: original.to_string(),
                simplified: simplified.to_string(),
                prediction: Some(p),
                routed: if yes { simplified } else { original }.to_string(),
                routed_is_simplified: yes,
                flag: None,
                translation: None,
            }
        }
        Err(e) => GateDecision::fallback(original, simplified, format!("classifier failed: {e}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub routed_simplified: usize,
    pub routed_original: usize,
    pub flagged: usize,
}

impl Summary {
    pub fn add(&mut self, d: &GateDecision) {
        self.total += 1;
        if d.routed_is_simplified {
            self.routed_simplified += 1;
        } else {
            self.routed_original += 1;
        }
        if d.flag.is_some() {
            self.flagged += 1;
        }
    }
}

pub struct Pipeline<C = Model> {
    pub resources: FeatureResources,
    pub classifier: C,
    pub simplifier: EngineAdapter,
    pub translator: Option<EngineAdapter>,
}

impl<C: Classifier> Pipeline<C> {
    pub fn process(&self, sentence: &str) -> GateDecision {
        let mut d = match self.simplifier.simplify(sentence) {
            Ok(simplified) => decide(&self.resources, &self.classifier, sentence, &simplified),
            Err(e) => GateDecision::fallback(sentence, "", e.to_string()),
        };
        if let Some(tr) = &self.translator {
            match tr.simplify(&d.routed) {
                Ok(t) => d.translation = Some(t),
                Err(e) => {
                    let msg = format!("translation failed: {e}");
                    d.flag = Some(match d.flag.take() {
                        Some(f) => format!("{f}; {msg}"),
                        None => msg,
                    });
                }
            }
        }
        d
    }

    /// Processes sentences in order.
    pub fn run<I, S>(&self, sentences: I) -> (Vec<GateDecision>, Summary)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut summary = Summary::default();
        let decisions = sentences
            .into_iter()
            .map(|s| {
                let d = self.process(s.as_ref());
                summary.add(&d);
                d
            })
            .collect();
        (decisions, summary)
    }

    /// Streams one JSON decision per line followed by `{"summary": {...}}`.
    pub fn run_jsonl<I, S, W>(&self, sentences: I, mut out: W) -> std::io::Result<Summary>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
        W: Write,
    {
        let mut summary = Summary::default();
        for s in sentences {
            let d = self.process(s.as_ref());
            summary.add(&d);
            serde_json::to_writer(&mut out, &d)?;
            out.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut out, &SummaryLine { summary })?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(summary)
    }
}

#[derive(Serialize, Deserialize)]
pub struct SummaryLine {
    pub summary: Summary,
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_S
}

/// Pipeline configuration file. Relative paths resolve against the
/// directory holding the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub simplifier: EngineSpec,
    #[serde(default)]
    pub translator: Option<EngineSpec>,
    pub classifier_model: PathBuf,
    /// Resource directory written by `train-resources`.
    pub resources: PathBuf,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        if let Some(dir) = path.parent() {
            cfg.classifier_model = dir.join(&cfg.classifier_model);
            cfg.resources = dir.join(&cfg.resources);
        }
        Ok(cfg)
    }

    pub fn timeout(&self) -> Result<Duration> {
        Duration::try_from_secs_f64(self.timeout_s)
            .ok()
            .filter(|d| !d.is_zero())
            .ok_or_else(|| Error::InvalidInput(format!("invalid timeout {}", self.timeout_s)))
    }

    /// Loads the model and resources; every failure here is a startup error.
    pub fn build(&self) -> Result<Pipeline<Model>> {
        let timeout = self.timeout()?;
        Ok(Pipeline {
            classifier: load_model(&self.classifier_model)?.model,
            resources: load_bundle(&self.resources)?,
            simplifier: EngineAdapter::new(self.simplifier.clone(), timeout)?,
            translator: self
                .translator
                .clone()
                .map(|s| EngineAdapter::new(s, timeout))
                .transpose()?,
        })
    }
}

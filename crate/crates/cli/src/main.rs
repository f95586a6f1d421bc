use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use simpgate::classifiers::{
    load_model, predict_batch, save_model, Model, ModelFile, NbModel, SvmModel, SvmParams,
};
use simpgate::corpus::{self, AnnotatedPair, Label};
use simpgate::evaluation::{render_text, report};
use simpgate::features::{extract_batch, FeatureMatrix, FEATURE_NAMES};
use simpgate::gate::PipelineConfig;
use simpgate::lexicon::Model1Config;
use simpgate::par::{with_threads, Execution};
use simpgate::resources::{self, load_bundle, load_manifest, provenance_hash, sha256_file};
use simpgate::{Error, Result};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_ENGINE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "simpgate",
    version,
    about = "Classifier-gated sentence simplification ahead of machine translation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train language models, lexical table and frequency statistics from a parallel corpus.
    TrainResources(TrainResourcesArgs),
    /// Write the 17-feature CSV for an annotated data set.
    Extract(ExtractArgs),
    /// Train a gating classifier on annotated pairs.
    Train(TrainArgs),
    /// Compare a classifier against human labels.
    Evaluate(EvaluateArgs),
    /// Run the simplify/classify/route pipeline over sentences.
    Gate(GateArgs),
    /// Corpus statistics for annotated data or a parallel corpus.
    Stats(StatsArgs),
}

#[derive(Args)]
struct TrainResourcesArgs {
    /// Complex-side sentences, one per line.
    #[arg(long)]
    source: PathBuf,
    /// Simplified-side sentences, line-aligned with --source.
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// EM rounds for the lexical table.
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    /// Give every source sentence an extra empty word during EM.
    #[arg(long)]
    null_alignment: bool,
}

#[derive(Args)]
struct DataArgs {
    /// Annotated pairs (JSONL, or TSV when the extension is .tsv).
    #[arg(long)]
    data: PathBuf,
    /// Resource directory written by train-resources.
    #[arg(long)]
    resources: PathBuf,
    /// Worker threads for feature extraction (0 = all cores, 1 = sequential).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierKind {
    Nb,
    Svm,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    classifier: ClassifierKind,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 13)]
    seed: u64,
    /// SVM regularization strength.
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,
    /// SVM passes over the training data.
    #[arg(long, default_value_t = 50)]
    epochs: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    /// Emit the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Sentences to process, one per line; blank lines are skipped.
    #[arg(long)]
    input: PathBuf,
    /// Decision JSONL destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Annotated pairs (JSONL or .tsv).
    #[arg(long, conflicts_with_all = ["source", "target"])]
    data: Option<PathBuf>,
    #[arg(long, requires = "target")]
    source: Option<PathBuf>,
    #[arg(long, requires = "source")]
    target: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_engine() {
                EXIT_ENGINE
            } else {
                EXIT_DATA
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainResources(a) => train_resources(a),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Gate(a) => gate(a),
        Command::Stats(a) => stats(a),
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            io::Error::new(io::ErrorKind::NotFound, "no such file"),
        ))
    }
}

fn load_pairs(path: &Path) -> Result<Vec<AnnotatedPair>> {
    require_file(path)?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("tsv"))
    {
        corpus::load_tsv(path)
    } else {
        corpus::load_annotated(path)
    }
}

fn write_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    fs::write(path, text).map_err(io_err(path))
}

fn train_resources(a: TrainResourcesArgs) -> Result<()> {
    require_file(&a.source)?;
    require_file(&a.target)?;
    let corpus = corpus::load_parallel(&a.source, &a.target)?;
    let config = Model1Config {
        iterations: a.iterations,
        null_alignment: a.null_alignment,
    };
    let inputs = BTreeMap::from([
        ("source".to_string(), sha256_file(&a.source)?),
        ("target".to_string(), sha256_file(&a.target)?),
    ]);
    let provenance = provenance_hash(&inputs, config);
    let res = resources::train_resources(&corpus, config, provenance)?;
    let manifest = resources::save_bundle(&a.out_dir, &res, inputs, config, corpus.len())?;
    eprintln!(
        "wrote {} resource files for {} sentence pairs to {}",
        manifest.files.len(),
        corpus.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn features_for(d: &DataArgs) -> Result<(Vec<AnnotatedPair>, FeatureMatrix)> {
    let pairs = load_pairs(&d.data)?;
    let res = load_bundle(&d.resources)?;
    let mode = if d.threads == 1 {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let matrix = with_threads(d.threads, || extract_batch(&res, &pairs, mode))??;
    if !matrix.diagnostics.is_empty() {
        eprintln!(
            "note: {} row(s) too short for some n-gram features; those features are 0",
            matrix.diagnostics.len()
        );
    }
    Ok((pairs, matrix))
}

fn extract(a: ExtractArgs) -> Result<()> {
    let (_, matrix) = features_for(&a.data)?;
    matrix.write_csv(&a.out)?;
    eprintln!(
        "wrote {} feature rows to {}",
        matrix.rows.len(),
        a.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainingReport {
    classifier: &'static str,
    examples: usize,
    yes: usize,
    no: usize,
    training_accuracy: f64,
    feature_means: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_objective: Option<f64>,
}

fn report_path(model: &Path) -> PathBuf {
    let stem = model
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    model.with_file_name(format!("{stem}.report.json"))
}

fn train(a: TrainArgs) -> Result<()> {
    let (_, matrix) = features_for(&a.data)?;
    let x = matrix.to_vecs();
    let y = &matrix.labels;
    let mut final_objective = None;
    let model = match a.classifier {
        ClassifierKind::Nb => Model::Nb(NbModel::train(&x, y)?),
        ClassifierKind::Svm => {
            let params = SvmParams {
                lambda: a.lambda,
                epochs: a.epochs,
                seed: a.seed,
            };
            let (m, trace) = SvmModel::train_traced(&x, y, params)?;
            final_objective = trace.last().copied();
            Model::Svm(m)
        }
    };
    let preds = predict_batch(&model, &x, Execution::Sequential)?;
    let correct = preds.iter().zip(y).filter(|(p, l)| p.label == **l).count();
    let yes = y.iter().filter(|&&l| l == Label::Yes).count();
    let n = x.len() as f64;
    let feature_means = FEATURE_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            (
                format!("f{} {name}", i + 1),
                x.iter().map(|r| r[i]).sum::<f64>() / n,
            )
        })
        .collect();

    let mut file = ModelFile::new(model);
    file.training_data_sha256 = Some(sha256_file(&a.data.data)?);
    save_model(&a.out, &file)?;
    let rep = TrainingReport {
        classifier: file.model.kind(),
        examples: x.len(),
        yes,
        no: x.len() - yes,
        training_accuracy: correct as f64 / n,
        feature_means,
        final_objective,
    };
    let rp = report_path(&a.out);
    write_pretty(&rp, &rep)?;
    eprintln!(
        "trained {} on {} pairs ({} Yes / {} No), training accuracy {:.4}; model {}, report {}",
        rep.classifier,
        rep.examples,
        rep.yes,
        rep.no,
        rep.training_accuracy,
        a.out.display(),
        rp.display()
    );
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let data_hash = sha256_file(&a.data.data)?;
    if model.training_data_sha256.as_deref() == Some(data_hash.as_str()) {
        eprintln!("warning: evaluation data is identical to the classifier's training data");
    }
    if let Ok(manifest) = load_manifest(&a.data.resources) {
        if manifest.inputs.values().any(|h| *h == data_hash) {
            eprintln!("warning: evaluation data is one of the resource training inputs");
        }
    }
    let (_, matrix) = features_for(&a.data)?;
    let mode = if a.data.threads == 1 {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let x = matrix.to_vecs();
    let preds = with_threads(a.data.threads, || predict_batch(&model.model, &x, mode))??;
    let rep = report(&matrix.labels, &preds)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let text = if a.json {
        serde_json::to_string_pretty(&rep).expect("report serializes") + "\n"
    } else {
        format!(
            "Human - {} classifier\n\n{}",
            model.model.kind(),
            render_text(&rep)
        )
    };
    out.write_all(text.as_bytes())
        .map_err(io_err(Path::new("<stdout>")))
}

fn gate(a: GateArgs) -> Result<()> {
    let cfg = PipelineConfig::load(&a.config)?;
    let pipeline = cfg.build()?;
    let file = fs::File::open(&a.input).map_err(io_err(&a.input))?;
    let sentences: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<io::Result<Vec<_>>>()
        .map_err(io_err(&a.input))?
        .into_iter()
        .filter(|l| !l.trim().is_empty())
        .collect();
    let summary = match &a.out {
        Some(path) => {
            let f = fs::File::create(path).map_err(io_err(path))?;
            pipeline
                .run_jsonl(&sentences, BufWriter::new(f))
                .map_err(io_err(path))?
        }
        None => pipeline
            .run_jsonl(&sentences, io::stdout().lock())
            .map_err(io_err(Path::new("<stdout>")))?,
    };
    eprintln!(
        "{} sentences: {} routed simplified, {} routed original, {} flagged",
        summary.total, summary.routed_simplified, summary.routed_original, summary.flagged
    );
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    let st = match (a.data, a.source, a.target) {
        (Some(d), _, _) => corpus::corpus_stats(&load_pairs(&d)?),
        (None, Some(s), Some(t)) => {
            require_file(&s)?;
            require_file(&t)?;
            corpus::parallel_stats(&corpus::load_parallel(&s, &t)?)
        }
        _ => {
            return Err(Error::InvalidInput(
                "pass --data or both --source and --target".into(),
            ))
        }
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&st).expect("stats serialize")
    );
    Ok(())
}

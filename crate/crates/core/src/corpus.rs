//! Tokenization, annotated-pair I/O and corpus statistics.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Characters split off word boundaries into single-character tokens.
pub const PUNCTUATION: &[char] = &[
    '.', ',', ';', ':', '!', '?', '"', '\'', '(', ')', '[', ']', '-', '\u{2014}', '/',
];

pub fn is_punct_char(c: char) -> bool {
    PUNCTUATION.contains(&c)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    surface: String,
    is_punct: bool,
}

impl Token {
    /// Builds a token from a non-empty, whitespace-free surface.
    pub fn new(surface: impl Into<String>) -> Option<Self> {
        let surface = surface.into();
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            return None;
        }
        let is_punct = surface.chars().all(is_punct_char);
        Some(Token { surface, is_punct })
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn is_punct(&self) -> bool {
        self.is_punct
    }

    pub fn char_len(&self) -> usize {
        self.surface.chars().count()
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface)
    }
}

/// Splits `text` on whitespace, peels boundary punctuation into
/// single-character tokens and lowercases everything.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && is_punct_char(chars[start]) {
            start += 1;
        }
        while end > start && is_punct_char(chars[end - 1]) {
            end -= 1;
        }
        for &c in &chars[..start] {
            out.push(punct_token(c));
        }
        if start < end {
            let core: String = chars[start..end].iter().collect::<String>().to_lowercase();
            out.push(Token {
                surface: core,
                is_punct: false,
            });
        }
        for &c in &chars[end..] {
            out.push(punct_token(c));
        }
    }
    out
}

fn punct_token(c: char) -> Token {
    Token {
        surface: c.to_string(),
        is_punct: true,
    }
}

pub fn join_tokens(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(Token::surface)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn surfaces(tokens: &[Token]) -> Vec<&str> {
    tokens.iter().map(Token::surface).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Yes,
    No,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Yes => "Yes",
            Label::No => "No",
        }
    }

    /// 1.0 for `Yes`, 0.0 for `No`.
    pub fn indicator(self) -> f64 {
        match self {
            Label::Yes => 1.0,
            Label::No => 0.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("yes") {
            Ok(Label::Yes)
        } else if s.eq_ignore_ascii_case("no") {
            Ok(Label::No)
        } else {
            Err(())
        }
    }
}

/// A (complex, simplified) sentence pair with its human judgement.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedPair {
    pub source_text: String,
    pub target_text: String,
    pub source: Vec<Token>,
    pub target: Vec<Token>,
    pub label: Label,
}

impl AnnotatedPair {
    pub fn new(source_text: &str, target_text: &str, label: Label) -> Result<Self> {
        let source = tokenize(source_text);
        let target = tokenize(target_text);
        if source.is_empty() || target.is_empty() {
            return Err(Error::EmptySentence);
        }
        Ok(AnnotatedPair {
            source_text: source_text.to_string(),
            target_text: target_text.to_string(),
            source,
            target,
            label,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct AnnotatedRecord {
    source: String,
    target: String,
    label: String,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Reads annotated pairs from JSONL. Blank lines are skipped.
pub fn load_annotated(path: impl AsRef<Path>) -> Result<Vec<AnnotatedPair>> {
    let path = path.as_ref();
    read_annotated(open(path)?).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_annotated(reader: impl BufRead) -> Result<Vec<AnnotatedPair>> {
    let mut pairs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io("<annotated>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: AnnotatedRecord =
            serde_json::from_str(&line).map_err(|e| Error::Malformed {
                line: lineno,
                message: e.to_string(),
            })?;
        pairs.push(record_to_pair(record, lineno)?);
    }
    Ok(pairs)
}

fn record_to_pair(record: AnnotatedRecord, line: usize) -> Result<AnnotatedPair> {
    let label = record.label.parse().map_err(|_| Error::InvalidLabel {
        line,
        label: record.label.clone(),
    })?;
    AnnotatedPair::new(&record.source, &record.target, label).map_err(|_| Error::Malformed {
        line,
        message: "empty sentence".into(),
    })
}

pub fn write_annotated(path: impl AsRef<Path>, pairs: &[AnnotatedPair]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in pairs {
        let record = AnnotatedRecord {
            source: p.source_text.clone(),
            target: p.target_text.clone(),
            label: p.label.as_str().to_string(),
        };
        let line = serde_json::to_string(&record).expect("string record serializes");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads the three-column TSV layout (source, simplified, label).
///
/// A first line whose label column is not Yes/No is taken as a header.
pub fn load_tsv(path: impl AsRef<Path>) -> Result<Vec<AnnotatedPair>> {
    let path = path.as_ref();
    let mut pairs = Vec::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::Malformed {
                line: lineno,
                message: format!("expected 3 tab-separated columns, found {}", cols.len()),
            });
        }
        if lineno == 1 && cols[2].parse::<Label>().is_err() {
            continue;
        }
        pairs.push(record_to_pair(
            AnnotatedRecord {
                source: cols[0].to_string(),
                target: cols[1].to_string(),
                label: cols[2].to_string(),
            },
            lineno,
        )?);
    }
    Ok(pairs)
}

/// Line-aligned sentence pairs used to train the resources.
#[derive(Debug, Clone, Default)]
pub struct ParallelCorpus {
    pub source: Vec<Vec<Token>>,
    pub target: Vec<Vec<Token>>,
}

impl ParallelCorpus {
    pub fn from_lines<S: AsRef<str>>(source: &[S], target: &[S]) -> Result<Self> {
        if source.len() != target.len() {
            return Err(Error::AlignmentMismatch {
                source_lines: source.len(),
                target_lines: target.len(),
            });
        }
        Ok(ParallelCorpus {
            source: source.iter().map(|s| tokenize(s.as_ref())).collect(),
            target: target.iter().map(|s| tokenize(s.as_ref())).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&[Token], &[Token])> {
        self.source
            .iter()
            .zip(&self.target)
            .map(|(s, t)| (s.as_slice(), t.as_slice()))
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    open(path)?
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(path, e))
}

pub fn load_parallel(source: impl AsRef<Path>, target: impl AsRef<Path>) -> Result<ParallelCorpus> {
    let src = read_lines(source.as_ref())?;
    let tgt = read_lines(target.as_ref())?;
    ParallelCorpus::from_lines(&src, &tgt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub sentence_count: usize,
    pub word_count_source: usize,
    pub word_count_target: usize,
    pub unique_words_source: usize,
    pub unique_words_target: usize,
}

pub fn corpus_stats(pairs: &[AnnotatedPair]) -> CorpusStats {
    token_stats(
        pairs
            .iter()
            .map(|p| (p.source.as_slice(), p.target.as_slice())),
    )
}

pub fn parallel_stats(corpus: &ParallelCorpus) -> CorpusStats {
    token_stats(corpus.pairs())
}

fn token_stats<'a>(pairs: impl Iterator<Item = (&'a [Token], &'a [Token])>) -> CorpusStats {
    let mut stats = CorpusStats::default();
    let mut src_vocab: HashSet<&str> = HashSet::new();
    let mut tgt_vocab: HashSet<&str> = HashSet::new();
    for (s, t) in pairs {
        stats.sentence_count += 1;
        stats.word_count_source += s.len();
        stats.word_count_target += t.len();
        src_vocab.extend(s.iter().map(Token::surface));
        tgt_vocab.extend(t.iter().map(Token::surface));
    }
    stats.unique_words_source = src_vocab.len();
    stats.unique_words_target = tgt_vocab.len();
    stats
}

/// Deterministic shuffled split; `|test| = round(test_fraction * N)`.
///
/// Both halves keep the input's relative order.
pub fn split<T: Clone>(items: &[T], test_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::InvalidInput(format!(
            "test fraction {test_fraction} outside [0, 1]"
        )));
    }
    let n = items.len();
    let n_test = ((test_fraction * n as f64).round() as usize).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_test = vec![false; n];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let mut train = Vec::with_capacity(n - n_test);
    let mut test = Vec::with_capacity(n_test);
    for (item, &t) in items.iter().zip(&is_test) {
        if t {
            test.push(item.clone());
        } else {
            train.push(item.clone());
        }
    }
    Ok((train, test))
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("invalid label at line {line}: {label:?}")]
    InvalidLabel { line: usize, label: String },

    #[error("alignment mismatch {source_lines}\u{2260}{target_lines}")]
    AlignmentMismatch {
        source_lines: usize,
        target_lines: usize,
    },

    #[error("empty LM training corpus")]
    EmptyLmCorpus,

    #[error("empty training corpus")]
    EmptyCorpus,

    #[error("cannot score empty sentence")]
    EmptySentence,

    #[error("feature {index}: {source}")]
    Feature {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("feature extraction failed for {} row(s): {}", .failures.len(), summarize_rows(.failures))]
    Batch { failures: Vec<(usize, String)> },

    #[error("degenerate training set: {0}")]
    DegenerateTrainingSet(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("unsupported model version {0}")]
    UnsupportedVersion(u64),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("engine error: {message}{}", stderr_suffix(.stderr))]
    Engine { message: String, stderr: String },
}

fn summarize_rows(failures: &[(usize, String)]) -> String {
    let mut out = failures
        .iter()
        .take(5)
        .map(|(row, msg)| format!("row {row}: {msg}"))
        .collect::<Vec<_>>()
        .join("; ");
    if failures.len() > 5 {
        out.push_str("; ...");
    }
    out
}

fn stderr_suffix(stderr: &str) -> String {
    if stderr.is_empty() {
        String::new()
    } else {
        format!(" (stderr: {stderr})")
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn engine(message: impl Into<String>, stderr: impl Into<String>) -> Self {
        Error::Engine {
            message: message.into(),
            stderr: stderr.into(),
        }
    }

    /// True for failures that originate in an external engine.
    pub fn is_engine(&self) -> bool {
        matches!(self, Error::Engine { .. })
    }
}

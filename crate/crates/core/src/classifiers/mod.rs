//! Binary gating classifiers over feature vectors.
//!
//! Models are dimension-agnostic; the pipeline feeds them 17-dimensional
//! vectors. Both classifiers break exact ties toward [`Label::No`], which
//! keeps the original sentence.
//!
//! Model files are JSON with a `kind` discriminator:
//!
//! ```json
//! {"version":1,"kind":"nb","prior_yes":0.5,...}
//! {"version":1,"kind":"svm","weights":[...],"bias":0.1,"standardizer":{...},"params":{...}}
//! {"version":1,"kind":"constant","label":"No"}
//! ```

mod naive_bayes;
mod svm;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::par::{map_ordered, Execution};
use crate::{Error, Result};

pub use naive_bayes::{GaussianParams, NbModel};
pub use svm::{SvmModel, SvmParams};

/// Lower bound for standard deviations and variances.
pub const EPSILON: f64 = 1e-9;
const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    /// Posterior probability of `Yes`; threshold 0.5.
    Posterior,
    /// Signed distance from the hyperplane; threshold 0.
    Margin,
    /// Fixed output; 1.0 for `Yes`, 0.0 for `No`.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
    pub kind: ScoreKind,
}

impl Prediction {
    /// Score in `[0, 1]` used for MAE/RMSE: the posterior when there is one,
    /// otherwise the hard label.
    pub fn error_score(&self) -> f64 {
        match self.kind {
            ScoreKind::Posterior => self.score,
            ScoreKind::Margin | ScoreKind::Constant => self.label.indicator(),
        }
    }
}

pub trait Classifier {
    fn predict(&self, x: &[f64]) -> Result<Prediction>;
}

pub(crate) fn check_input(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            actual: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite feature value".into()));
    }
    Ok(())
}

/// Validates a training set and returns its dimension.
pub(crate) fn check_training(x: &[Vec<f64>], y: &[Label]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let yes = y.iter().filter(|&&l| l == Label::Yes).count();
    if x.len() < 2 || yes == 0 || yes == y.len() {
        return Err(Error::DegenerateTrainingSet(format!(
            "{yes} Yes / {} No examples; both classes are required",
            y.len() - yes
        )));
    }
    let dim = x[0].len();
    for row in x {
        check_input(row, dim)?;
    }
    Ok(dim)
}

/// Per-feature z-scoring fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let dim = x.first().map_or(0, Vec::len);
        let n = x.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let stddev = var
            .into_iter()
            .map(|s| (s / n).sqrt().max(EPSILON))
            .collect();
        Standardizer { mean, stddev }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.stddev)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Always predicts one label; used as a baseline and as a stub in tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantModel {
    pub label: Label,
}

impl Classifier for ConstantModel {
    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
        Ok(Prediction {
            label: self.label,
            score: self.label.indicator(),
            kind: ScoreKind::Constant,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Nb(NbModel),
    Svm(SvmModel),
    Constant(ConstantModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Nb(_) => "nb",
            Model::Svm(_) => "svm",
            Model::Constant(_) => "constant",
        }
    }
}

impl Classifier for Model {
    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        match self {
            Model::Nb(m) => m.predict(x),
            Model::Svm(m) => m.predict(x),
            Model::Constant(m) => m.predict(x),
        }
    }
}

pub fn predict_batch<C: Classifier + Sync>(
    model: &C,
    rows: &[Vec<f64>],
    mode: Execution,
) -> Result<Vec<Prediction>> {
    map_ordered(rows, mode, |_, x| model.predict(x))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u64,
    #[serde(flatten)]
    pub model: Model,
    /// SHA-256 of the annotated data the model was trained on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training_data_sha256: Option<String>,
}

impl ModelFile {
    pub fn new(model: Model) -> Self {
        ModelFile {
            version: FORMAT_VERSION,
            model,
            training_data_sha256: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(FORMAT_VERSION) => {}
            Some(v) => return Err(Error::UnsupportedVersion(v)),
            None => return Err(Error::Schema("missing or non-integer \"version\"".into())),
        }
        serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))
    }
}

pub fn save_model(path: impl AsRef<Path>, file: &ModelFile) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, file.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelFile::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy() -> (Vec<Vec<f64>>, Vec<Label>) {
        let x = vec![
            vec![0.0, 1.0],
            vec![0.5, 1.5],
            vec![3.0, -1.0],
            vec![2.5, -2.0],
        ];
        let y = vec![Label::Yes, Label::Yes, Label::No, Label::No];
        (x, y)
    }

    #[test]
    fn standardizer_clamps_constant_columns() {
        let s = Standardizer::fit(&[vec![1.0, 2.0], vec![1.0, 4.0]]);
        assert_eq!(s.mean, vec![1.0, 3.0]);
        assert_eq!(s.stddev, vec![EPSILON, 1.0]);
        assert_eq!(s.apply(&[1.0, 5.0]), vec![0.0, 2.0]);
    }

    #[test]
    fn training_checks() {
        let (x, _) = toy();
        let one_class = vec![Label::Yes; 4];
        assert!(matches!(
            check_training(&x, &one_class),
            Err(Error::DegenerateTrainingSet(_))
        ));
        assert!(matches!(
            check_training(&x, &[Label::Yes]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let (x, y) = toy();
        let nb = Model::Nb(NbModel::train(&x, &y).unwrap());
        let svm = Model::Svm(SvmModel::train(&x, &y, SvmParams::default()).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let probes: Vec<Vec<f64>> = (0..100)
            .map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
            .collect();
        for model in [nb, svm, Model::Constant(ConstantModel { label: Label::No })] {
            let path = dir.path().join(format!("{}.json", model.kind()));
            save_model(&path, &ModelFile::new(model.clone())).unwrap();
            let back = load_model(&path).unwrap();
            assert_eq!(back.model, model);
            for p in &probes {
                assert_eq!(model.predict(p).unwrap(), back.model.predict(p).unwrap());
            }
        }
    }

    #[test]
    fn load_failures() {
        let (x, y) = toy();
        let text = ModelFile::new(Model::Nb(NbModel::train(&x, &y).unwrap())).to_json();
        let truncated = &text[..text.len() / 2];
        assert!(matches!(
            ModelFile::from_json(truncated),
            Err(Error::Schema(_))
        ));
        let future = text.replacen("\"version\": 1", "\"version\": 9", 1);
        let err = ModelFile::from_json(&future).unwrap_err();
        assert_eq!(err.to_string(), "unsupported model version 9");
        let unknown = text.replacen("\"kind\": \"nb\"", "\"kind\": \"tree\"", 1);
        assert!(matches!(
            ModelFile::from_json(&unknown),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn kind_tag_in_file() {
        let text = ModelFile::new(Model::Constant(ConstantModel { label: Label::Yes })).to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["kind"], "constant");
        assert_eq!(v["version"], 1);
    }

    #[test]
    fn batch_matches_single() {
        let (x, y) = toy();
        let m = NbModel::train(&x, &y).unwrap();
        let seq = predict_batch(&m, &x, Execution::Sequential).unwrap();
        let par = predict_batch(&m, &x, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq[0], m.predict(&x[0]).unwrap());
    }
}

use serde::{Deserialize, Serialize};

use super::{check_input, check_training, Classifier, Prediction, ScoreKind, EPSILON};
use crate::corpus::Label;
use crate::Result;

/// Per-feature Gaussian of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl GaussianParams {
    fn log_density(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.mean)
            .zip(&self.variance)
            .map(|((v, m), var)| {
                -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (v - m) * (v - m) / (2.0 * var)
            })
            .sum()
    }
}

/// Gaussian naive Bayes on raw (unstandardized) features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub prior_yes: f64,
    pub prior_no: f64,
    pub yes: GaussianParams,
    pub no: GaussianParams,
}

fn moments(rows: &[&Vec<f64>], dim: usize, floor: &[f64]) -> GaussianParams {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut variance = vec![0.0; dim];
    for row in rows {
        for ((s, v), m) in variance.iter_mut().zip(row.iter()).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    for (s, f) in variance.iter_mut().zip(floor) {
        *s = (*s / n).max(*f);
    }
    GaussianParams { mean, variance }
}

impl NbModel {
    /// Class priors are class frequencies; variances are population
    /// variances clamped at `1e-9 * max(1, pooled variance)` per feature.
    pub fn train(x: &[Vec<f64>], y: &[Label]) -> Result<Self> {
        let dim = check_training(x, y)?;
        let all: Vec<&Vec<f64>> = x.iter().collect();
        let pooled = moments(&all, dim, &vec![0.0; dim]);
        let floor: Vec<f64> = pooled
            .variance
            .iter()
            .map(|v| EPSILON * v.max(1.0))
            .collect();

        let yes: Vec<&Vec<f64>> = x
            .iter()
            .zip(y)
            .filter(|(_, &l)| l == Label::Yes)
            .map(|(r, _)| r)
            .collect();
        let no: Vec<&Vec<f64>> = x
            .iter()
            .zip(y)
            .filter(|(_, &l)| l == Label::No)
            .map(|(r, _)| r)
            .collect();
        let n = x.len() as f64;
        Ok(NbModel {
            prior_yes: yes.len() as f64 / n,
            prior_no: no.len() as f64 / n,
            yes: moments(&yes, dim, &floor),
            no: moments(&no, dim, &floor),
        })
    }

    /// `(log p(Yes) + log p(x|Yes)) - (log p(No) + log p(x|No))`.
    pub fn log_odds(&self, x: &[f64]) -> Result<f64> {
        check_input(x, self.yes.mean.len())?;
        let yes = self.prior_yes.ln() + self.yes.log_density(x);
        let no = self.prior_no.ln() + self.no.log_density(x);
        Ok(yes - no)
    }

    /// `(p(Yes|x), p(No|x))`.
    pub fn posteriors(&self, x: &[f64]) -> Result<(f64, f64)> {
        let d = self.log_odds(x)?;
        Ok((logistic(d), logistic(-d)))
    }
}

fn logistic(d: f64) -> f64 {
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

impl Classifier for NbModel {
    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let (p_yes, _) = self.posteriors(x)?;
        Ok(Prediction {
            label: if p_yes > 0.5 { Label::Yes } else { Label::No },
            score: p_yes,
            kind: ScoreKind::Posterior,
        })
    }
}

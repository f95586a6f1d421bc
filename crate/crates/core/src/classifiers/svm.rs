use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_input, check_training, Classifier, Prediction, ScoreKind, Standardizer};
use crate::corpus::Label;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-3,
            epochs: 50,
            seed: 13,
        }
    }
}

/// Linear SVM trained with Pegasos on standardized features.
///
/// The bias is handled as the weight of a constant extra feature, so it is
/// regularized together with the weights. The returned hyperplane is the
/// running average of all iterates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub standardizer: Standardizer,
    pub params: SvmParams,
}

fn sign(l: Label) -> f64 {
    match l {
        Label::Yes => 1.0,
        Label::No => -1.0,
    }
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// `lambda/2 * |w|^2 + mean hinge loss`, with the bias as the last weight.
fn objective(w: &[f64], xs: &[Vec<f64>], ys: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * dot(w, x)).max(0.0))
        .sum();
    0.5 * lambda * dot(w, w) + hinge / xs.len() as f64
}

impl SvmModel {
    pub fn train(x: &[Vec<f64>], y: &[Label], params: SvmParams) -> Result<Self> {
        Self::train_traced(x, y, params).map(|(m, _)| m)
    }

    /// Trains and returns the objective evaluated at the end of every epoch.
    pub fn train_traced(
        x: &[Vec<f64>],
        y: &[Label],
        params: SvmParams,
    ) -> Result<(Self, Vec<f64>)> {
        let dim = check_training(x, y)?;
        if !(params.lambda > 0.0 && params.lambda.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "lambda must be positive, got {}",
                params.lambda
            )));
        }
        if params.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be at least 1".into()));
        }
        let standardizer = Standardizer::fit(x);
        // standardized rows with a trailing 1.0 for the bias
        let xs: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                let mut z = standardizer.apply(r);
                z.push(1.0);
                z
            })
            .collect();
        let ys: Vec<f64> = y.iter().map(|&l| sign(l)).collect();

        let radius = 1.0 / params.lambda.sqrt();
        let mut w = vec![0.0; dim + 1];
        let mut avg = vec![0.0; dim + 1];
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let mut trace = Vec::with_capacity(params.epochs);
        let mut t = 0u64;
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (params.lambda * t as f64);
                let margin = ys[i] * dot(&w, &xs[i]);
                let shrink = 1.0 - eta * params.lambda;
                w.iter_mut().for_each(|v| *v *= shrink);
                if margin < 1.0 {
                    for (v, xi) in w.iter_mut().zip(&xs[i]) {
                        *v += eta * ys[i] * xi;
                    }
                }
                let norm = dot(&w, &w).sqrt();
                if norm > radius {
                    let s = radius / norm;
                    w.iter_mut().for_each(|v| *v *= s);
                }
                let k = 1.0 / t as f64;
                for (a, v) in avg.iter_mut().zip(&w) {
                    *a += (v - *a) * k;
                }
            }
            trace.push(objective(&avg, &xs, &ys, params.lambda));
        }
        let bias = avg.pop().expect("bias slot");
        Ok((
            SvmModel {
                weights: avg,
                bias,
                standardizer,
                params,
            },
            trace,
        ))
    }

    /// `w . standardize(x) + b`.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        check_input(x, self.weights.len())?;
        Ok(dot(&self.weights, &self.standardizer.apply(x)) + self.bias)
    }
}

impl Classifier for SvmModel {
    fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let score = self.decision(x)?;
        Ok(Prediction {
            label: if score > 0.0 { Label::Yes } else { Label::No },
            score,
            kind: ScoreKind::Margin,
        })
    }
}

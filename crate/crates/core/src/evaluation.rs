//! Agreement between human and machine labels.
//!
//! Confusion matrices are oriented with human judgements as rows and
//! classifier output as columns. Weighted precision/recall/F average the
//! per-class values by human (row) support, so weighted recall always equals
//! accuracy.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classifiers::Prediction;
use crate::corpus::Label;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub yes_yes: u64,
    pub yes_no: u64,
    pub no_yes: u64,
    pub no_no: u64,
}

impl ConfusionMatrix {
    pub fn new(yes_yes: u64, yes_no: u64, no_yes: u64, no_no: u64) -> Self {
        ConfusionMatrix {
            yes_yes,
            yes_no,
            no_yes,
            no_no,
        }
    }

    pub fn from_labels(human: &[Label], machine: &[Label]) -> Result<Self> {
        if human.len() != machine.len() {
            return Err(Error::LengthMismatch {
                left: human.len(),
                right: machine.len(),
            });
        }
        if human.is_empty() {
            return Err(Error::InvalidInput("no labels to compare".into()));
        }
        let mut cm = ConfusionMatrix::default();
        for (h, m) in human.iter().zip(machine) {
            cm.record(*h, *m);
        }
        Ok(cm)
    }

    pub fn record(&mut self, human: Label, machine: Label) {
        let cell = match (human, machine) {
            (Label::Yes, Label::Yes) => &mut self.yes_yes,
            (Label::Yes, Label::No) => &mut self.yes_no,
            (Label::No, Label::Yes) => &mut self.no_yes,
            (Label::No, Label::No) => &mut self.no_no,
        };
        *cell += 1;
    }

    pub fn total(&self) -> u64 {
        self.yes_yes + self.yes_no + self.no_yes + self.no_no
    }

    pub fn agreements(&self) -> u64 {
        self.yes_yes + self.no_no
    }

    pub fn disagreements(&self) -> u64 {
        self.yes_no + self.no_yes
    }

    /// Human (row) total for a class.
    pub fn human_total(&self, l: Label) -> u64 {
        match l {
            Label::Yes => self.yes_yes + self.yes_no,
            Label::No => self.no_yes + self.no_no,
        }
    }

    /// Machine (column) total for a class.
    pub fn machine_total(&self, l: Label) -> u64 {
        match l {
            Label::Yes => self.yes_yes + self.no_yes,
            Label::No => self.yes_no + self.no_no,
        }
    }

    pub fn correct(&self, l: Label) -> u64 {
        match l {
            Label::Yes => self.yes_yes,
            Label::No => self.no_no,
        }
    }
}

/// `num / den`, or 0 with `undefined = true` when `den == 0`.
fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub yes: ClassScores,
    pub no: ClassScores,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f_measure: f64,
    pub kappa: f64,
    /// Expected agreement was 1, so kappa is set by convention.
    pub kappa_undefined: bool,
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    pub fn class(&self, l: Label) -> &ClassScores {
        match l {
            Label::Yes => &self.yes,
            Label::No => &self.no,
        }
    }
}

fn class_scores(cm: &ConfusionMatrix, l: Label) -> ClassScores {
    let (precision, precision_undefined) = ratio(cm.correct(l), cm.machine_total(l));
    let (recall, recall_undefined) = ratio(cm.correct(l), cm.human_total(l));
    ClassScores {
        precision,
        recall,
        f_measure: harmonic(precision, recall),
        precision_undefined,
        recall_undefined,
    }
}

/// Rate metrics of a confusion matrix. `mae`/`rmse` are left empty.
pub fn metrics(cm: &ConfusionMatrix) -> Result<EvalReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidInput("empty confusion matrix".into()));
    }
    let n = total as f64;
    let yes = class_scores(cm, Label::Yes);
    let no = class_scores(cm, Label::No);
    let (wy, wn) = (
        cm.human_total(Label::Yes) as f64,
        cm.human_total(Label::No) as f64,
    );
    let weighted = |a: f64, b: f64| (wy * a + wn * b) / n;

    let p_o = cm.agreements() as f64 / n;
    let p_e = (cm.human_total(Label::Yes) as f64 * cm.machine_total(Label::Yes) as f64
        + cm.human_total(Label::No) as f64 * cm.machine_total(Label::No) as f64)
        / (n * n);
    // p_e == 1 only when every item sits in one diagonal cell
    let (kappa, kappa_undefined) = if p_e >= 1.0 {
        (1.0, true)
    } else {
        ((p_o - p_e) / (1.0 - p_e), false)
    };

    Ok(EvalReport {
        accuracy: p_o,
        weighted_precision: weighted(yes.precision, no.precision),
        weighted_recall: weighted(yes.recall, no.recall),
        weighted_f_measure: weighted(yes.f_measure, no.f_measure),
        yes,
        no,
        kappa,
        kappa_undefined,
        mae: None,
        rmse: None,
        confusion: *cm,
    })
}

/// Mean absolute and root-mean-square error of scores against 0/1 truth.
pub fn error_scores(truth: &[Label], scores: &[f64]) -> Result<(f64, f64)> {
    if truth.len() != scores.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: scores.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("no scores to compare".into()));
    }
    if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::InvalidInput(format!("score {s} outside [0, 1]")));
    }
    let n = truth.len() as f64;
    let (abs, sq) = truth.iter().zip(scores).fold((0.0, 0.0), |(a, s), (t, p)| {
        let d = t.indicator() - p;
        (a + d.abs(), s + d * d)
    });
    Ok((abs / n, (sq / n).sqrt()))
}

/// Confusion matrix, rate metrics and error scores in one report.
pub fn report(human: &[Label], predictions: &[Prediction]) -> Result<EvalReport> {
    let machine: Vec<Label> = predictions.iter().map(|p| p.label).collect();
    let cm = ConfusionMatrix::from_labels(human, &machine)?;
    let mut rep = metrics(&cm)?;
    let scores: Vec<f64> = predictions.iter().map(Prediction::error_score).collect();
    let (mae, rmse) = error_scores(human, &scores)?;
    rep.mae = Some(mae);
    rep.rmse = Some(rmse);
    Ok(rep)
}

/// Metric table (3 and 4 decimals) followed by the confusion matrix.
pub fn render_text(rep: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<22}{:>8}{:>10}", "Metric", "Value", "(4 dp)");
    let opt = |v: Option<f64>| {
        v.map_or(("n/a".to_string(), "n/a".to_string()), |v| {
            (format!("{v:.3}"), format!("{v:.4}"))
        })
    };
    let rows = [
        ("Mean Absolute Error", opt(rep.mae)),
        ("Root Mean Square Error", opt(rep.rmse)),
        ("Kappa Statistics", opt(Some(rep.kappa))),
        ("Precision", opt(Some(rep.weighted_precision))),
        ("Recall", opt(Some(rep.weighted_recall))),
        ("F-Measure", opt(Some(rep.weighted_f_measure))),
        ("Accuracy", opt(Some(rep.accuracy))),
    ];
    for (name, (a, b)) in rows {
        let _ = writeln!(out, "{name:<22}{a:>8}{b:>10}");
    }
    let mut flags = Vec::new();
    for (name, c) in [("Yes", &rep.yes), ("No", &rep.no)] {
        if c.precision_undefined {
            flags.push(format!(
                "{name}-class precision undefined (no {name} predictions), reported as 0"
            ));
        }
        if c.recall_undefined {
            flags.push(format!(
                "{name}-class recall undefined (no {name} references), reported as 0"
            ));
        }
    }
    if rep.kappa_undefined {
        flags.push("kappa undefined (chance agreement is 1), reported as 1".into());
    }
    for f in flags {
        let _ = writeln!(out, "note: {f}");
    }

    let cm = &rep.confusion;
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<16}{:>8}{:>8}{:>8}",
        "Human \\ Machine", "Yes", "No", "Total"
    );
    for l in [Label::Yes, Label::No] {
        let (a, b) = match l {
            Label::Yes => (cm.yes_yes, cm.yes_no),
            Label::No => (cm.no_yes, cm.no_no),
        };
        let _ = writeln!(
            out,
            "{:<16}{:>8}{:>8}{:>8}",
            l.as_str(),
            a,
            b,
            cm.human_total(l)
        );
    }
    let _ = writeln!(
        out,
        "{:<16}{:>8}{:>8}{:>8}",
        "Total",
        cm.machine_total(Label::Yes),
        cm.machine_total(Label::No),
        cm.total()
    );
    out
}

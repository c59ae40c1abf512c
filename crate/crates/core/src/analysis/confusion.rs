use serde::{Deserialize, Serialize};

use crate::error::domain;
use crate::Result;

/// Binary confusion counts. "Positive" means the slot is used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, predicted_used: bool, used: bool) {
        match (predicted_used, used) {
            (true, true) => self.tp += 1,
            (false, true) => self.fn_ += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }
}

/// Tallies predicted-used flags against actual usage.
pub fn confusion(flags: &[bool], targets: &[bool]) -> Result<ConfusionMatrix> {
    if flags.len() != targets.len() {
        return Err(domain(format!(
            "{} predictions for {} targets",
            flags.len(),
            targets.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&f, &t) in flags.iter().zip(targets) {
        cm.record(f, t);
    }
    Ok(cm)
}

/// Derived ratios; `None` marks a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(domain("metrics of an empty confusion matrix"));
    }
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    // Harmonic mean; it tends to 0 when both ratios do.
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Ok(Metrics {
        accuracy: (cm.tp + cm.tn) as f64 / total as f64,
        precision,
        recall,
        f1,
    })
}

/// Fixed-decimal rendering with `undefined` for missing ratios.
pub fn fmt_ratio(value: Option<f64>, decimals: usize) -> String {
    match value {
        Some(v) => format!("{v:.decimals$}"),
        None => "undefined".to_string(),
    }
}

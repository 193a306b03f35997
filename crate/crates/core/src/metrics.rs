//! Recall, precision, false alarm and AUC.
//!
//! Zero denominators are reported as [`MetricError`] variants rather than
//! collapsing to 0, so downstream medians never absorb fabricated values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("predicted and actual lengths differ ({predicted} vs {actual})")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("no instances to evaluate")]
    Empty,
    #[error("undefined: no actual positives")]
    NoPositives,
    #[error("undefined: no predicted positives")]
    NoPredictedPositives,
    #[error("undefined: no actual negatives")]
    NoNegatives,
    #[error("undefined: scores cover a single class")]
    SingleClass,
}

/// Counts from comparing predictions with ground truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(predicted: &[bool], actual: &[bool]) -> Result<ConfusionMatrix, MetricError> {
    if predicted.len() != actual.len() {
        return Err(MetricError::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p, a) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Probability of detection, `tp / (tp + fn)`.
pub fn recall(cm: &ConfusionMatrix) -> Result<f64, MetricError> {
    ratio(cm.tp, cm.tp + cm.fn_, MetricError::NoPositives)
}

pub fn precision(cm: &ConfusionMatrix) -> Result<f64, MetricError> {
    ratio(cm.tp, cm.tp + cm.fp, MetricError::NoPredictedPositives)
}

/// Probability of false alarm, `fp / (fp + tn)`.
pub fn false_alarm(cm: &ConfusionMatrix) -> Result<f64, MetricError> {
    ratio(cm.fp, cm.fp + cm.tn, MetricError::NoNegatives)
}

fn ratio(num: usize, den: usize, undefined: MetricError) -> Result<f64, MetricError> {
    if den == 0 {
        Err(undefined)
    } else {
        Ok(num as f64 / den as f64)
    }
}

/// Area under the ROC curve via the Mann-Whitney rank-sum statistic with
/// midranks for tied scores.
pub fn auc(scores: &[f64], actual: &[bool]) -> Result<f64, MetricError> {
    if scores.len() != actual.len() {
        return Err(MetricError::LengthMismatch {
            predicted: scores.len(),
            actual: actual.len(),
        });
    }
    let n_pos = actual.iter().filter(|&&a| a).count();
    let n_neg = actual.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share their mean
        let midrank = (i + j + 2) as f64 / 2.0;
        let pos_in_run = order[i..=j].iter().filter(|&&k| actual[k]).count();
        pos_rank_sum += midrank * pos_in_run as f64;
        i = j + 1;
    }
    let n_pos_f = n_pos as f64;
    let u = pos_rank_sum - n_pos_f * (n_pos_f + 1.0) / 2.0;
    Ok(u / (n_pos_f * n_neg as f64))
}

/// Whether larger values of a measure are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Recall,
    Precision,
    FalseAlarm,
    Auc,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::Recall,
        Measure::Precision,
        Measure::FalseAlarm,
        Measure::Auc,
    ];

    pub fn direction(self) -> Direction {
        match self {
            Measure::FalseAlarm => Direction::Minimize,
            _ => Direction::Maximize,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::Recall => "recall",
            Measure::Precision => "precision",
            Measure::FalseAlarm => "false_alarm",
            Measure::Auc => "auc",
        }
    }

    /// Evaluates this measure from thresholded predictions and raw scores.
    pub fn evaluate(
        self,
        predicted: &[bool],
        scores: &[f64],
        actual: &[bool],
    ) -> Result<f64, MetricError> {
        match self {
            Measure::Auc => auc(scores, actual),
            Measure::Recall => recall(&confusion(predicted, actual)?),
            Measure::Precision => precision(&confusion(predicted, actual)?),
            Measure::FalseAlarm => false_alarm(&confusion(predicted, actual)?),
        }
    }

    /// Maps a value onto a larger-is-better scale.
    pub fn oriented(self, value: f64) -> f64 {
        match self.direction() {
            Direction::Maximize => value,
            Direction::Minimize => -value,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "recall" | "pd" => Ok(Measure::Recall),
            "precision" | "prec" => Ok(Measure::Precision),
            "false_alarm" | "false-alarm" | "pf" => Ok(Measure::FalseAlarm),
            "auc" => Ok(Measure::Auc),
            other => Err(format!(
                "unknown measure `{other}` (expected recall, precision, false_alarm or auc)"
            )),
        }
    }
}

//! Six classifiers behind one train/score interface.
//!
//! Hyperparameters are frozen per kind; nothing in the crate tunes them.
//! Every model maps an instance to a real score where larger means "more
//! likely defective", and [`Model::predict`] thresholds that score at
//! [`LearnerKind::threshold`].

mod bayes;
mod forest;
mod knn;
mod logistic;
mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;

pub use forest::{FOREST_TREES, MIN_LEAF};
pub use knn::NEIGHBORS;
pub use logistic::{LR_MAX_ITERATIONS, LR_PENALTY, LR_TOLERANCE};
pub use svm::{SVM_EPOCHS, SVM_REGULARIZATION};
pub use bayes::VARIANCE_FLOOR;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearnError {
    #[error("training data is empty")]
    Empty,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("row {row}, feature {feature} is not finite")]
    NonFinite { row: usize, feature: usize },
    #[error("instance has {found} features, model was trained on {expected}")]
    Arity { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    /// Random forest of entropy trees.
    Rf,
    /// L2-penalized logistic regression.
    Lr,
    /// k-nearest neighbours, k = 8.
    Knn,
    /// Gaussian naive Bayes.
    Nb,
    /// Single entropy decision tree.
    Dt,
    /// Linear hinge-loss SVM.
    Svm,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 6] = [
        LearnerKind::Rf,
        LearnerKind::Lr,
        LearnerKind::Knn,
        LearnerKind::Nb,
        LearnerKind::Dt,
        LearnerKind::Svm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Rf => "rf",
            LearnerKind::Lr => "lr",
            LearnerKind::Knn => "knn",
            LearnerKind::Nb => "nb",
            LearnerKind::Dt => "dt",
            LearnerKind::Svm => "svm",
        }
    }

    /// Decision threshold applied to scores: 0 for margins, 0.5 for probabilities.
    pub fn threshold(self) -> f64 {
        match self {
            LearnerKind::Svm => 0.0,
            _ => 0.5,
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown learner `{s}` (expected rf, lr, knn, nb, dt or svm)"))
    }
}

/// A learner kind plus the seed for its internal randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn train(&self, d: &Dataset) -> Result<Model, LearnError> {
        train(self, d)
    }
}

#[derive(Debug, Clone)]
enum Inner {
    Forest(forest::Forest),
    Logistic(logistic::Logistic),
    Knn(knn::Knn),
    Bayes(bayes::GaussianNb),
    Tree(tree::Tree),
    Svm(svm::LinearSvm),
}

/// A trained classifier. Immutable; safe to score from many threads.
#[derive(Debug, Clone)]
pub struct Model {
    kind: LearnerKind,
    n_features: usize,
    inner: Inner,
}

pub fn train(spec: &LearnerSpec, d: &Dataset) -> Result<Model, LearnError> {
    if d.is_empty() {
        return Err(LearnError::Empty);
    }
    if !d.has_both_classes() {
        return Err(LearnError::SingleClass);
    }
    for (i, row) in d.rows().iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite { row: i, feature: j });
        }
    }
    let (x, y) = (d.rows(), d.labels());
    let inner = match spec.kind {
        LearnerKind::Rf => Inner::Forest(forest::Forest::fit(x, y, spec.seed)),
        LearnerKind::Lr => Inner::Logistic(logistic::Logistic::fit(x, y)),
        LearnerKind::Knn => Inner::Knn(knn::Knn::fit(x, y)),
        LearnerKind::Nb => Inner::Bayes(bayes::GaussianNb::fit(x, y)),
        LearnerKind::Dt => Inner::Tree(tree::Tree::fit(x, y, None)),
        LearnerKind::Svm => Inner::Svm(svm::LinearSvm::fit(x, y, spec.seed)),
    };
    Ok(Model {
        kind: spec.kind,
        n_features: d.n_features(),
        inner,
    })
}

impl Model {
    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    pub fn training_feature_count(&self) -> usize {
        self.n_features
    }

    pub fn threshold(&self) -> f64 {
        self.kind.threshold()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64, LearnError> {
        if x.len() != self.n_features {
            return Err(LearnError::Arity {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(self.score_unchecked(x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<bool, LearnError> {
        Ok(self.score(x)? >= self.threshold())
    }

    /// Scores and thresholded predictions for every row of `d`.
    pub fn evaluate(&self, d: &Dataset) -> Result<(Vec<f64>, Vec<bool>), LearnError> {
        if d.n_features() != self.n_features {
            return Err(LearnError::Arity {
                expected: self.n_features,
                found: d.n_features(),
            });
        }
        let scores: Vec<f64> = d.rows().iter().map(|x| self.score_unchecked(x)).collect();
        let t = self.threshold();
        let predicted = scores.iter().map(|&s| s >= t).collect();
        Ok((scores, predicted))
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        match &self.inner {
            Inner::Forest(m) => m.score(x),
            Inner::Logistic(m) => m.score(x),
            Inner::Knn(m) => m.score(x),
            Inner::Bayes(m) => m.score(x),
            Inner::Tree(m) => m.score(x),
            Inner::Svm(m) => m.score(x),
        }
    }
}

/// Per-feature standardization fitted on training data. Constant features
/// keep unit scale so they map to zero.
#[derive(Debug, Clone)]
pub(crate) struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub(crate) fn fit(x: &[Vec<f64>]) -> Self {
        let n = x.len() as f64;
        let p = x[0].len();
        let mut mean = vec![0.0; p];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

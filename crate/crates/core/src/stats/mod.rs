//! Effect size, bootstrap significance, and Scott-Knott ranking.

mod scott_knott;

use rand::Rng as _;
use thiserror::Error;

use crate::seed;

pub use scott_knott::{
    best_split, expected_delta, scott_knott, RankGroup, RankedGroups, ScottKnottConfig,
    TreatmentSamples,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("no treatments to rank")]
    NoTreatments,
    #[error("treatment `{0}` has no values")]
    EmptyTreatment(String),
    #[error("treatment `{0}` contains a non-finite value")]
    NonFinite(String),
    #[error("bootstrap needs at least 100 iterations, got {0}")]
    TooFewIterations(usize),
    #[error("confidence must lie in (0, 1), got {0}")]
    BadConfidence(f64),
}

/// Vargha-Delaney A12: probability that a value drawn from `xs` exceeds one
/// drawn from `ys`, counting ties as one half.
pub fn a12(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut sorted = ys.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for &x in xs {
        let below = sorted.partition_point(|&y| y < x);
        let not_above = sorted.partition_point(|&y| y <= x);
        wins += below as f64 + 0.5 * (not_above - below) as f64;
    }
    Ok(wins / (xs.len() * ys.len()) as f64)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Conventional median (mean of the two middle values for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Two-sample bootstrap test on the difference of means.
///
/// Both samples are shifted onto the pooled mean to build the null, then
/// resampled with replacement `iterations` times. The difference is
/// significant when resampled absolute differences reach the observed one
/// in fewer than `1 - confidence` of the iterations.
pub fn bootstrap_significant(
    xs: &[f64],
    ys: &[f64],
    iterations: usize,
    confidence: f64,
    seed: u64,
) -> Result<bool, StatsError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if iterations < 100 {
        return Err(StatsError::TooFewIterations(iterations));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::BadConfidence(confidence));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let observed = (mx - my).abs();
    let pooled = (xs.iter().sum::<f64>() + ys.iter().sum::<f64>()) / (xs.len() + ys.len()) as f64;
    let x0: Vec<f64> = xs.iter().map(|x| x - mx + pooled).collect();
    let y0: Vec<f64> = ys.iter().map(|y| y - my + pooled).collect();

    let mut rng = seed::rng(seed);
    let mut resample_mean = |v: &[f64]| -> f64 {
        (0..v.len()).map(|_| v[rng.random_range(0..v.len())]).sum::<f64>() / v.len() as f64
    };
    let mut reached = 0usize;
    for _ in 0..iterations {
        let dx = resample_mean(&x0);
        let dy = resample_mean(&y0);
        if (dx - dy).abs() >= observed {
            reached += 1;
        }
    }
    Ok((reached as f64 / iterations as f64) < 1.0 - confidence)
}

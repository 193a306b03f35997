//! Differential evolution over SMOTE's parameter space, and SMOTUNED.

mod de;
mod smotuned;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::resample::{SmoteParams, K_RANGE, M_GRID, R_RANGE};

pub use de::{de_optimize, Bounds, Candidate, DeOutcome, EvalKey};
pub use smotuned::{smotuned, TuneOutcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TuneError {
    #[error("invalid DE configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid search bounds: {0}")]
    InvalidBounds(String),
    #[error("need at least two folds (training + validation), got {0}")]
    TooFewFolds(usize),
    #[error("fold {0} is empty")]
    EmptyFold(usize),
    #[error("training folds contain a single class")]
    DegenerateTraining,
    #[error("validation fold contains a single class")]
    DegenerateValidation,
}

/// Differential-evolution constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    /// Frontier size.
    pub n: usize,
    /// Crossover probability.
    pub cf: f64,
    /// Differential weight.
    pub f: f64,
    /// Generations granted up front; each improvement of the best adds one.
    pub lives: usize,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            n: 10,
            cf: 0.3,
            f: 0.7,
            lives: 1,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<(), TuneError> {
        if self.n < 4 {
            return Err(TuneError::InvalidConfig(format!(
                "population must be >= 4, got {}",
                self.n
            )));
        }
        if !(self.cf > 0.0 && self.cf < 1.0) {
            return Err(TuneError::InvalidConfig(format!(
                "cf must lie in (0, 1), got {}",
                self.cf
            )));
        }
        if !(self.f > 0.0 && self.f < 2.0) {
            return Err(TuneError::InvalidConfig(format!(
                "f must lie in (0, 2), got {}",
                self.f
            )));
        }
        if self.lives == 0 {
            return Err(TuneError::InvalidConfig("lives must be >= 1".into()));
        }
        Ok(())
    }
}

/// Continuous search box for `(k, m, r)`.
pub fn smote_space() -> Bounds {
    Bounds::new(
        vec![K_RANGE.0 as f64, f64::from(M_GRID[0]), R_RANGE.0],
        vec![K_RANGE.1 as f64, f64::from(M_GRID[M_GRID.len() - 1]), R_RANGE.1],
    )
    .expect("static bounds are valid")
}

/// Maps a continuous `(k, m, r)` position onto legal SMOTE parameters:
/// `k` rounded and clamped, `m` snapped to the nearest grid value (lower on
/// ties), `r` clamped. Missing or NaN coordinates take the lower bound.
pub fn decode(position: &[f64]) -> SmoteParams {
    let coord = |i: usize, lo: f64| position.get(i).copied().filter(|v| !v.is_nan()).unwrap_or(lo);

    let k = coord(0, K_RANGE.0 as f64)
        .round()
        .clamp(K_RANGE.0 as f64, K_RANGE.1 as f64) as usize;
    let raw_m = coord(1, f64::from(M_GRID[0]));
    let m = M_GRID
        .iter()
        .copied()
        .min_by(|&a, &b| {
            (f64::from(a) - raw_m)
                .abs()
                .total_cmp(&(f64::from(b) - raw_m).abs())
                .then(a.cmp(&b))
        })
        .expect("grid is non-empty");
    let r = coord(2, R_RANGE.0).clamp(R_RANGE.0, R_RANGE.1);
    SmoteParams { k, m, r }
}

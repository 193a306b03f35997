//! SMOTE with tunable `(k, m, r)`, its neighbour machinery, and the
//! MAHAKIL oversampler.

mod mahakil;
mod neighbors;
mod smote;

use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mahakil::{mahakil, mahalanobis_ranking};
pub use neighbors::{nearest_same_class, NeighborIndex, SearchStrategy, SEARCH_LIMIT};
pub use smote::{smote, smote_target, smote_with};

use crate::seed::Rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResampleError {
    #[error("vectors have different lengths ({left} vs {right})")]
    Arity { left: usize, right: usize },
    #[error("Minkowski exponent must be positive, got {0}")]
    BadExponent(f64),
    #[error("invalid SMOTE parameters: {0}")]
    InvalidParams(String),
    #[error("instance index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("the minority class is empty")]
    EmptyMinority,
    #[error("minority class has {found} instances, at least {required} are needed")]
    MinorityTooSmall { found: usize, required: usize },
    #[error("minority covariance is degenerate even after regularization")]
    DegenerateCovariance,
}

/// Allowed values of `m`, the per-class target as a percent of the input size.
pub const M_GRID: [u32; 4] = [50, 100, 200, 400];
pub const K_RANGE: (usize, usize) = (1, 20);
pub const R_RANGE: (f64, f64) = (0.1, 5.0);

/// SMOTE control parameters.
///
/// `m` is read as a percentage of the input size: each class is driven to
/// `round(m / 100 * n / 2)` rows, so `m = 100` yields a balanced set of the
/// original size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteParams {
    pub k: usize,
    pub m: u32,
    pub r: f64,
}

impl Default for SmoteParams {
    fn default() -> Self {
        SmoteParams { k: 5, m: 50, r: 2.0 }
    }
}

impl SmoteParams {
    pub fn new(k: usize, m: u32, r: f64) -> Result<Self, ResampleError> {
        let p = SmoteParams { k, m, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ResampleError> {
        if !(K_RANGE.0..=K_RANGE.1).contains(&self.k) {
            return Err(ResampleError::InvalidParams(format!(
                "k = {} outside [{}, {}]",
                self.k, K_RANGE.0, K_RANGE.1
            )));
        }
        if !M_GRID.contains(&self.m) {
            return Err(ResampleError::InvalidParams(format!(
                "m = {} not one of {:?}",
                self.m, M_GRID
            )));
        }
        if !(R_RANGE.0..=R_RANGE.1).contains(&self.r) {
            return Err(ResampleError::InvalidParams(format!(
                "r = {} outside [{}, {}]",
                self.r, R_RANGE.0, R_RANGE.1
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SmoteParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={} m={} r={}", self.k, self.m, self.r)
    }
}

/// `(sum_i |a_i - b_i|^r)^(1/r)`.
pub fn minkowski_distance(a: &[f64], b: &[f64], r: f64) -> Result<f64, ResampleError> {
    if a.len() != b.len() {
        return Err(ResampleError::Arity {
            left: a.len(),
            right: b.len(),
        });
    }
    if !(r > 0.0) {
        return Err(ResampleError::BadExponent(r));
    }
    Ok(minkowski(a, b, r))
}

pub(crate) fn minkowski(a: &[f64], b: &[f64], r: f64) -> f64 {
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    if r == 1.0 {
        diffs.sum()
    } else if r == 2.0 {
        diffs.map(|d| d * d).sum::<f64>().sqrt()
    } else {
        diffs.map(|d| d.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Point on the segment `[x0, z]` at fraction `u`.
pub fn interpolate(x0: &[f64], z: &[f64], u: f64) -> Result<Vec<f64>, ResampleError> {
    if x0.len() != z.len() {
        return Err(ResampleError::Arity {
            left: x0.len(),
            right: z.len(),
        });
    }
    Ok(x0.iter().zip(z).map(|(a, b)| a + u * (b - a)).collect())
}

/// Interpolates with one `u ~ U[0, 1)` drawn from `rng` for the whole instance.
pub fn synthesize(x0: &[f64], z: &[f64], rng: &mut Rng) -> Result<Vec<f64>, ResampleError> {
    let u: f64 = rng.random();
    interpolate(x0, z, u)
}

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;

use super::{DeConfig, TuneError};
use crate::seed;

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, TuneError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(TuneError::InvalidBounds(format!(
                "{} lower vs {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(TuneError::InvalidBounds("each lower bound must be <= its upper bound".into()));
        }
        Ok(Bounds { lower, upper })
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| (*l..=*u).contains(v))
    }

    fn clamp(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }
}

/// Where an evaluation happens in the run: generation 0 is the initial
/// frontier. Fitness functions key any internal randomness on this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EvalKey {
    pub generation: usize,
    pub member: usize,
}

/// A point of the search space and its fitness (`None` until evaluated).
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub position: Vec<f64>,
    pub fitness: Option<f64>,
}

impl Candidate {
    pub fn params(&self) -> crate::resample::SmoteParams {
        super::decode(&self.position)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeOutcome {
    /// Best candidate ever seen.
    pub best: Candidate,
    /// Generations run after the initial frontier.
    pub generations: usize,
    /// Total fitness calls, initial frontier included.
    pub evaluations: usize,
    /// Incumbent best fitness after initialization and after each generation.
    pub history: Vec<f64>,
    /// Frontier fitness values at termination.
    pub final_frontier: Vec<f64>,
}

/// Maximizes `fitness` over `space`.
///
/// Each generation builds, for every frontier member `old`, a trial `new`
/// that copies `old` and, per coordinate with probability `cf`, takes
/// `x_j + f * (z_j - y_j)` from three distinct other members. Trials are
/// clamped to the box. `new` replaces `old` only on strict improvement, and
/// every time the surviving member beats the incumbent best one life is
/// added. One life is spent per generation; the run ends when none remain.
///
/// Trials are generated before any is evaluated, so a generation's fitness
/// calls run in parallel without affecting the result.
pub fn de_optimize<F>(
    space: &Bounds,
    fitness: F,
    cfg: &DeConfig,
    seed: u64,
) -> Result<DeOutcome, TuneError>
where
    F: Fn(&[f64], EvalKey) -> f64 + Sync,
{
    cfg.validate()?;
    let n = cfg.n;
    let mut rng = seed::rng(seed);
    let eval = |positions: &[Vec<f64>], generation: usize| -> Vec<f64> {
        positions
            .par_iter()
            .enumerate()
            .map(|(member, p)| {
                let v = fitness(p, EvalKey { generation, member });
                if v.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    v
                }
            })
            .collect()
    };

    let mut frontier: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            space
                .lower
                .iter()
                .zip(&space.upper)
                .map(|(&l, &u)| if l < u { rng.random_range(l..=u) } else { l })
                .collect()
        })
        .collect();
    let mut scores = eval(&frontier, 0);
    let mut evaluations = n;
    let mut best = (frontier[0].clone(), scores[0]);
    let mut history = vec![best.1];
    let mut lives = cfg.lives;
    let mut generation = 0;

    while lives > 0 {
        lives -= 1;
        generation += 1;
        let trials: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                // three distinct members other than i
                let picks: Vec<usize> = index::sample(&mut rng, n - 1, 3)
                    .into_iter()
                    .map(|j| if j >= i { j + 1 } else { j })
                    .collect();
                let (x, y, z) = (&frontier[picks[0]], &frontier[picks[1]], &frontier[picks[2]]);
                let mut new = frontier[i].clone();
                for j in 0..new.len() {
                    if rng.random::<f64>() < cfg.cf {
                        new[j] = x[j] + cfg.f * (z[j] - y[j]);
                    }
                }
                space.clamp(&mut new);
                new
            })
            .collect();
        let trial_scores = eval(&trials, generation);
        evaluations += n;

        for (i, (trial, score)) in trials.into_iter().zip(trial_scores).enumerate() {
            if score > scores[i] {
                frontier[i] = trial;
                scores[i] = score;
            }
            if scores[i] > best.1 {
                best = (frontier[i].clone(), scores[i]);
                lives += 1;
            }
        }
        history.push(best.1);
    }

    Ok(DeOutcome {
        best: Candidate {
            position: best.0,
            fitness: Some(best.1),
        },
        generations: generation,
        evaluations,
        history,
        final_frontier: scores,
    })
}

use rand::Rng as _;

use super::tree::{FeatureSampling, Tree};
use crate::seed;

pub const FOREST_TREES: usize = 100;
pub const MIN_LEAF: usize = 1;

/// Bagged entropy trees with `ceil(sqrt(p))` features tried per node.
#[derive(Debug, Clone)]
pub(crate) struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[bool], seed: u64) -> Self {
        let n = x.len();
        let per_node = (x[0].len() as f64).sqrt().ceil() as usize;
        let trees = (0..FOREST_TREES)
            .map(|t| {
                let mut rng = seed::rng(seed::derive(seed, &[t as u64]));
                let bag: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                Tree::fit_on(
                    x,
                    y,
                    bag,
                    Some(FeatureSampling {
                        per_node,
                        rng: &mut rng,
                    }),
                )
            })
            .collect();
        Forest { trees }
    }

    /// Fraction of trees voting defective.
    pub(crate) fn score(&self, x: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.score(x) >= 0.5).count();
        votes as f64 / self.trees.len() as f64
    }
}

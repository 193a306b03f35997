use rand::seq::SliceRandom;

use super::Standardizer;
use crate::seed;

pub const SVM_REGULARIZATION: f64 = 1e-4;
pub const SVM_EPOCHS: usize = 200;

/// Linear SVM trained with the projected stochastic subgradient method
/// (step `1 / (lambda * t)`) on the hinge loss. The intercept is carried as
/// a constant feature. Score is the signed margin.
#[derive(Debug, Clone)]
pub(crate) struct LinearSvm {
    standardizer: Standardizer,
    // last entry multiplies the constant feature
    weights: Vec<f64>,
}

impl LinearSvm {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[bool], seed: u64) -> Self {
        let standardizer = Standardizer::fit(x);
        let z: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                let mut v = standardizer.apply(r);
                v.push(1.0);
                v
            })
            .collect();
        let sign: Vec<f64> = y.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
        let radius = 1.0 / SVM_REGULARIZATION.sqrt();

        let mut w = vec![0.0; z[0].len()];
        let mut order: Vec<usize> = (0..z.len()).collect();
        let mut t = 0usize;
        for epoch in 0..SVM_EPOCHS {
            order.shuffle(&mut seed::rng(seed::derive(seed, &[epoch as u64])));
            for &i in &order {
                t += 1;
                let eta = 1.0 / (SVM_REGULARIZATION * t as f64);
                let margin = sign[i] * dot(&w, &z[i]);
                let decay = 1.0 - eta * SVM_REGULARIZATION;
                w.iter_mut().for_each(|wi| *wi *= decay);
                if margin < 1.0 {
                    w.iter_mut()
                        .zip(&z[i])
                        .for_each(|(wi, v)| *wi += eta * sign[i] * v);
                }
                let norm = dot(&w, &w).sqrt();
                if norm > radius {
                    let s = radius / norm;
                    w.iter_mut().for_each(|wi| *wi *= s);
                }
            }
        }
        LinearSvm {
            standardizer,
            weights: w,
        }
    }

    pub(crate) fn score(&self, x: &[f64]) -> f64 {
        let z = self.standardizer.apply(x);
        let p = z.len();
        dot(&self.weights[..p], &z) + self.weights[p]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

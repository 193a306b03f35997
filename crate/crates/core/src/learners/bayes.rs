use super::sigmoid;

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone)]
struct ClassStats {
    log_prior: f64,
    mean: Vec<f64>,
    var: Vec<f64>,
}

impl ClassStats {
    fn fit(x: &[Vec<f64>], y: &[bool], label: bool, n_total: usize) -> Self {
        let rows: Vec<&Vec<f64>> = x.iter().zip(y).filter(|(_, &l)| l == label).map(|(r, _)| r).collect();
        let n = rows.len() as f64;
        let p = x[0].len();
        let mut mean = vec![0.0; p];
        for r in &rows {
            mean.iter_mut().zip(r.iter()).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for r in &rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s = (*s / n).max(VARIANCE_FLOOR));
        ClassStats {
            log_prior: (n / n_total as f64).ln(),
            mean,
            var,
        }
    }

    fn log_joint(&self, x: &[f64]) -> f64 {
        let ll: f64 = x
            .iter()
            .zip(&self.mean)
            .zip(&self.var)
            .map(|((v, m), s)| -0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m) * (v - m) / s))
            .sum();
        self.log_prior + ll
    }
}

/// Gaussian naive Bayes; the score is the posterior probability of the
/// defective class.
#[derive(Debug, Clone)]
pub(crate) struct GaussianNb {
    defective: ClassStats,
    clean: ClassStats,
}

impl GaussianNb {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[bool]) -> Self {
        GaussianNb {
            defective: ClassStats::fit(x, y, true, x.len()),
            clean: ClassStats::fit(x, y, false, x.len()),
        }
    }

    pub(crate) fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.defective.log_joint(x) - self.clean.log_joint(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_feature_survives() {
        let x = vec![vec![1.0, 0.0], vec![1.0, 0.1], vec![1.0, 5.0], vec![1.0, 5.2]];
        let m = GaussianNb::fit(&x, &[false, false, true, true]);
        let s = m.score(&[1.0, 5.1]);
        assert!(s.is_finite() && s > 0.5);
    }
}

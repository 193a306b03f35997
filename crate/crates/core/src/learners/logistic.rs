use super::{sigmoid, Standardizer};

pub const LR_PENALTY: f64 = 1.0;
pub const LR_MAX_ITERATIONS: usize = 1000;
pub const LR_TOLERANCE: f64 = 1e-6;

/// Logistic regression fitted by full-batch gradient descent on the
/// L2-penalized log-likelihood. Features are standardized internally; the
/// intercept is not penalized.
#[derive(Debug, Clone)]
pub(crate) struct Logistic {
    standardizer: Standardizer,
    weights: Vec<f64>,
    bias: f64,
}

impl Logistic {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[bool]) -> Self {
        let standardizer = Standardizer::fit(x);
        let z: Vec<Vec<f64>> = x.iter().map(|r| standardizer.apply(r)).collect();
        let n = z.len() as f64;
        let p = z[0].len();

        let step = 1.0 / lipschitz(&z);
        let mut w = vec![0.0; p];
        let mut b = 0.0;
        let mut grad = vec![0.0; p];
        for _ in 0..LR_MAX_ITERATIONS {
            grad.iter_mut().zip(&w).for_each(|(g, wi)| *g = LR_PENALTY * wi);
            let mut grad_b = 0.0;
            for (row, &label) in z.iter().zip(y) {
                let residual = sigmoid(dot(&w, row) + b) - f64::from(u8::from(label));
                grad.iter_mut().zip(row).for_each(|(g, v)| *g += residual * v);
                grad_b += residual;
            }
            grad.iter_mut().for_each(|g| *g /= n);
            grad_b /= n;
            let norm = (grad.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
            if norm < LR_TOLERANCE {
                break;
            }
            w.iter_mut().zip(&grad).for_each(|(wi, g)| *wi -= step * g);
            b -= step * grad_b;
        }
        Logistic {
            standardizer,
            weights: w,
            bias: b,
        }
    }

    pub(crate) fn score(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.weights, &self.standardizer.apply(x)) + self.bias)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Upper bound on the gradient's Lipschitz constant:
/// `0.25 * lambda_max(Z'Z / n) + penalty / n`, with the intercept column
/// folded into Z. The eigenvalue comes from power iteration.
fn lipschitz(z: &[Vec<f64>]) -> f64 {
    let n = z.len() as f64;
    let p = z[0].len() + 1;
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut lambda = 1.0;
    for _ in 0..50 {
        let mut next = vec![0.0; p];
        for row in z {
            let proj: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + v[p - 1];
            next.iter_mut().zip(row).for_each(|(o, a)| *o += proj * a);
            next[p - 1] += proj;
        }
        next.iter_mut().for_each(|o| *o /= n);
        let norm = next.iter().map(|o| o * o).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lambda = norm;
        v = next.into_iter().map(|o| o / norm).collect();
    }
    // power iteration approaches lambda_max from below
    1.05 * 0.25 * lambda + LR_PENALTY / n
}

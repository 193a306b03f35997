use rand::seq::index;

use super::ResampleError;
use crate::data::{minority_label, Dataset};
use crate::seed;

/// Smallest minority class MAHAKIL accepts.
pub const MIN_MINORITY: usize = 4;

/// Minority row indices ordered by decreasing Mahalanobis distance from the
/// minority mean (ties by index). The covariance gets `1e-6 * trace / dim`
/// added to its diagonal before inversion.
pub fn mahalanobis_ranking(d: &Dataset) -> Result<Vec<usize>, ResampleError> {
    let minority = minority_label(d);
    let idx: Vec<usize> = (0..d.len()).filter(|&i| d.labels()[i] == minority).collect();
    if idx.len() < MIN_MINORITY {
        return Err(ResampleError::MinorityTooSmall {
            found: idx.len(),
            required: MIN_MINORITY,
        });
    }
    let dim = d.n_features();
    let n = idx.len() as f64;
    let mut mean = vec![0.0; dim];
    for &i in &idx {
        mean.iter_mut().zip(d.row(i)).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = vec![vec![0.0; dim]; dim];
    for &i in &idx {
        let c: Vec<f64> = d.row(i).iter().zip(&mean).map(|(v, m)| v - m).collect();
        for a in 0..dim {
            for b in 0..=a {
                cov[a][b] += c[a] * c[b];
            }
        }
    }
    for a in 0..dim {
        for b in 0..=a {
            cov[a][b] /= n - 1.0;
            cov[b][a] = cov[a][b];
        }
    }
    let trace: f64 = (0..dim).map(|a| cov[a][a]).sum();
    if !(trace > 0.0 && trace.is_finite()) {
        return Err(ResampleError::DegenerateCovariance);
    }
    let ridge = 1e-6 * trace / dim as f64;
    for (a, row) in cov.iter_mut().enumerate() {
        row[a] += ridge;
    }
    let chol = cholesky(&cov).ok_or(ResampleError::DegenerateCovariance)?;

    let mut ranked: Vec<(f64, usize)> = idx
        .iter()
        .map(|&i| {
            let c: Vec<f64> = d.row(i).iter().zip(&mean).map(|(v, m)| v - m).collect();
            let y = forward_substitute(&chol, &c);
            (y.iter().map(|v| v * v).sum(), i)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(ranked.into_iter().map(|(_, i)| i).collect())
}

/// Lower-triangular `L` with `L L' = a`, or `None` if `a` is not positive definite.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = a[i][i] - s;
                if !(v > 0.0) {
                    return None;
                }
                l[i][j] = v.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

fn forward_substitute(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; b.len()];
    for i in 0..b.len() {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    y
}

/// Grows the minority class to exactly `target_minority` rows by inheritance.
///
/// The minority is ranked by Mahalanobis distance and split at the median
/// into two parent bins; the i-th parents of each bin produce a child equal
/// to their feature-wise mean. Each later generation pairs every family with
/// its neighbours in the lineage `[bin1, ..., bin2]` (children sit between
/// their parents), so each child generation mixes with the one it came
/// from. Generations repeat until the target is met; when the last
/// generation would overshoot, a seeded random subset of it is kept.
/// Original rows are preserved in place and children are appended.
pub fn mahakil(d: &Dataset, target_minority: usize, seed: u64) -> Result<Dataset, ResampleError> {
    let minority = minority_label(d);
    let current = d.labels().iter().filter(|&&l| l == minority).count();
    if target_minority <= current {
        return Ok(d.clone());
    }
    let ranked = mahalanobis_ranking(d)?;
    let half = ranked.len().div_ceil(2);
    let first: Vec<Vec<f64>> = ranked[..half].iter().map(|&i| d.row(i).to_vec()).collect();
    let second: Vec<Vec<f64>> = ranked[half..].iter().map(|&i| d.row(i).to_vec()).collect();

    let mut lineage = vec![first, second];
    let mut needed = target_minority - current;
    let mut children_out = Vec::with_capacity(needed);
    let mut generation = 0u64;
    while needed > 0 {
        let mut next = Vec::with_capacity(lineage.len() * 2 - 1);
        let mut born = Vec::new();
        for pair in lineage.windows(2) {
            let family: Vec<Vec<f64>> = pair[0]
                .iter()
                .zip(&pair[1])
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x + y) / 2.0).collect())
                .collect();
            born.extend(family.iter().cloned());
            next.push(pair[0].clone());
            next.push(family);
        }
        next.push(lineage.last().expect("lineage has two ends").clone());
        lineage = next;

        if born.len() <= needed {
            needed -= born.len();
            children_out.extend(born);
        } else {
            let mut rng = seed::rng(seed::derive(seed, &[generation]));
            let mut pick = index::sample(&mut rng, born.len(), needed).into_vec();
            pick.sort_unstable();
            children_out.extend(pick.into_iter().map(|i| born[i].clone()));
            needed = 0;
        }
        generation += 1;
    }
    let mut out = d.clone();
    out.push_rows(children_out, minority);
    Ok(out)
}

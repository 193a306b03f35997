pub const NEIGHBORS: usize = 8;

/// Brute-force Euclidean kNN. Score = fraction of defective neighbours;
/// distance ties go to the lower training index.
#[derive(Debug, Clone)]
pub(crate) struct Knn {
    x: Vec<Vec<f64>>,
    y: Vec<bool>,
}

impl Knn {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[bool]) -> Self {
        Knn {
            x: x.to_vec(),
            y: y.to_vec(),
        }
    }

    pub(crate) fn score(&self, q: &[f64]) -> f64 {
        let mut d: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let s: f64 = row.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                (s, i)
            })
            .collect();
        let k = NEIGHBORS.min(d.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k - 1, cmp);
        }
        let hits = d[..k].iter().filter(|&&(_, i)| self.y[i]).count();
        hits as f64 / k as f64
    }
}

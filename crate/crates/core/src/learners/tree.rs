use rand::seq::index;

use crate::seed::Rng;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        defect_rate: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Entropy decision tree grown to purity (minimum leaf size 1).
///
/// Candidate thresholds are midpoints between consecutive distinct values.
/// Ties in information gain go to the lower feature index, then the lower
/// threshold.
#[derive(Debug, Clone)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

/// Per-node feature subsampling used by the forest.
pub(crate) struct FeatureSampling<'a> {
    pub per_node: usize,
    pub rng: &'a mut Rng,
}

struct Builder<'a, 'r> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    sampling: Option<FeatureSampling<'r>>,
    nodes: Vec<Node>,
}

impl Tree {
    pub(crate) fn fit(x: &[Vec<f64>], y: &[bool], sampling: Option<FeatureSampling<'_>>) -> Self {
        Self::fit_on(x, y, (0..x.len()).collect(), sampling)
    }

    /// Fits on the (possibly repeated) rows named by `indices`.
    pub(crate) fn fit_on(
        x: &[Vec<f64>],
        y: &[bool],
        indices: Vec<usize>,
        sampling: Option<FeatureSampling<'_>>,
    ) -> Self {
        let mut b = Builder {
            x,
            y,
            sampling,
            nodes: Vec::new(),
        };
        b.grow(indices);
        Tree { nodes: b.nodes }
    }

    /// Defect rate of the leaf `x` falls into.
    pub(crate) fn score(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { defect_rate } => return defect_rate,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

fn entropy(pos: usize, n: usize) -> f64 {
    if pos == 0 || pos == n {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    let q = 1.0 - p;
    -(p * p.log2() + q * q.log2())
}

impl Builder<'_, '_> {
    fn grow(&mut self, indices: Vec<usize>) -> usize {
        let n = indices.len();
        let pos = indices.iter().filter(|&&i| self.y[i]).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            defect_rate: pos as f64 / n as f64,
        });
        if pos == 0 || pos == n {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(&indices, pos) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| self.x[i][feature] <= threshold);
        let left = self.grow(l);
        let right = self.grow(r);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.x[0].len();
        match &mut self.sampling {
            Some(s) if s.per_node < p => {
                let mut f = index::sample(s.rng, p, s.per_node).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        }
    }

    /// Minimizes the size-weighted child entropy, which maximizes gain.
    fn best_split(&mut self, indices: &[usize], pos: usize) -> Option<(usize, f64)> {
        let n = indices.len();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut column: Vec<(f64, bool)> = Vec::with_capacity(n);
        for f in self.candidate_features() {
            column.clear();
            column.extend(indices.iter().map(|&i| (self.x[i][f], self.y[i])));
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for k in 0..n - 1 {
                if column[k].1 {
                    left_pos += 1;
                }
                let (lo, hi) = (column[k].0, column[k + 1].0);
                if lo == hi {
                    continue;
                }
                let left_n = k + 1;
                let cost = left_n as f64 * entropy(left_pos, left_n)
                    + (n - left_n) as f64 * entropy(pos - left_pos, n - left_n);
                if best.is_none_or(|(c, _, _)| cost < c) {
                    let mut t = lo + (hi - lo) / 2.0;
                    if t >= hi {
                        t = lo;
                    }
                    best = Some((cost, f, t));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_bounds() {
        assert_eq!(entropy(0, 4), 0.0);
        assert_eq!(entropy(4, 4), 0.0);
        assert!((entropy(2, 4) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn midpoint_thresholds() {
        let x = vec![vec![1.0], vec![2.0], vec![4.0], vec![8.0]];
        let y = [false, false, true, true];
        let t = Tree::fit(&x, &y, None);
        match t.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(threshold, 3.0),
            _ => panic!("expected a split"),
        }
        assert_eq!(t.score(&[2.9]), 0.0);
        assert_eq!(t.score(&[3.1]), 1.0);
    }

    #[test]
    fn ties_prefer_lower_feature() {
        // both features separate perfectly
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let t = Tree::fit(&x, &[false, true], None);
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn grows_to_purity_on_xor() {
        let x = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let y = [false, true, true, false];
        let t = Tree::fit(&x, &y, None);
        for (r, &l) in x.iter().zip(&y) {
            assert_eq!(t.score(r), if l { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn duplicate_points_with_mixed_labels_leave_impure_leaf() {
        let x = vec![vec![1.0], vec![1.0], vec![1.0]];
        let t = Tree::fit(&x, &[true, false, false], None);
        assert!((t.score(&[1.0]) - 1.0 / 3.0).abs() < 1e-15);
    }
}

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{minkowski, ResampleError};
use crate::data::Dataset;

/// Largest neighbourhood the expanding same-class search will inspect.
pub const SEARCH_LIMIT: usize = 20;

/// How [`NeighborIndex`] answers k-nearest queries. Both strategies return
/// identical results; the ball tree only prunes work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchStrategy {
    #[default]
    BruteForce,
    /// Metric ball tree. Requires `r >= 1` (triangle inequality); for
    /// smaller exponents the index silently falls back to brute force.
    BallTree,
}

/// k-nearest-neighbour index over a fixed point set under a Minkowski
/// distance. Results are ordered by `(distance, index)`.
#[derive(Debug)]
pub struct NeighborIndex<'a> {
    points: &'a [Vec<f64>],
    r: f64,
    tree: Option<BallTree>,
}

impl<'a> NeighborIndex<'a> {
    pub fn new(points: &'a [Vec<f64>], r: f64, strategy: SearchStrategy) -> Self {
        let tree = match strategy {
            SearchStrategy::BallTree if r >= 1.0 && !points.is_empty() => {
                Some(BallTree::build(points, r))
            }
            _ => None,
        };
        NeighborIndex { points, r, tree }
    }

    /// The `k` points closest to point `query`, excluding `query` itself.
    pub fn k_nearest(&self, query: usize, k: usize) -> Vec<usize> {
        match &self.tree {
            Some(t) => t.k_nearest(self.points, self.r, query, k),
            None => self.brute(query, k),
        }
    }

    fn brute(&self, query: usize, k: usize) -> Vec<usize> {
        let q = &self.points[query];
        let mut d: Vec<Hit> = self
            .points
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != query)
            .map(|(i, p)| Hit {
                dist: minkowski(q, p, self.r),
                index: i,
            })
            .collect();
        let k = k.min(d.len());
        if k == 0 {
            return Vec::new();
        }
        if k < d.len() {
            d.select_nth_unstable(k - 1);
            d.truncate(k);
        }
        d.sort_unstable();
        d.into_iter().map(|h| h.index).collect()
    }

    /// Expanding same-class search: grow the neighbourhood one point at a
    /// time up to [`SEARCH_LIMIT`], collecting points that share the query's
    /// label, until `k` have been found. May return fewer than `k`.
    pub fn same_class(&self, labels: &[bool], query: usize, k: usize) -> Vec<usize> {
        let mut found = Vec::with_capacity(k);
        for i in self.k_nearest(query, SEARCH_LIMIT) {
            if found.len() >= k {
                break;
            }
            if labels[i] == labels[query] {
                found.push(i);
            }
        }
        found
    }
}

/// Same-class neighbours of instance `index` in `d` under distance exponent `r`.
pub fn nearest_same_class(
    d: &Dataset,
    index: usize,
    k: usize,
    r: f64,
) -> Result<Vec<usize>, ResampleError> {
    if index >= d.len() {
        return Err(ResampleError::IndexOutOfRange {
            index,
            len: d.len(),
        });
    }
    if !(r > 0.0) {
        return Err(ResampleError::BadExponent(r));
    }
    Ok(NeighborIndex::new(d.rows(), r, SearchStrategy::BruteForce).same_class(d.labels(), index, k))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Hit {
    dist: f64,
    index: usize,
}

impl Eq for Hit {}

impl Ord for Hit {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Hit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const LEAF_SIZE: usize = 16;

#[derive(Debug)]
struct Ball {
    centre: Vec<f64>,
    radius: f64,
    kind: BallKind,
}

#[derive(Debug)]
enum BallKind {
    Leaf(Vec<usize>),
    Inner(usize, usize),
}

#[derive(Debug)]
struct BallTree {
    balls: Vec<Ball>,
}

impl BallTree {
    fn build(points: &[Vec<f64>], r: f64) -> Self {
        let mut t = BallTree { balls: Vec::new() };
        t.grow(points, r, (0..points.len()).collect());
        t
    }

    fn grow(&mut self, points: &[Vec<f64>], r: f64, members: Vec<usize>) -> usize {
        let dim = points[members[0]].len();
        let mut centre = vec![0.0; dim];
        for &i in &members {
            centre.iter_mut().zip(&points[i]).for_each(|(c, v)| *c += v);
        }
        centre.iter_mut().for_each(|c| *c /= members.len() as f64);
        let radius = members
            .iter()
            .map(|&i| minkowski(&centre, &points[i], r))
            .fold(0.0, f64::max);

        let id = self.balls.len();
        self.balls.push(Ball {
            centre,
            radius,
            kind: BallKind::Leaf(Vec::new()),
        });
        let spread_dim = (0..dim)
            .map(|j| {
                let (lo, hi) = members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(points[i][j]), hi.max(points[i][j]))
                });
                (hi - lo, j)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .filter(|&(spread, _)| spread > 0.0);

        match spread_dim {
            Some((_, j)) if members.len() > LEAF_SIZE => {
                let mut sorted = members;
                sorted.sort_by(|&a, &b| points[a][j].total_cmp(&points[b][j]).then(a.cmp(&b)));
                let right = sorted.split_off(sorted.len() / 2);
                let l = self.grow(points, r, sorted);
                let rt = self.grow(points, r, right);
                self.balls[id].kind = BallKind::Inner(l, rt);
            }
            _ => self.balls[id].kind = BallKind::Leaf(members),
        }
        id
    }

    fn k_nearest(&self, points: &[Vec<f64>], r: f64, query: usize, k: usize) -> Vec<usize> {
        if k == 0 {
            return Vec::new();
        }
        let q = &points[query];
        let mut heap: BinaryHeap<Hit> = BinaryHeap::with_capacity(k + 1);
        let mut stack = vec![0usize];
        while let Some(b) = stack.pop() {
            let ball = &self.balls[b];
            let to_centre = minkowski(q, &ball.centre, r);
            if heap.len() == k {
                let worst = heap.peek().map_or(f64::INFINITY, |h| h.dist);
                // slack keeps rounding in the bound from pruning exact ties
                let bound = to_centre - ball.radius;
                if bound > worst + 1e-9 * (1.0 + worst.abs()) {
                    continue;
                }
            }
            match &ball.kind {
                BallKind::Leaf(members) => {
                    for &i in members {
                        if i == query {
                            continue;
                        }
                        let hit = Hit {
                            dist: minkowski(q, &points[i], r),
                            index: i,
                        };
                        if heap.len() < k {
                            heap.push(hit);
                        } else if hit < *heap.peek().expect("heap is full") {
                            heap.pop();
                            heap.push(hit);
                        }
                    }
                }
                BallKind::Inner(l, rt) => {
                    let dl = minkowski(q, &self.balls[*l].centre, r);
                    let dr = minkowski(q, &self.balls[*rt].centre, r);
                    // nearer child popped first
                    if dl <= dr {
                        stack.push(*rt);
                        stack.push(*l);
                    } else {
                        stack.push(*l);
                        stack.push(*rt);
                    }
                }
            }
        }
        heap.into_sorted_vec().into_iter().map(|h| h.index).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dataset(rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Dataset {
        Dataset::from_rows("nn", rows, labels).unwrap()
    }

    /// Independent oracle: full sort of every other point by (distance, index).
    fn brute_same_class(d: &Dataset, q: usize, k: usize, r: f64) -> Vec<usize> {
        let mut all: Vec<(f64, usize)> = (0..d.len())
            .filter(|&i| i != q)
            .map(|i| (crate::resample::minkowski_distance(d.row(q), d.row(i), r).unwrap(), i))
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        all.into_iter()
            .take(SEARCH_LIMIT)
            .map(|(_, i)| i)
            .filter(|&i| d.labels()[i] == d.labels()[q])
            .take(k)
            .collect()
    }

    #[test]
    fn co_located_minority() {
        let mut rows = vec![vec![0.0, 0.0]; 3];
        let mut labels = vec![true; 3];
        for i in 0..10 {
            rows.push(vec![100.0 + i as f64, 100.0]);
            labels.push(false);
        }
        let d = dataset(rows, labels);
        assert_eq!(nearest_same_class(&d, 0, 5, 2.0).unwrap(), vec![1, 2]);
    }

    #[test]
    fn lone_minority_has_no_neighbours() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let d = dataset(rows, vec![true, false, false, false, false, false]);
        assert!(nearest_same_class(&d, 0, 5, 2.0).unwrap().is_empty());
    }

    #[test]
    fn points_on_a_line() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 1.5, 0.0]).collect();
        let d = dataset(rows, vec![true; 10]);
        assert_eq!(nearest_same_class(&d, 0, 2, 2.0).unwrap(), vec![1, 2]);
        assert_eq!(brute_same_class(&d, 0, 2, 2.0), vec![1, 2]);
        assert_eq!(nearest_same_class(&d, 9, 3, 1.0).unwrap(), vec![8, 7, 6]);
    }

    #[test]
    fn limit_caps_the_search() {
        // 25 majority points nearer than the only other minority point
        let mut rows = vec![vec![0.0]];
        let mut labels = vec![true];
        for i in 0..25 {
            rows.push(vec![1.0 + i as f64 * 0.01]);
            labels.push(false);
        }
        rows.push(vec![50.0]);
        labels.push(true);
        let d = dataset(rows, labels);
        assert!(nearest_same_class(&d, 0, 5, 2.0).unwrap().is_empty());
    }

    #[test]
    fn bad_inputs() {
        let d = dataset(vec![vec![0.0], vec![1.0]], vec![true, true]);
        assert!(matches!(
            nearest_same_class(&d, 2, 1, 2.0),
            Err(ResampleError::IndexOutOfRange { .. })
        ));
        assert!(nearest_same_class(&d, 0, 1, -1.0).is_err());
    }

    fn small_dataset() -> impl Strategy<Value = Dataset> {
        (2usize..120, 1usize..5).prop_flat_map(|(n, p)| {
            (
                // integer grid so exact distance ties occur
                proptest::collection::vec(proptest::collection::vec((-6i32..6).prop_map(f64::from), p), n),
                proptest::collection::vec(any::<bool>(), n),
            )
                .prop_map(|(rows, labels)| Dataset::from_rows("p", rows, labels).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_brute_force(d in small_dataset(), k in 1usize..=20, r in prop::sample::select(vec![0.5, 1.0, 2.0, 3.0, 5.0])) {
            let ball = NeighborIndex::new(d.rows(), r, SearchStrategy::BallTree);
            for q in 0..d.len() {
                let expect = brute_same_class(&d, q, k, r);
                prop_assert_eq!(&nearest_same_class(&d, q, k, r).unwrap(), &expect);
                prop_assert_eq!(&ball.same_class(d.labels(), q, k), &expect);
            }
        }
    }
}

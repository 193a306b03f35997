use rand::seq::index;
use rand::Rng as _;

use super::{synthesize, NeighborIndex, ResampleError, SearchStrategy, SmoteParams};
use crate::data::{minority_label, Dataset};
use crate::seed;

/// Per-class target size `round(m / 100 * n / 2)`.
pub fn smote_target(n: usize, m: u32) -> usize {
    (f64::from(m) / 100.0 * n as f64 / 2.0).round() as usize
}

/// SMOTE with brute-force neighbour search.
pub fn smote(d: &Dataset, p: &SmoteParams, seed: u64) -> Result<Dataset, ResampleError> {
    smote_with(d, p, seed, SearchStrategy::BruteForce)
}

/// Drives both classes toward `t = smote_target(n, m)`.
///
/// While the majority exceeds `t`, a uniformly random subset of size `t` is
/// kept. While the minority is below `t`, a random minority instance `x0`
/// and a random one of its same-class neighbours `z` (searched in the data
/// left after deletion) are interpolated into a new instance. An instance
/// without same-class neighbours is duplicated. The majority is never grown
/// and the minority never shrunk.
///
/// Retained rows keep their original order; synthetic rows are appended.
pub fn smote_with(
    d: &Dataset,
    p: &SmoteParams,
    seed: u64,
    strategy: SearchStrategy,
) -> Result<Dataset, ResampleError> {
    p.validate()?;
    let minority = minority_label(d);
    let (min_idx, maj_idx): (Vec<usize>, Vec<usize>) =
        (0..d.len()).partition(|&i| d.labels()[i] == minority);
    if min_idx.is_empty() {
        return Err(ResampleError::EmptyMinority);
    }
    let target = smote_target(d.len(), p.m);
    let mut rng = seed::rng(seed);

    let mut keep = min_idx.clone();
    if maj_idx.len() > target {
        keep.extend(
            index::sample(&mut rng, maj_idx.len(), target)
                .into_iter()
                .map(|j| maj_idx[j]),
        );
    } else {
        keep.extend_from_slice(&maj_idx);
    }
    keep.sort_unstable();
    let mut out = d.subset(&keep);

    if min_idx.len() < target {
        // positions of the original minority inside `out`
        let pool: Vec<usize> = (0..out.len()).filter(|&i| out.labels()[i] == minority).collect();
        let index = NeighborIndex::new(out.rows(), p.r, strategy);
        let mut cache: Vec<Option<Vec<usize>>> = vec![None; pool.len()];
        let mut synthetic = Vec::with_capacity(target - pool.len());
        for _ in pool.len()..target {
            let pick = rng.random_range(0..pool.len());
            let x0 = pool[pick];
            let found = cache[pick].get_or_insert_with(|| index.same_class(out.labels(), x0, p.k));
            let y = if found.is_empty() {
                out.row(x0).to_vec()
            } else {
                let z = found[rng.random_range(0..found.len())];
                synthesize(out.row(x0), out.row(z), &mut rng)?
            };
            synthetic.push(y);
        }
        out.push_rows(synthetic, minority);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{class_counts, make_synthetic};
    use proptest::prelude::*;

    #[test]
    fn target_arithmetic() {
        assert_eq!(smote_target(100, 50), 25);
        assert_eq!(smote_target(100, 100), 50);
        assert_eq!(smote_target(100, 200), 100);
        assert_eq!(smote_target(100, 400), 200);
        assert_eq!(smote_target(7, 50), 2);
    }

    #[test]
    fn balances_to_target() {
        let d = make_synthetic(100, 3, 0.1, 1.0, 2).unwrap();
        let out = smote(&d, &SmoteParams::new(5, 100, 2.0).unwrap(), 7).unwrap();
        assert_eq!(class_counts(&out), (50, 50));
        let out = smote(&d, &SmoteParams::default(), 7).unwrap();
        assert_eq!(class_counts(&out), (25, 25));
    }

    #[test]
    fn balanced_input_is_untouched() {
        let d = make_synthetic(100, 3, 0.5, 1.0, 2).unwrap();
        let out = smote(&d, &SmoteParams::new(5, 100, 2.0).unwrap(), 1).unwrap();
        assert_eq!(out, d);
    }

    #[test]
    fn never_grows_majority_nor_shrinks_minority() {
        let d = make_synthetic(100, 3, 0.4, 1.0, 2).unwrap();
        // t = 25 < 40 minority: majority cut to 25, minority stays 40
        let out = smote(&d, &SmoteParams::default(), 1).unwrap();
        let pos = out.labels().iter().filter(|&&l| l).count();
        assert_eq!((pos, out.len() - pos), (40, 25));
        // t = 200 > 60 majority: majority kept whole, minority grown
        let out = smote(&d, &SmoteParams::new(5, 400, 2.0).unwrap(), 1).unwrap();
        let pos = out.labels().iter().filter(|&&l| l).count();
        assert_eq!((pos, out.len() - pos), (200, 60));
    }

    #[test]
    fn lone_minority_is_duplicated() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0]).collect();
        let mut labels = vec![false; 10];
        labels[3] = true;
        let d = Dataset::from_rows("one", rows, labels).unwrap();
        let out = smote(&d, &SmoteParams::new(5, 100, 2.0).unwrap(), 0).unwrap();
        assert_eq!(class_counts(&out), (5, 5));
        for (row, &l) in out.rows().iter().zip(out.labels()) {
            if l {
                assert_eq!(row, &vec![3.0, 1.0]);
            }
        }
    }

    #[test]
    fn errors() {
        let d = Dataset::from_rows("x", vec![vec![1.0]; 4], vec![false; 4]).unwrap();
        assert_eq!(
            smote(&d, &SmoteParams::default(), 0),
            Err(ResampleError::EmptyMinority)
        );
        let d = make_synthetic(20, 2, 0.2, 1.0, 0).unwrap();
        let bad = SmoteParams { k: 0, m: 50, r: 2.0 };
        assert!(matches!(smote(&d, &bad, 0), Err(ResampleError::InvalidParams(_))));
    }

    #[test]
    fn ball_tree_gives_identical_output() {
        let d = make_synthetic(300, 4, 0.1, 1.0, 3).unwrap();
        let p = SmoteParams::new(7, 200, 3.0).unwrap();
        assert_eq!(
            smote_with(&d, &p, 5, SearchStrategy::BruteForce).unwrap(),
            smote_with(&d, &p, 5, SearchStrategy::BallTree).unwrap()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn contract(
            seed in any::<u64>(),
            data_seed in 0u64..1000,
            frac in 0.05f64..0.5,
            k in 1usize..=20,
            m in prop::sample::select(vec![50u32, 100, 200, 400]),
            r in 0.1f64..5.0,
        ) {
            let d = make_synthetic(60, 3, frac, 1.0, data_seed).unwrap();
            let p = SmoteParams::new(k, m, r).unwrap();
            let out = smote(&d, &p, seed).unwrap();
            prop_assert_eq!(&out, &smote(&d, &p, seed).unwrap());

            let (min, maj) = class_counts(&d);
            let t = smote_target(d.len(), m);
            let pos = out.labels().iter().filter(|&&l| l).count();
            prop_assert_eq!(pos, min.max(t));
            prop_assert_eq!(out.len() - pos, maj.min(t));

            // bounding box of the original minority
            let dim = d.n_features();
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for (row, _) in d.rows().iter().zip(d.labels()).filter(|(_, &l)| l) {
                for j in 0..dim {
                    lo[j] = lo[j].min(row[j]);
                    hi[j] = hi[j].max(row[j]);
                }
            }
            // retained rows are untouched originals, in order
            let mut cursor = 0;
            let originals = out.len() - pos.saturating_sub(min);
            for row in &out.rows()[..originals] {
                while d.row(cursor) != row.as_slice() {
                    cursor += 1;
                    prop_assert!(cursor < d.len());
                }
                cursor += 1;
            }
            for row in &out.rows()[originals..] {
                for j in 0..dim {
                    prop_assert!(row[j] >= lo[j] - 1e-12 && row[j] <= hi[j] + 1e-12);
                }
            }
        }
    }
}

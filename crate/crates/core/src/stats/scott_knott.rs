use serde::Serialize;

use super::{a12, bootstrap_significant, median, StatsError};
use crate::metrics::Direction;
use crate::seed;

/// Repeated results of one treatment (e.g. `rf+smote_tuned`).
#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentSamples {
    pub label: String,
    pub values: Vec<f64>,
}

impl TreatmentSamples {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            values,
        }
    }

    pub fn median(&self) -> f64 {
        median(&self.values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScottKnottConfig {
    pub confidence: f64,
    pub a12_threshold: f64,
    pub iterations: usize,
    /// Which end of the median order gets rank 1.
    pub direction: Direction,
}

impl Default for ScottKnottConfig {
    fn default() -> Self {
        Self {
            confidence: 0.99,
            a12_threshold: 0.6,
            iterations: 512,
            direction: Direction::Maximize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankGroup {
    /// 1 is best.
    pub rank: usize,
    /// Members in ascending median order.
    pub labels: Vec<String>,
    pub medians: Vec<f64>,
}

/// Treatments partitioned into statistically distinct groups, best first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedGroups {
    pub groups: Vec<RankGroup>,
}

impl RankedGroups {
    pub fn rank_of(&self, label: &str) -> Option<usize> {
        self.groups
            .iter()
            .find(|g| g.labels.iter().any(|l| l == label))
            .map(|g| g.rank)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// `ms/ls * (m.mu - l.mu)^2 + ns/ls * (n.mu - l.mu)^2` for the split of the
/// concatenation of `parts` into `parts[..at]` and `parts[at..]`.
pub fn expected_delta(parts: &[&[f64]], at: usize) -> f64 {
    let (left, right) = parts.split_at(at);
    let stats = |ps: &[&[f64]]| {
        ps.iter()
            .fold((0.0, 0usize), |(s, n), p| (s + p.iter().sum::<f64>(), n + p.len()))
    };
    let (ls, ln) = stats(left);
    let (rs, rn) = stats(right);
    let total = (ln + rn) as f64;
    let mu = (ls + rs) / total;
    let lm = ls / ln as f64;
    let rm = rs / rn as f64;
    ln as f64 / total * (lm - mu).powi(2) + rn as f64 / total * (rm - mu).powi(2)
}

/// Split point (in `1..parts.len()`) maximizing [`expected_delta`]; the
/// first maximum wins. `None` for fewer than two parts.
pub fn best_split(parts: &[&[f64]]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for at in 1..parts.len() {
        let e = expected_delta(parts, at);
        if best.is_none_or(|(_, b)| e > b) {
            best = Some((at, e));
        }
    }
    best
}

/// Recursive bi-clustering of treatments sorted by median.
///
/// A split is kept only if the bootstrap test finds the two sides
/// significantly different and the effect is not small
/// (`max(A12(m, n), A12(n, m)) >= a12_threshold`). Bootstrap streams are
/// keyed by the span being split, so results do not depend on recursion
/// order.
pub fn scott_knott(
    treatments: &[TreatmentSamples],
    cfg: &ScottKnottConfig,
    seed: u64,
) -> Result<RankedGroups, StatsError> {
    if treatments.is_empty() {
        return Err(StatsError::NoTreatments);
    }
    for t in treatments {
        if t.values.is_empty() {
            return Err(StatsError::EmptyTreatment(t.label.clone()));
        }
        if t.values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(t.label.clone()));
        }
    }
    let mut sorted: Vec<(f64, &TreatmentSamples)> =
        treatments.iter().map(|t| (t.median(), t)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.label.cmp(&b.1.label)));
    let parts: Vec<&[f64]> = sorted.iter().map(|(_, t)| t.values.as_slice()).collect();

    let mut spans = Vec::new();
    divide(&parts, 0, parts.len(), cfg, seed, &mut spans)?;

    let count = spans.len();
    let mut groups: Vec<RankGroup> = spans
        .into_iter()
        .enumerate()
        .map(|(i, (lo, hi))| RankGroup {
            rank: match cfg.direction {
                Direction::Minimize => i + 1,
                Direction::Maximize => count - i,
            },
            labels: sorted[lo..hi].iter().map(|(_, t)| t.label.clone()).collect(),
            medians: sorted[lo..hi].iter().map(|(m, _)| *m).collect(),
        })
        .collect();
    groups.sort_by_key(|g| g.rank);
    Ok(RankedGroups { groups })
}

fn divide(
    parts: &[&[f64]],
    lo: usize,
    hi: usize,
    cfg: &ScottKnottConfig,
    seed: u64,
    out: &mut Vec<(usize, usize)>,
) -> Result<(), StatsError> {
    if let Some((at, _)) = best_split(&parts[lo..hi]) {
        let left: Vec<f64> = parts[lo..lo + at].concat();
        let right: Vec<f64> = parts[lo + at..hi].concat();
        let effect = a12(&left, &right)?.max(a12(&right, &left)?);
        if effect >= cfg.a12_threshold {
            let node_seed = seed::derive(seed, &[lo as u64, hi as u64]);
            if bootstrap_significant(&left, &right, cfg.iterations, cfg.confidence, node_seed)? {
                divide(parts, lo, lo + at, cfg, seed, out)?;
                divide(parts, lo + at, hi, cfg, seed, out)?;
                return Ok(());
            }
        }
    }
    out.push((lo, hi));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn normal_samples(label: &str, mu: f64, sd: f64, n: usize, seed: u64) -> TreatmentSamples {
        let d = Normal::new(mu, sd).unwrap();
        let mut rng = crate::seed::rng(seed);
        TreatmentSamples::new(label, (0..n).map(|_| d.sample(&mut rng)).collect())
    }

    #[test]
    fn expected_delta_arithmetic() {
        let parts: [&[f64]; 4] = [&[0.0], &[0.0], &[10.0], &[10.0]];
        assert_eq!(expected_delta(&parts, 2), 25.0);
        assert_eq!(best_split(&parts), Some((2, 25.0)));
        assert!(expected_delta(&parts, 1) < 25.0);
        assert_eq!(best_split(&parts[..1]), None);
    }

    #[test]
    fn single_treatment() {
        let g = scott_knott(
            &[TreatmentSamples::new("only", vec![0.3, 0.4])],
            &ScottKnottConfig::default(),
            0,
        )
        .unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.rank_of("only"), Some(1));
    }

    #[test]
    fn identical_treatments_share_rank() {
        let ts = vec![
            TreatmentSamples::new("a", vec![0.5; 25]),
            TreatmentSamples::new("b", vec![0.5; 25]),
        ];
        let g = scott_knott(&ts, &ScottKnottConfig::default(), 3).unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn three_well_separated_treatments() {
        let ts = vec![
            normal_samples("mid", 0.5, 0.01, 25, 1),
            normal_samples("low", 0.2, 0.01, 25, 2),
            normal_samples("high", 0.8, 0.01, 25, 3),
        ];
        let g = scott_knott(&ts, &ScottKnottConfig::default(), 9).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.rank_of("high"), Some(1));
        assert_eq!(g.rank_of("mid"), Some(2));
        assert_eq!(g.rank_of("low"), Some(3));

        let cfg = ScottKnottConfig {
            direction: Direction::Minimize,
            ..Default::default()
        };
        let g = scott_knott(&ts, &cfg, 9).unwrap();
        assert_eq!(g.rank_of("low"), Some(1));
        assert_eq!(g.groups[0].labels, vec!["low".to_string()]);
    }

    #[test]
    fn bad_input() {
        assert_eq!(
            scott_knott(&[], &ScottKnottConfig::default(), 0),
            Err(StatsError::NoTreatments)
        );
        assert_eq!(
            scott_knott(&[TreatmentSamples::new("e", vec![])], &ScottKnottConfig::default(), 0),
            Err(StatsError::EmptyTreatment("e".into()))
        );
    }

    fn treatments() -> impl Strategy<Value = Vec<TreatmentSamples>> {
        proptest::collection::vec((0.0f64..1.0, 0.001f64..0.2, any::<u64>()), 1..7).prop_map(|specs| {
            specs
                .into_iter()
                .enumerate()
                .map(|(i, (mu, sd, s))| normal_samples(&format!("t{i}"), mu, sd, 15, s))
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn structure_invariants(ts in treatments(), shift in 0usize..7, scale in 0.01f64..100.0, seed: u64) {
            let cfg = ScottKnottConfig::default();
            let g = scott_knott(&ts, &cfg, seed).unwrap();

            // partition of the input labels
            let mut labels: Vec<&String> = g.groups.iter().flat_map(|x| &x.labels).collect();
            labels.sort();
            let mut expect: Vec<&String> = ts.iter().map(|t| &t.label).collect();
            expect.sort();
            prop_assert_eq!(labels, expect);

            // contiguous in median order: walking ranks from worst to best
            // never decreases the medians
            let mut last = f64::NEG_INFINITY;
            for grp in g.groups.iter().rev() {
                for &m in &grp.medians {
                    prop_assert!(m >= last);
                    last = m;
                }
            }

            let mut rotated = ts.clone();
            rotated.rotate_left(shift % ts.len());
            prop_assert_eq!(&scott_knott(&rotated, &cfg, seed).unwrap(), &g);

            let scaled: Vec<TreatmentSamples> = ts
                .iter()
                .map(|t| TreatmentSamples::new(t.label.clone(), t.values.iter().map(|v| v * scale).collect()))
                .collect();
            let gs = scott_knott(&scaled, &cfg, seed).unwrap();
            let shape = |r: &RankedGroups| r.groups.iter().map(|x| x.labels.clone()).collect::<Vec<_>>();
            prop_assert_eq!(shape(&gs), shape(&g));
        }
    }
}

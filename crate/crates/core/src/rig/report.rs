use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{CellResult, Prefilter};
use crate::learners::LearnerKind;
use crate::metrics::Measure;
use crate::seed;
use crate::stats::{scott_knott, RankedGroups, ScottKnottConfig, StatsError, TreatmentSamples};

/// Nearest-rank percentile of sorted data, `p` in (0, 1].
fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let rank = (p * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// `delta / baseline`; `None` when either is missing or the baseline is 0.
pub fn relative_delta(r: &CellResult) -> Option<f64> {
    match (r.delta, r.baseline) {
        (Some(d), Some(b)) if b != 0.0 => Some(d / b),
        _ => None,
    }
}

type Key = (String, LearnerKind, Prefilter, Measure);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub learner: LearnerKind,
    pub prefilter: Prefilter,
    pub measure: Measure,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    /// Median signed delta against the baseline, over cells where defined.
    pub median_delta: Option<f64>,
    /// Median relative delta over cells with a non-zero baseline.
    pub median_relative_delta: Option<f64>,
    pub n: usize,
    pub missing: usize,
}

/// A key for which every cell was missing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissingKey {
    pub dataset: String,
    pub learner: LearnerKind,
    pub prefilter: Prefilter,
    pub measure: Measure,
    pub missing: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub missing: Vec<MissingKey>,
}

/// Median and IQR (nearest-rank) per (dataset, learner, prefilter, measure).
/// Keys appear in first-seen order.
pub fn summarize(results: &[CellResult]) -> Summary {
    let mut order: Vec<Key> = Vec::new();
    let mut groups: BTreeMap<Key, Vec<&CellResult>> = BTreeMap::new();
    for r in results {
        let key = (r.dataset.clone(), r.learner, r.prefilter, r.measure);
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    let median_of = |mut v: Vec<f64>| -> Option<f64> {
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(nearest_rank(&v, 0.5))
    };

    let mut summary = Summary::default();
    for key in order {
        let cells = &groups[&key];
        let mut values: Vec<f64> = cells.iter().filter_map(|c| c.value).collect();
        let missing = cells.len() - values.len();
        let (dataset, learner, prefilter, measure) = key;
        if values.is_empty() {
            summary.missing.push(MissingKey {
                dataset,
                learner,
                prefilter,
                measure,
                missing,
            });
            continue;
        }
        values.sort_by(f64::total_cmp);
        let (q1, q3) = (nearest_rank(&values, 0.25), nearest_rank(&values, 0.75));
        summary.rows.push(SummaryRow {
            dataset,
            learner,
            prefilter,
            measure,
            median: nearest_rank(&values, 0.5),
            q1,
            q3,
            iqr: q3 - q1,
            median_delta: median_of(cells.iter().filter_map(|c| c.delta).collect()),
            median_relative_delta: median_of(cells.iter().filter_map(|c| relative_delta(c)).collect()),
            n: values.len(),
            missing,
        });
    }
    summary
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetRanking {
    pub dataset: String,
    pub measure: Measure,
    pub groups: RankedGroups,
    /// Rank-1 treatment with the best median; ties go to the first label.
    pub star: String,
}

impl DatasetRanking {
    pub fn median_of(&self, label: &str) -> Option<f64> {
        self.groups.groups.iter().find_map(|g| {
            g.labels
                .iter()
                .position(|l| l == label)
                .map(|i| g.medians[i])
        })
    }
}

/// Treatment label used in rankings.
pub fn treatment_label(learner: LearnerKind, prefilter: Prefilter) -> String {
    format!("{}+{}", learner.name(), prefilter.name())
}

/// Scott-Knott over the (learner, prefilter) treatments of every dataset
/// for one measure. Missing cells are left out of the samples and
/// treatments without any value are not ranked.
pub fn rank(results: &[CellResult], measure: Measure, seed: u64) -> Result<Vec<DatasetRanking>, StatsError> {
    let mut datasets: Vec<&str> = Vec::new();
    let mut samples: BTreeMap<(&str, String), Vec<f64>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.measure == measure) {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
        let entry = samples
            .entry((r.dataset.as_str(), treatment_label(r.learner, r.prefilter)))
            .or_default();
        if let Some(v) = r.value {
            entry.push(v);
        }
    }
    let cfg = ScottKnottConfig {
        direction: measure.direction(),
        ..Default::default()
    };
    let mut out = Vec::new();
    for name in datasets {
        let treatments: Vec<TreatmentSamples> = samples
            .iter()
            .filter(|((d, _), v)| *d == name && !v.is_empty())
            .map(|((_, label), v)| TreatmentSamples::new(label.clone(), v.clone()))
            .collect();
        if treatments.is_empty() {
            continue;
        }
        let node_seed = seed::derive(seed, &[seed::hash_str(name), seed::hash_str(measure.name())]);
        let groups = scott_knott(&treatments, &cfg, node_seed)?;
        let top = &groups.groups[0];
        let star = top
            .labels
            .iter()
            .zip(&top.medians)
            .min_by(|(la, ma), (lb, mb)| {
                measure
                    .oriented(**mb)
                    .total_cmp(&measure.oriented(**ma))
                    .then_with(|| la.cmp(lb))
            })
            .map(|(l, _)| l.clone())
            .expect("groups are non-empty");
        out.push(DatasetRanking {
            dataset: name.to_string(),
            measure,
            groups,
            star,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuntimeRow {
    pub dataset: String,
    pub prefilter: Prefilter,
    pub mean_seconds: f64,
    pub cells: usize,
}

/// Mean wall-clock seconds per (dataset, prefilter), first-seen order.
pub fn runtime_report(results: &[CellResult]) -> Vec<RuntimeRow> {
    let mut rows: Vec<(String, Prefilter, f64, usize)> = Vec::new();
    for r in results {
        match rows.iter_mut().find(|x| x.0 == r.dataset && x.1 == r.prefilter) {
            Some(x) => {
                x.2 += r.seconds;
                x.3 += 1;
            }
            None => rows.push((r.dataset.clone(), r.prefilter, r.seconds, 1)),
        }
    }
    rows.into_iter()
        .map(|(dataset, prefilter, total, cells)| RuntimeRow {
            dataset,
            prefilter,
            mean_seconds: total / cells as f64,
            cells,
        })
        .collect()
}

fn opt(v: Option<f64>, scale: f64, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.*}", digits, x * scale))
}

pub fn render_summary_markdown(summary: &Summary) -> String {
    let mut s = String::from("# Summary\n\n");
    s.push_str("| dataset | learner | prefilter | measure | median | IQR | median delta | median rel. delta % | n | missing |\n");
    s.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    for r in &summary.rows {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {:.3} | {:.3} | {} | {} | {} | {} |",
            r.dataset,
            r.learner,
            r.prefilter,
            r.measure,
            r.median,
            r.iqr,
            opt(r.median_delta, 1.0, 3),
            opt(r.median_relative_delta, 100.0, 1),
            r.n,
            r.missing
        );
    }
    if !summary.missing.is_empty() {
        s.push_str("\n## Missing\n\n| dataset | learner | prefilter | measure | cells |\n|---|---|---|---|---|\n");
        for m in &summary.missing {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} |",
                m.dataset, m.learner, m.prefilter, m.measure, m.missing
            );
        }
    }
    s
}

/// One table per (dataset, measure): learners as rows, prefilters as
/// columns, `median (rank)` cells and a `*` on the star.
pub fn render_ranks_markdown(rankings: &[DatasetRanking], learners: &[LearnerKind], prefilters: &[Prefilter]) -> String {
    let mut s = String::from("# Ranks\n");
    for r in rankings {
        let _ = write!(s, "\n## {} / {}\n\n| learner |", r.dataset, r.measure);
        for p in prefilters {
            let _ = write!(s, " {} |", p.short());
        }
        s.push_str("\n|---|");
        s.push_str(&"---|".repeat(prefilters.len()));
        s.push('\n');
        for &l in learners {
            let _ = write!(s, "| {l} |");
            for &p in prefilters {
                let label = treatment_label(l, p);
                match (r.median_of(&label), r.groups.rank_of(&label)) {
                    (Some(m), Some(k)) => {
                        let star = if label == r.star { "*" } else { "" };
                        let _ = write!(s, " {m:.2} ({k}){star} |");
                    }
                    _ => s.push_str(" - |"),
                }
            }
            s.push('\n');
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(dataset: &str, learner: LearnerKind, prefilter: Prefilter, value: Option<f64>, seconds: f64) -> CellResult {
        CellResult {
            dataset: dataset.into(),
            learner,
            prefilter,
            measure: Measure::Auc,
            repeat: 0,
            bin: 0,
            value,
            baseline: Some(0.5),
            delta: value.map(|v| v - 0.5),
            seconds,
            goal: None,
            params: None,
            reason: value.is_none().then(|| "undefined".to_string()),
            test_digest: 0,
        }
    }

    #[test]
    fn percentile_examples() {
        let rows: Vec<CellResult> = (1..=25)
            .map(|v| cell("d", LearnerKind::Rf, Prefilter::Smote, Some(v as f64), 0.0))
            .collect();
        let s = summarize(&rows);
        assert_eq!(s.rows.len(), 1);
        assert_eq!((s.rows[0].median, s.rows[0].iqr), (13.0, 12.0));

        let same: Vec<CellResult> = (0..25)
            .map(|_| cell("d", LearnerKind::Rf, Prefilter::Smote, Some(0.7), 0.0))
            .collect();
        let s = summarize(&same);
        assert_eq!((s.rows[0].median, s.rows[0].iqr), (0.7, 0.0));
    }

    #[test]
    fn missing_keys_are_listed() {
        let mut rows = vec![cell("d", LearnerKind::Rf, Prefilter::Smote, None, 0.0); 3];
        rows.push(cell("d", LearnerKind::Nb, Prefilter::Smote, Some(0.6), 0.0));
        rows.push(cell("d", LearnerKind::Nb, Prefilter::Smote, None, 0.0));
        let s = summarize(&rows);
        assert_eq!(s.missing.len(), 1);
        assert_eq!(s.missing[0].missing, 3);
        assert_eq!((s.rows[0].n, s.rows[0].missing), (1, 1));
    }

    #[test]
    fn relative_delta_skips_zero_baseline() {
        let mut c = cell("d", LearnerKind::Rf, Prefilter::Smote, Some(0.75), 0.0);
        assert_eq!(relative_delta(&c), Some(0.5));
        c.baseline = Some(0.0);
        assert_eq!(relative_delta(&c), None);
    }

    #[test]
    fn runtime_mean() {
        let rows = vec![
            cell("d", LearnerKind::Rf, Prefilter::Smote, Some(0.1), 1.0),
            cell("d", LearnerKind::Nb, Prefilter::Smote, Some(0.1), 3.0),
        ];
        let r = runtime_report(&rows);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].mean_seconds, 2.0);
    }

    #[test]
    fn identical_treatments_star_first_label() {
        let mut rows = Vec::new();
        for l in [LearnerKind::Svm, LearnerKind::Dt, LearnerKind::Rf] {
            for rep in 0..10 {
                let mut c = cell("d", l, Prefilter::None, Some(0.6), 0.0);
                c.repeat = rep;
                rows.push(c);
            }
        }
        let r = rank(&rows, Measure::Auc, 0).unwrap();
        assert_eq!(r[0].groups.len(), 1);
        assert_eq!(r[0].star, "dt+none");
    }

    #[test]
    fn dominating_treatment_is_starred() {
        let mut rows = Vec::new();
        for rep in 0..20 {
            let jitter = rep as f64 * 1e-3;
            let mut a = cell("d", LearnerKind::Rf, Prefilter::SmoteTuned, Some(0.9 + jitter), 0.0);
            let mut b = cell("d", LearnerKind::Rf, Prefilter::None, Some(0.5 + jitter), 0.0);
            a.repeat = rep;
            b.repeat = rep;
            rows.extend([a, b]);
        }
        let r = rank(&rows, Measure::Auc, 0).unwrap();
        assert_eq!(r[0].groups.rank_of("rf+smote_tuned"), Some(1));
        assert_eq!(r[0].groups.rank_of("rf+none"), Some(2));
        assert_eq!(r[0].star, "rf+smote_tuned");
        let md = render_ranks_markdown(&r, &[LearnerKind::Rf], &[Prefilter::None, Prefilter::SmoteTuned]);
        assert!(md.contains("| rf | 0.51 (2) | 0.91 (1)* |"), "{md}");
    }
}

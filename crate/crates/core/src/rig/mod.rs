//! Repeated-bins cross-validation engine.
//!
//! For every dataset and repeat the rows are shuffled and dealt into bins.
//! Each bin in turn is the test set; the other bins are pre-filtered
//! (nothing, SMOTE, SMOTUNED or MAHAKIL), every learner is trained on the
//! result and scored on the untouched test bin. All randomness is keyed by
//! the cell coordinates, so cells can run in any order or in parallel.

mod io;
mod report;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{self, class_counts, shuffle_and_bin, DataError, Dataset};
use crate::learners::{LearnerKind, LearnerSpec, Model};
use crate::metrics::Measure;
use crate::resample::{mahakil, smote, SmoteParams};
use crate::seed;
use crate::tune::{smotuned, DeConfig, TuneError};

pub use io::{read_results_csv, write_results_csv, RESULT_COLUMNS};
pub use report::{
    rank, relative_delta, render_ranks_markdown, render_summary_markdown, runtime_report,
    summarize, DatasetRanking, MissingKey, RuntimeRow, Summary, SummaryRow,
};

#[derive(Debug, Error)]
pub enum RigError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("dataset `{name}`: {source}")]
    Data {
        name: String,
        #[source]
        source: DataError,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// Training-data treatment applied before a learner sees the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prefilter {
    None,
    Smote,
    SmoteTuned,
    Mahakil,
}

impl Prefilter {
    pub const ALL: [Prefilter; 4] = [
        Prefilter::None,
        Prefilter::Smote,
        Prefilter::SmoteTuned,
        Prefilter::Mahakil,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Prefilter::None => "none",
            Prefilter::Smote => "smote",
            Prefilter::SmoteTuned => "smote_tuned",
            Prefilter::Mahakil => "mahakil",
        }
    }

    /// Column heading used in rank tables.
    pub fn short(self) -> &'static str {
        match self {
            Prefilter::None => "No",
            Prefilter::Smote => "S1",
            Prefilter::SmoteTuned => "S2",
            Prefilter::Mahakil => "MK",
        }
    }
}

impl fmt::Display for Prefilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Prefilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "no" => Ok(Prefilter::None),
            "smote" | "s1" => Ok(Prefilter::Smote),
            "smote_tuned" | "smotuned" | "s2" => Ok(Prefilter::SmoteTuned),
            "mahakil" | "mk" => Ok(Prefilter::Mahakil),
            other => Err(format!(
                "unknown prefilter `{other}` (expected none, smote, smote_tuned or mahakil)"
            )),
        }
    }
}

/// Which measure SMOTUNED optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Tune separately for every reported measure.
    WithinMeasure,
    /// Tune once for the control measure and report every measure.
    CrossMeasure(Measure),
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub datasets: Vec<Dataset>,
    pub learners: Vec<LearnerKind>,
    pub prefilters: Vec<Prefilter>,
    pub measures: Vec<Measure>,
    pub repeats: usize,
    pub bins: usize,
    pub mode: Mode,
    pub seed: u64,
    pub de: DeConfig,
    /// Parameters of the untuned SMOTE prefilter.
    pub smote: SmoteParams,
}

impl ExperimentPlan {
    pub fn new(datasets: Vec<Dataset>) -> Self {
        ExperimentPlan {
            datasets,
            learners: LearnerKind::ALL.to_vec(),
            prefilters: vec![Prefilter::None, Prefilter::Smote, Prefilter::SmoteTuned],
            measures: Measure::ALL.to_vec(),
            repeats: 5,
            bins: 5,
            mode: Mode::WithinMeasure,
            seed: 0,
            de: DeConfig::default(),
            smote: SmoteParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), RigError> {
        let bad = |m: &str| Err(RigError::InvalidPlan(m.to_string()));
        if self.repeats < 1 {
            return bad("repeats must be >= 1");
        }
        if self.bins < 2 {
            return bad("bins must be >= 2");
        }
        if self.datasets.is_empty() || self.learners.is_empty() {
            return bad("need at least one dataset and one learner");
        }
        if self.prefilters.is_empty() || self.measures.is_empty() {
            return bad("need at least one prefilter and one measure");
        }
        if self.prefilters.contains(&Prefilter::SmoteTuned) && self.bins < 3 {
            return bad("smote_tuned needs bins >= 3 (training and validation folds)");
        }
        let mut names: Vec<&str> = self.datasets.iter().map(Dataset::name).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("dataset names must be unique");
        }
        self.smote
            .validate()
            .map_err(|e| RigError::InvalidPlan(e.to_string()))?;
        self.de
            .validate()
            .map_err(|e| RigError::InvalidPlan(e.to_string()))?;
        Ok(())
    }
}

/// One recorded value: a (dataset, learner, prefilter, measure) treatment on
/// one (repeat, bin) split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub dataset: String,
    pub learner: LearnerKind,
    pub prefilter: Prefilter,
    pub measure: Measure,
    pub repeat: usize,
    pub bin: usize,
    pub value: Option<f64>,
    /// Same learner and split without preprocessing.
    pub baseline: Option<f64>,
    /// `value - baseline`.
    pub delta: Option<f64>,
    pub seconds: f64,
    /// Measure SMOTUNED optimized for this row.
    pub goal: Option<Measure>,
    /// SMOTE parameters used, if any.
    pub params: Option<SmoteParams>,
    /// Why `value` is missing.
    pub reason: Option<String>,
    /// Fingerprint of the test bin after the cell finished.
    #[serde(skip)]
    pub test_digest: u64,
}

/// FNV-1a over feature bits and labels.
pub fn digest(d: &Dataset) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    for (row, &l) in d.rows().iter().zip(d.labels()) {
        row.iter().for_each(|v| eat(v.to_bits()));
        eat(u64::from(l));
    }
    h
}

/// Seed of the shuffle for one dataset and repeat.
pub fn split_seed(master: u64, dataset: &str, repeat: usize) -> u64 {
    seed::derive(master, &[seed::hash_str(dataset), repeat as u64])
}

fn cell_seed(master: u64, dataset: &str, repeat: usize, bin: usize, prefilter: Prefilter, learner: LearnerKind) -> u64 {
    seed::derive(
        master,
        &[
            seed::hash_str(dataset),
            repeat as u64,
            bin as u64,
            seed::hash_str(prefilter.name()),
            seed::hash_str(learner.name()),
        ],
    )
}

/// Runs the whole plan on the current rayon pool. Rows come back in plan
/// order: dataset, repeat, bin, learner, prefilter, measure.
pub fn run(plan: &ExperimentPlan) -> Result<Vec<CellResult>, RigError> {
    plan.validate()?;
    let mut jobs = Vec::new();
    for (di, d) in plan.datasets.iter().enumerate() {
        for repeat in 0..plan.repeats {
            let partition = shuffle_and_bin(d, plan.bins, split_seed(plan.seed, d.name(), repeat))
                .map_err(|source| RigError::Data {
                    name: d.name().to_string(),
                    source,
                })?;
            for bin in 0..plan.bins {
                for &learner in &plan.learners {
                    jobs.push((di, repeat, bin, learner, partition.clone()));
                }
            }
        }
    }
    let rows: Vec<Vec<CellResult>> = jobs
        .par_iter()
        .map(|(di, repeat, bin, learner, partition)| {
            let split = Split::new(&plan.datasets[*di], partition, *bin, *repeat);
            run_split(plan, &split, *learner, &plan.prefilters)
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// [`run`] on a dedicated pool of `jobs` worker threads.
pub fn run_parallel(plan: &ExperimentPlan, jobs: usize) -> Result<Vec<CellResult>, RigError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| RigError::Pool(e.to_string()))?;
    pool.install(|| run(plan))
}

/// Recomputes the rows of a single (dataset, repeat, bin, learner,
/// prefilter) cell in isolation.
pub fn run_single(
    plan: &ExperimentPlan,
    dataset: usize,
    repeat: usize,
    bin: usize,
    learner: LearnerKind,
    prefilter: Prefilter,
) -> Result<Vec<CellResult>, RigError> {
    plan.validate()?;
    let d = plan
        .datasets
        .get(dataset)
        .ok_or_else(|| RigError::InvalidPlan(format!("no dataset #{dataset}")))?;
    let partition = shuffle_and_bin(d, plan.bins, split_seed(plan.seed, d.name(), repeat)).map_err(
        |source| RigError::Data {
            name: d.name().to_string(),
            source,
        },
    )?;
    let split = Split::new(d, &partition, bin, repeat);
    Ok(run_split(plan, &split, learner, &[prefilter]))
}

struct Split {
    name: String,
    repeat: usize,
    bin: usize,
    test: Dataset,
    /// Non-test bins in bin order.
    folds: Vec<Dataset>,
    train: Dataset,
}

impl Split {
    fn new(d: &Dataset, p: &data::BinPartition, bin: usize, repeat: usize) -> Self {
        let folds: Vec<Dataset> = (0..p.bins())
            .filter(|&b| b != bin)
            .map(|b| d.subset(&p.members(b)))
            .collect();
        Split {
            name: d.name().to_string(),
            repeat,
            bin,
            test: d.subset(&p.members(bin)),
            train: d.subset(&p.complement(bin)),
            folds,
        }
    }
}

type Scores = Vec<(Measure, Result<f64, String>)>;

fn fit_and_score(kind: LearnerKind, seed: u64, train: &Dataset, test: &Dataset, measures: &[Measure]) -> Result<Scores, String> {
    let model: Model = LearnerSpec::new(kind, seed).train(train).map_err(|e| e.to_string())?;
    let (scores, predicted) = model.evaluate(test).map_err(|e| e.to_string())?;
    Ok(measures
        .iter()
        .map(|&m| {
            (
                m,
                m.evaluate(&predicted, &scores, test.labels())
                    .map_err(|e| e.to_string()),
            )
        })
        .collect())
}

fn run_split(plan: &ExperimentPlan, split: &Split, learner: LearnerKind, prefilters: &[Prefilter]) -> Vec<CellResult> {
    let key = |p: Prefilter| cell_seed(plan.seed, &split.name, split.repeat, split.bin, p, learner);
    let started = Instant::now();
    let baseline = fit_and_score(
        learner,
        seed::derive(key(Prefilter::None), &[1]),
        &split.train,
        &split.test,
        &plan.measures,
    );
    let baseline_secs = started.elapsed().as_secs_f64();
    let baseline_of = |m: Measure| -> Option<f64> {
        baseline
            .as_ref()
            .ok()
            .and_then(|s| s.iter().find(|(x, _)| *x == m))
            .and_then(|(_, v)| v.as_ref().ok().copied())
    };

    let mut out = Vec::new();
    let mut emit = |prefilter: Prefilter,
                    measure: Measure,
                    value: Result<f64, String>,
                    seconds: f64,
                    goal: Option<Measure>,
                    params: Option<SmoteParams>| {
        let baseline = baseline_of(measure);
        let (value, reason) = match value {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e)),
        };
        out.push(CellResult {
            dataset: split.name.clone(),
            learner,
            prefilter,
            measure,
            repeat: split.repeat,
            bin: split.bin,
            delta: value.zip(baseline).map(|(v, b)| v - b),
            value,
            baseline,
            seconds,
            goal,
            params,
            reason,
            test_digest: digest(&split.test),
        });
    };

    for &prefilter in prefilters {
        let cell = key(prefilter);
        let started = Instant::now();
        match prefilter {
            Prefilter::None => {
                emit_all(&mut emit, prefilter, &plan.measures, baseline.clone(), baseline_secs, None, None);
            }
            Prefilter::Smote => {
                let scored = smote(&split.train, &plan.smote, seed::derive(cell, &[0]))
                    .map_err(|e| e.to_string())
                    .and_then(|d| fit_and_score(learner, seed::derive(cell, &[1]), &d, &split.test, &plan.measures));
                let secs = started.elapsed().as_secs_f64();
                emit_all(&mut emit, prefilter, &plan.measures, scored, secs, None, Some(plan.smote));
            }
            Prefilter::Mahakil => {
                let (_, majority) = class_counts(&split.train);
                let scored = mahakil(&split.train, majority, seed::derive(cell, &[0]))
                    .map_err(|e| e.to_string())
                    .and_then(|d| fit_and_score(learner, seed::derive(cell, &[1]), &d, &split.test, &plan.measures));
                let secs = started.elapsed().as_secs_f64();
                emit_all(&mut emit, prefilter, &plan.measures, scored, secs, None, None);
            }
            Prefilter::SmoteTuned => {
                let goals: Vec<Measure> = match plan.mode {
                    Mode::WithinMeasure => plan.measures.clone(),
                    Mode::CrossMeasure(control) => vec![control],
                };
                for goal in goals {
                    let started = Instant::now();
                    let goal_seed = seed::derive(cell, &[seed::hash_str(goal.name())]);
                    let tuned = tune_with_retry(plan, split, learner, goal, goal_seed);
                    let reported: Vec<Measure> = match plan.mode {
                        Mode::WithinMeasure => vec![goal],
                        Mode::CrossMeasure(_) => plan.measures.clone(),
                    };
                    let params = tuned.as_ref().ok().copied();
                    let scored = tuned.and_then(|p| {
                        smote(&split.train, &p, seed::derive(goal_seed, &[0]))
                            .map_err(|e| e.to_string())
                            .and_then(|d| {
                                fit_and_score(learner, seed::derive(goal_seed, &[1]), &d, &split.test, &reported)
                            })
                    });
                    let secs = started.elapsed().as_secs_f64();
                    emit_all(&mut emit, prefilter, &reported, scored, secs, Some(goal), params);
                }
            }
        }
    }
    out
}

fn emit_all(
    emit: &mut impl FnMut(Prefilter, Measure, Result<f64, String>, f64, Option<Measure>, Option<SmoteParams>),
    prefilter: Prefilter,
    measures: &[Measure],
    scored: Result<Scores, String>,
    seconds: f64,
    goal: Option<Measure>,
    params: Option<SmoteParams>,
) {
    match scored {
        Ok(rows) => {
            for (m, v) in rows {
                emit(prefilter, m, v, seconds, goal, params);
            }
        }
        Err(reason) => {
            for &m in measures {
                emit(prefilter, m, Err(reason.clone()), seconds, goal, params);
            }
        }
    }
}

/// SMOTUNED on the split's training folds; a single-class validation fold
/// triggers one retry on a fresh seeded re-binning of the training rows.
fn tune_with_retry(
    plan: &ExperimentPlan,
    split: &Split,
    learner: LearnerKind,
    goal: Measure,
    seed: u64,
) -> Result<SmoteParams, String> {
    let spec = LearnerSpec::new(learner, seed::derive(seed, &[2]));
    match smotuned(&split.folds, &spec, goal, &plan.de, seed::derive(seed, &[3])) {
        Ok(t) => Ok(t.params),
        Err(TuneError::DegenerateValidation) => {
            let retry = seed::derive(seed, &[4]);
            let p = data::partition(split.train.len(), split.folds.len(), retry)
                .map_err(|e| format!("tuning retry: {e}"))?;
            let folds: Vec<Dataset> = (0..p.bins()).map(|b| split.train.subset(&p.members(b))).collect();
            smotuned(&folds, &spec, goal, &plan.de, seed::derive(retry, &[3]))
                .map(|t| t.params)
                .map_err(|e| format!("tuning failed after retry: {e}"))
        }
        Err(e) => Err(format!("tuning failed: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_synthetic;

    fn small_plan() -> ExperimentPlan {
        let d1 = make_synthetic(80, 3, 0.2, 1.5, 1).unwrap().with_name("a");
        let d2 = make_synthetic(60, 3, 0.25, 1.0, 2).unwrap().with_name("b");
        let mut plan = ExperimentPlan::new(vec![d1, d2]);
        plan.learners = vec![LearnerKind::Nb, LearnerKind::Dt];
        plan.repeats = 2;
        plan.seed = 17;
        plan
    }

    #[test]
    fn none_only_has_zero_deltas() {
        let mut plan = small_plan();
        plan.prefilters = vec![Prefilter::None];
        let rows = run(&plan).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 5 * 2 * 4);
        for r in &rows {
            if let Some(d) = r.delta {
                assert_eq!(d, 0.0);
            }
            assert_eq!(r.value, r.baseline);
        }
    }

    #[test]
    fn row_count_is_product_of_dimensions() {
        let mut plan = small_plan();
        plan.prefilters = vec![Prefilter::None, Prefilter::Smote, Prefilter::Mahakil];
        plan.measures = vec![Measure::Recall, Measure::Auc];
        assert_eq!(run(&plan).unwrap().len(), 2 * 2 * 5 * 2 * 3 * 2);
    }

    #[test]
    fn cells_reproduce_in_isolation_and_plans_are_monotone() {
        let mut plan = small_plan();
        plan.prefilters = vec![Prefilter::None, Prefilter::Smote];
        plan.learners = vec![LearnerKind::Dt];
        let narrow = run(&plan).unwrap();
        plan.prefilters.push(Prefilter::Mahakil);
        plan.learners.push(LearnerKind::Nb);
        let wide = run(&plan).unwrap();
        let strip = |mut r: CellResult| {
            r.seconds = 0.0;
            r
        };
        for row in narrow {
            let twin = wide
                .iter()
                .find(|w| {
                    (w.dataset.as_str(), w.learner, w.prefilter, w.measure, w.repeat, w.bin)
                        == (row.dataset.as_str(), row.learner, row.prefilter, row.measure, row.repeat, row.bin)
                })
                .unwrap();
            assert_eq!(strip(twin.clone()), strip(row.clone()));
        }
        let single = run_single(&plan, 1, 1, 3, LearnerKind::Nb, Prefilter::Mahakil).unwrap();
        for row in single {
            let twin = wide
                .iter()
                .find(|w| {
                    w.dataset == "b" && w.learner == LearnerKind::Nb && w.prefilter == Prefilter::Mahakil
                        && w.measure == row.measure && w.repeat == 1 && w.bin == 3
                })
                .unwrap();
            assert_eq!(strip(twin.clone()), strip(row));
        }
    }

    #[test]
    fn baseline_shared_across_prefilters() {
        let mut plan = small_plan();
        plan.prefilters = vec![Prefilter::None, Prefilter::Smote, Prefilter::SmoteTuned, Prefilter::Mahakil];
        plan.measures = vec![Measure::Auc];
        plan.repeats = 1;
        let rows = run(&plan).unwrap();
        for r in &rows {
            let none = rows
                .iter()
                .find(|n| {
                    n.prefilter == Prefilter::None
                        && (n.dataset.as_str(), n.learner, n.repeat, n.bin, n.measure)
                            == (r.dataset.as_str(), r.learner, r.repeat, r.bin, r.measure)
                })
                .unwrap();
            assert_eq!(r.baseline, none.value);
            if r.prefilter == Prefilter::SmoteTuned {
                assert_eq!(r.goal, Some(Measure::Auc));
                assert!(r.params.unwrap().validate().is_ok());
            }
        }
    }

    #[test]
    fn cross_mode_records_control_goal_for_all_measures() {
        let mut plan = small_plan();
        plan.datasets.truncate(1);
        plan.learners = vec![LearnerKind::Nb];
        plan.repeats = 1;
        plan.prefilters = vec![Prefilter::SmoteTuned];
        plan.mode = Mode::CrossMeasure(Measure::Auc);
        let rows = run(&plan).unwrap();
        assert_eq!(rows.len(), 5 * 4);
        assert!(rows.iter().all(|r| r.goal == Some(Measure::Auc)));
    }

    #[test]
    fn plan_validation() {
        let mut plan = small_plan();
        plan.bins = 1;
        assert!(plan.validate().is_err());
        let mut plan = small_plan();
        plan.datasets[1] = plan.datasets[0].clone();
        assert!(plan.validate().is_err());
        let mut plan = small_plan();
        plan.repeats = 0;
        assert!(plan.validate().is_err());
    }

    #[test]
    fn too_small_dataset_is_reported() {
        let d = Dataset::from_rows("tiny", vec![vec![0.0, 1.0]; 3], vec![true, false, false]).unwrap();
        let plan = ExperimentPlan::new(vec![d]);
        assert!(matches!(run(&plan), Err(RigError::Data { .. })));
    }

    #[test]
    fn degenerate_training_marks_cells_missing() {
        // one defective row: the bin holding it leaves training single-class
        let mut labels = vec![false; 20];
        labels[7] = true;
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let d = Dataset::from_rows("rare", rows, labels).unwrap();
        let mut plan = ExperimentPlan::new(vec![d]);
        plan.learners = vec![LearnerKind::Nb];
        plan.repeats = 1;
        plan.prefilters = vec![Prefilter::None, Prefilter::Smote];
        let rows = run(&plan).unwrap();
        let missing: Vec<_> = rows.iter().filter(|r| r.value.is_none()).collect();
        assert!(!missing.is_empty());
        assert!(missing.iter().all(|r| r.reason.is_some()));
    }
}

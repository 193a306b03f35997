use serde::Serialize;

use super::{de_optimize, decode, smote_space, DeConfig, EvalKey, TuneError};
use crate::data::Dataset;
use crate::learners::LearnerSpec;
use crate::metrics::Measure;
use crate::resample::{smote, SmoteParams};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneOutcome {
    pub params: SmoteParams,
    pub goal: Measure,
    /// Raw goal measure of the best candidate on the validation fold
    /// (not negated for minimized measures). `None` if it was undefined.
    pub score: Option<f64>,
    pub evaluations: usize,
    pub generations: usize,
}

/// Tunes SMOTE's `(k, m, r)` for one learner and goal.
///
/// The last fold is validation; the rest are pooled for training. A
/// candidate's fitness is the goal measure (sign-flipped for minimized
/// measures) of `spec` trained on the SMOTE'd training pool and scored on
/// the untouched validation fold. Undefined measures count as the worst
/// possible fitness. Each evaluation draws its SMOTE and learner seeds from
/// `(seed, generation, member)`.
pub fn smotuned(
    folds: &[Dataset],
    spec: &LearnerSpec,
    goal: Measure,
    cfg: &DeConfig,
    seed: u64,
) -> Result<TuneOutcome, TuneError> {
    if folds.len() < 2 {
        return Err(TuneError::TooFewFolds(folds.len()));
    }
    if let Some(i) = folds.iter().position(Dataset::is_empty) {
        return Err(TuneError::EmptyFold(i));
    }
    let (validation, training) = folds.split_last().expect("at least two folds");
    let train = Dataset::concat(training).expect("at least one training fold");
    if !train.has_both_classes() {
        return Err(TuneError::DegenerateTraining);
    }
    if !validation.has_both_classes() {
        return Err(TuneError::DegenerateValidation);
    }

    let measure = |position: &[f64], key: EvalKey| -> Option<f64> {
        let base = seed::derive(seed, &[key.generation as u64, key.member as u64]);
        let resampled = smote(&train, &decode(position), seed::derive(base, &[0])).ok()?;
        let learner = LearnerSpec::new(spec.kind, seed::derive(base, &[1]));
        let model = learner.train(&resampled).ok()?;
        let (scores, predicted) = model.evaluate(validation).ok()?;
        goal.evaluate(&predicted, &scores, validation.labels()).ok()
    };
    let outcome = de_optimize(
        &smote_space(),
        |p, key| measure(p, key).map_or(f64::NEG_INFINITY, |v| goal.oriented(v)),
        cfg,
        seed,
    )?;
    let fitness = outcome.best.fitness.unwrap_or(f64::NEG_INFINITY);
    Ok(TuneOutcome {
        params: outcome.best.params(),
        goal,
        score: fitness.is_finite().then(|| goal.oriented(fitness)),
        evaluations: outcome.evaluations,
        generations: outcome.generations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_synthetic, shuffle_and_bin};
    use crate::learners::LearnerKind;

    fn folds(seed: u64) -> Vec<Dataset> {
        let d = make_synthetic(200, 4, 0.15, 1.0, seed).unwrap();
        let p = shuffle_and_bin(&d, 4, seed).unwrap();
        (0..4).map(|b| d.subset(&p.members(b))).collect()
    }

    #[test]
    fn deterministic_and_legal() {
        let f = folds(1);
        let spec = LearnerSpec::new(LearnerKind::Nb, 0);
        let a = smotuned(&f, &spec, Measure::Recall, &DeConfig::default(), 5).unwrap();
        let b = smotuned(&f, &spec, Measure::Recall, &DeConfig::default(), 5).unwrap();
        assert_eq!(a, b);
        assert!(a.params.validate().is_ok());
        assert_eq!(a.evaluations, 10 * (a.generations + 1));
        assert!(a.score.is_some());
    }

    #[test]
    fn minimized_goal_reports_raw_value() {
        let f = folds(2);
        let spec = LearnerSpec::new(LearnerKind::Dt, 0);
        let out = smotuned(&f, &spec, Measure::FalseAlarm, &DeConfig::default(), 3).unwrap();
        let pf = out.score.unwrap();
        assert!((0.0..=1.0).contains(&pf));
    }

    #[test]
    fn degenerate_folds() {
        let mut f = folds(3);
        let v = f.pop().unwrap();
        let idx: Vec<usize> = (0..v.len()).filter(|&i| !v.labels()[i]).collect();
        f.push(v.subset(&idx));
        let spec = LearnerSpec::new(LearnerKind::Nb, 0);
        assert_eq!(
            smotuned(&f, &spec, Measure::Auc, &DeConfig::default(), 0),
            Err(TuneError::DegenerateValidation)
        );
        assert_eq!(
            smotuned(&f[..1], &spec, Measure::Auc, &DeConfig::default(), 0),
            Err(TuneError::TooFewFolds(1))
        );
    }
}

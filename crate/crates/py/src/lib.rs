//! Python bindings: datasets, resamplers, measures, learners, tuning,
//! Scott-Knott and the experiment rig.

use std::fmt::Display;
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use smotuned::config::RunConfig;
use smotuned::data::{class_counts, load_csv, make_synthetic, Dataset};
use smotuned::learners::{LearnerKind, LearnerSpec};
use smotuned::metrics::{self, Direction, Measure};
use smotuned::rig;
use smotuned::stats::{self, ScottKnottConfig, TreatmentSamples};
use smotuned::tune::{smotuned as tune_smote, DeConfig};
use smotuned::{shuffle_and_bin, SmoteParams};

fn err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Dataset", module = "pysmotuned", from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (rows, labels, name = "data"))]
    fn new(rows: Vec<Vec<f64>>, labels: Vec<bool>, name: &str) -> PyResult<Self> {
        Ok(PyDataset {
            inner: Dataset::from_rows(name, rows, labels).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, label = "bug"))]
    fn load_csv(path: PathBuf, label: &str) -> PyResult<Self> {
        Ok(PyDataset {
            inner: load_csv(path, label).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, features, minority = 0.1, separation = 1.0, seed = 0))]
    fn synthetic(n: usize, features: usize, minority: f64, separation: f64, seed: u64) -> PyResult<Self> {
        Ok(PyDataset {
            inner: make_synthetic(n, features, minority, separation, seed).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().to_vec()
    }

    fn labels(&self) -> Vec<bool> {
        self.inner.labels().to_vec()
    }

    /// `(minority, majority)`.
    fn class_counts(&self) -> (usize, usize) {
        class_counts(&self.inner)
    }

    #[pyo3(signature = (path, label = "bug"))]
    fn to_csv(&self, path: PathBuf, label: &str) -> PyResult<()> {
        self.inner.write_csv(path, label).map_err(err)
    }

    fn __repr__(&self) -> String {
        let pos = self.inner.labels().iter().filter(|&&l| l).count();
        format!(
            "Dataset(name={:?}, rows={}, features={}, defective={pos})",
            self.inner.name(),
            self.inner.len(),
            self.inner.n_features()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (data, k = 5, m = 50, r = 2.0, seed = 0))]
fn smote(data: PyRef<'_, PyDataset>, k: usize, m: u32, r: f64, seed: u64) -> PyResult<PyDataset> {
    let p = SmoteParams::new(k, m, r).map_err(err)?;
    Ok(PyDataset {
        inner: smotuned::smote(&data.inner, &p, seed).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (data, target = None, seed = 0))]
fn mahakil(data: PyRef<'_, PyDataset>, target: Option<usize>, seed: u64) -> PyResult<PyDataset> {
    let target = target.unwrap_or_else(|| class_counts(&data.inner).1);
    Ok(PyDataset {
        inner: smotuned::mahakil(&data.inner, target, seed).map_err(err)?,
    })
}

#[pyfunction]
fn auc(scores: Vec<f64>, actual: Vec<bool>) -> PyResult<f64> {
    metrics::auc(&scores, &actual).map_err(err)
}

#[pyfunction]
fn recall(predicted: Vec<bool>, actual: Vec<bool>) -> PyResult<f64> {
    metrics::recall(&metrics::confusion(&predicted, &actual).map_err(err)?).map_err(err)
}

#[pyfunction]
fn precision(predicted: Vec<bool>, actual: Vec<bool>) -> PyResult<f64> {
    metrics::precision(&metrics::confusion(&predicted, &actual).map_err(err)?).map_err(err)
}

#[pyfunction]
fn false_alarm(predicted: Vec<bool>, actual: Vec<bool>) -> PyResult<f64> {
    metrics::false_alarm(&metrics::confusion(&predicted, &actual).map_err(err)?).map_err(err)
}

#[pyfunction]
fn a12(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    stats::a12(&xs, &ys).map_err(err)
}

/// Groups as `(rank, labels)` pairs, best rank first.
#[pyfunction]
#[pyo3(signature = (treatments, minimize = false, seed = 0))]
fn scott_knott(treatments: Vec<(String, Vec<f64>)>, minimize: bool, seed: u64) -> PyResult<Vec<(usize, Vec<String>)>> {
    let ts: Vec<TreatmentSamples> = treatments
        .into_iter()
        .map(|(l, v)| TreatmentSamples::new(l, v))
        .collect();
    let cfg = ScottKnottConfig {
        direction: if minimize { Direction::Minimize } else { Direction::Maximize },
        ..Default::default()
    };
    let groups = stats::scott_knott(&ts, &cfg, seed).map_err(err)?;
    Ok(groups.groups.into_iter().map(|g| (g.rank, g.labels)).collect())
}

/// Trains `learner` on `train` and returns its scores on `test`.
#[pyfunction]
#[pyo3(signature = (learner, train, test, seed = 0))]
fn fit_score(learner: &str, train: PyRef<'_, PyDataset>, test: PyRef<'_, PyDataset>, seed: u64) -> PyResult<Vec<f64>> {
    let kind: LearnerKind = learner.parse().map_err(err)?;
    let model = LearnerSpec::new(kind, seed).train(&train.inner).map_err(err)?;
    Ok(model.evaluate(&test.inner).map_err(err)?.0)
}

/// SMOTUNED on `folds` seeded bins of `data` (the last is validation).
/// Returns `(k, m, r, validation_score)`.
#[pyfunction]
#[pyo3(signature = (data, learner = "rf", measure = "auc", folds = 4, lives = 1, seed = 0))]
fn tune(
    py: Python<'_>,
    data: PyRef<'_, PyDataset>,
    learner: &str,
    measure: &str,
    folds: usize,
    lives: usize,
    seed: u64,
) -> PyResult<(usize, u32, f64, Option<f64>)> {
    let kind: LearnerKind = learner.parse().map_err(err)?;
    let goal: Measure = measure.parse().map_err(err)?;
    let d = data.inner.clone();
    let out = py
        .detach(move || {
            let p = shuffle_and_bin(&d, folds, seed).map_err(|e| e.to_string())?;
            let bins: Vec<Dataset> = (0..folds).map(|b| d.subset(&p.members(b))).collect();
            let cfg = DeConfig { lives, ..Default::default() };
            tune_smote(&bins, &LearnerSpec::new(kind, seed), goal, &cfg, seed).map_err(|e| e.to_string())
        })
        .map_err(err)?;
    Ok((out.params.k, out.params.m, out.params.r, out.score))
}

/// Runs a study described by a `key = value` manifest and returns the
/// results CSV. `datasets` replaces the manifest's `data` entry.
#[pyfunction]
#[pyo3(signature = (config = "", datasets = None))]
fn run(py: Python<'_>, config: &str, datasets: Option<Vec<PyDataset>>) -> PyResult<String> {
    let cfg = RunConfig::parse(config, "<config>").map_err(err)?;
    let datasets = match datasets {
        Some(ds) => ds.into_iter().map(|d| d.inner).collect(),
        None => cfg.load_datasets().map_err(err)?,
    };
    let plan = cfg.to_plan(datasets);
    let jobs = cfg.jobs;
    let results = py.detach(move || rig::run_parallel(&plan, jobs)).map_err(err)?;
    let mut buf = Vec::new();
    rig::write_results_csv(&mut buf, &results).map_err(err)?;
    String::from_utf8(buf).map_err(err)
}

#[pymodule]
fn pysmotuned(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(smote, m)?)?;
    m.add_function(wrap_pyfunction!(mahakil, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(recall, m)?)?;
    m.add_function(wrap_pyfunction!(precision, m)?)?;
    m.add_function(wrap_pyfunction!(false_alarm, m)?)?;
    m.add_function(wrap_pyfunction!(a12, m)?)?;
    m.add_function(wrap_pyfunction!(scott_knott, m)?)?;
    m.add_function(wrap_pyfunction!(fit_score, m)?)?;
    m.add_function(wrap_pyfunction!(tune, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}

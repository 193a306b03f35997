//! Datasets of static code metrics with boolean defect labels.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::seed;

/// Columns dropped at load time unless the caller overrides the list.
pub const DEFAULT_EXCLUDED_COLUMNS: &[&str] = &["name", "version"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed csv: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: no column named `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: line {line}, column `{column}`: cannot parse `{value}` as a finite number")]
    BadCell {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("{path}: line {line}, column `{column}`: `{value}` is not a defect count or true/false")]
    BadLabel {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("{path}: line {line}: expected {expected} cells, found {found}")]
    RaggedRow {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{0}: dataset has no rows")]
    Empty(PathBuf),
    #[error("row {row} has {found} values but there are {expected} features")]
    RowArity {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, feature {feature} is not finite")]
    NonFinite { row: usize, feature: usize },
    #[error("{rows} labels for {expected} rows")]
    LabelCount { rows: usize, expected: usize },
    #[error("cannot split {rows} rows into {bins} bins")]
    TooFewRows { rows: usize, bins: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

/// A feature matrix plus boolean defect labels (`true` = defective).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<bool>,
}

impl Dataset {
    /// Builds a dataset, checking arity and finiteness of every row.
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<bool>,
    ) -> Result<Self, DataError> {
        if labels.len() != rows.len() {
            return Err(DataError::LabelCount {
                rows: labels.len(),
                expected: rows.len(),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(DataError::RowArity {
                    row: i,
                    expected: feature_names.len(),
                    found: row.len(),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { row: i, feature: j });
            }
        }
        Ok(Self {
            name: name.into(),
            feature_names,
            rows,
            labels,
        })
    }

    /// Same as [`Dataset::new`] with generated feature names `x0, x1, ...`.
    pub fn from_rows(
        name: impl Into<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<bool>,
    ) -> Result<Self, DataError> {
        let width = rows.first().map_or(0, Vec::len);
        let names = (0..width).map(|i| format!("x{i}")).collect();
        Self::new(name, names, rows, labels)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.iter().any(|&l| l) && self.labels.iter().any(|&l| !l)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Appends rows without re-validating; callers guarantee arity.
    pub(crate) fn push_rows(&mut self, rows: Vec<Vec<f64>>, label: bool) {
        debug_assert!(rows.iter().all(|r| r.len() == self.n_features()));
        self.labels.extend(std::iter::repeat_n(label, rows.len()));
        self.rows.extend(rows);
    }

    /// Concatenation of several datasets sharing one schema.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Dataset>) -> Option<Dataset> {
        let mut it = parts.into_iter();
        let mut out = it.next()?.clone();
        for d in it {
            debug_assert_eq!(d.feature_names, out.feature_names);
            out.rows.extend(d.rows.iter().cloned());
            out.labels.extend_from_slice(&d.labels);
        }
        Some(out)
    }

    /// Writes the dataset as CSV with the label in the last column.
    pub fn write_csv(&self, path: impl AsRef<Path>, label_column: &str) -> Result<(), DataError> {
        let path = path.as_ref();
        let csv_err = |source| DataError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(label_column);
        w.write_record(&header).map_err(csv_err)?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(label.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Options controlling [`load_csv_with`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: String,
    /// Metadata columns dropped by name (compared case-insensitively).
    pub exclude: Vec<String>,
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        Self {
            label_column: label_column.into(),
            exclude: DEFAULT_EXCLUDED_COLUMNS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Loads a CSV file with the default metadata exclusions.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset, DataError> {
    load_csv_with(path, &CsvOptions::new(label_column))
}

pub fn load_csv_with(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |source| DataError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader.headers().map_err(csv_err)?.clone();

    let label_idx = header
        .iter()
        .position(|h| h == opts.label_column)
        .ok_or_else(|| DataError::MissingColumn {
            path: path.to_path_buf(),
            column: opts.label_column.clone(),
        })?;
    let excluded: HashSet<String> = opts.exclude.iter().map(|s| s.to_lowercase()).collect();
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&i| i != label_idx && !excluded.contains(&header[i].to_lowercase()))
        .collect();
    let feature_names: Vec<String> = feature_idx.iter().map(|&i| header[i].to_string()).collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // header occupies line 1
        let line = n as u64 + 2;
        if record.len() != header.len() {
            return Err(DataError::RaggedRow {
                path: path.to_path_buf(),
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        let mut row = Vec::with_capacity(feature_idx.len());
        for &i in &feature_idx {
            let cell = &record[i];
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(DataError::BadCell {
                        path: path.to_path_buf(),
                        line,
                        column: header[i].to_string(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        let cell = &record[label_idx];
        let label = parse_label(cell).ok_or_else(|| DataError::BadLabel {
            path: path.to_path_buf(),
            line,
            column: opts.label_column.clone(),
            value: cell.to_string(),
        })?;
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(DataError::Empty(path.to_path_buf()));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, feature_names, rows, labels)
}

/// Defect counts binarize as `count > 0`; literal booleans pass through.
fn parse_label(cell: &str) -> Option<bool> {
    if cell.eq_ignore_ascii_case("true") {
        return Some(true);
    }
    if cell.eq_ignore_ascii_case("false") {
        return Some(false);
    }
    match cell.parse::<f64>() {
        Ok(v) if !v.is_nan() => Some(v > 0.0),
        _ => None,
    }
}

/// A seeded, non-stratified assignment of instances to bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinPartition {
    assignment: Vec<usize>,
    bins: usize,
    seed: u64,
}

impl BinPartition {
    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Bin index of every instance.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Instance indices in bin `b`, ascending.
    pub fn members(&self, b: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == b)
            .collect()
    }

    /// Instance indices outside bin `b`, ascending.
    pub fn complement(&self, b: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != b)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.bins];
        for &b in &self.assignment {
            sizes[b] += 1;
        }
        sizes
    }
}

/// Randomizes instance order with `seed`, then deals instances into `bins`
/// round-robin so bin sizes differ by at most one.
pub fn shuffle_and_bin(d: &Dataset, bins: usize, seed: u64) -> Result<BinPartition, DataError> {
    partition(d.len(), bins, seed)
}

pub(crate) fn partition(n: usize, bins: usize, seed: u64) -> Result<BinPartition, DataError> {
    if bins < 2 {
        return Err(DataError::Parameter(format!("bins must be >= 2, got {bins}")));
    }
    if n < bins {
        return Err(DataError::TooFewRows { rows: n, bins });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let mut assignment = vec![0; n];
    for (pos, &idx) in order.iter().enumerate() {
        assignment[idx] = pos % bins;
    }
    Ok(BinPartition {
        assignment,
        bins,
        seed,
    })
}

/// `(minority_count, majority_count)`; on a tie the true class is the minority.
pub fn class_counts(d: &Dataset) -> (usize, usize) {
    let pos = d.labels.iter().filter(|&&l| l).count();
    let neg = d.len() - pos;
    if pos <= neg {
        (pos, neg)
    } else {
        (neg, pos)
    }
}

/// The label value of the minority class (ties go to `true`).
pub fn minority_label(d: &Dataset) -> bool {
    let pos = d.labels.iter().filter(|&&l| l).count();
    pos <= d.len() - pos
}

/// Two unit-variance Gaussian clusters whose centroids differ by `separation`
/// in every feature; `round(n * minority_fraction)` rows are labeled true.
pub fn make_synthetic(
    n: usize,
    features: usize,
    minority_fraction: f64,
    separation: f64,
    seed: u64,
) -> Result<Dataset, DataError> {
    if n < 10 {
        return Err(DataError::Parameter(format!("n must be >= 10, got {n}")));
    }
    if features < 2 {
        return Err(DataError::Parameter(format!(
            "features must be >= 2, got {features}"
        )));
    }
    if !(minority_fraction > 0.0 && minority_fraction <= 0.5) {
        return Err(DataError::Parameter(format!(
            "minority_fraction must lie in (0, 0.5], got {minority_fraction}"
        )));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(DataError::Parameter(format!(
            "separation must be finite and >= 0, got {separation}"
        )));
    }
    let n_min = (n as f64 * minority_fraction).round() as usize;
    if n_min == 0 {
        return Err(DataError::Parameter(format!(
            "n * minority_fraction rounds to zero minority rows ({n} * {minority_fraction})"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut labels: Vec<bool> = (0..n).map(|i| i < n_min).collect();
    labels.shuffle(&mut rng);
    let rows = labels
        .iter()
        .map(|&defective| {
            let centre = if defective { separation } else { 0.0 };
            (0..features)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    centre + z
                })
                .collect()
        })
        .collect();
    Dataset::from_rows("synthetic", rows, labels)
}

//! Flat `key = value` run manifests.
//!
//! One setting per line, `#` starts a comment, lists are comma-separated.
//! Keys are named after plan fields; command-line flags go through the same
//! [`RunConfig::set`] so they override file values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::data::{load_csv, make_synthetic, DataError, Dataset};
use crate::learners::LearnerKind;
use crate::metrics::Measure;
use crate::resample::SmoteParams;
use crate::rig::{ExperimentPlan, Mode, Prefilter};
use crate::tune::DeConfig;

/// `data` value selecting the built-in synthetic suite.
pub const SYNTHETIC: &str = "@synthetic";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{source_name}:{line}: expected `key = value`, got `{text}`")]
    Syntax {
        source_name: String,
        line: usize,
        text: String,
    },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("bad value for `{key}`: `{value}` ({reason})")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{source_name}:{line}: {inner}")]
    At {
        source_name: String,
        line: usize,
        inner: Box<ConfigError>,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

impl ReportFormat {
    pub fn name(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "markdown",
            ReportFormat::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format `{other}` (expected csv, markdown or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// CSV file, directory of CSV files, or [`SYNTHETIC`].
    pub data: String,
    pub out: PathBuf,
    pub label: String,
    pub learners: Vec<LearnerKind>,
    pub prefilters: Vec<Prefilter>,
    pub measures: Vec<Measure>,
    /// `false` = within-measure.
    pub cross: bool,
    pub control: Measure,
    pub repeats: usize,
    pub bins: usize,
    pub seed: u64,
    pub jobs: usize,
    pub formats: Vec<ReportFormat>,
    pub de: DeConfig,
    pub smote: SmoteParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: SYNTHETIC.to_string(),
            out: PathBuf::from("out"),
            label: "bug".to_string(),
            learners: LearnerKind::ALL.to_vec(),
            prefilters: vec![Prefilter::None, Prefilter::Smote, Prefilter::SmoteTuned],
            measures: Measure::ALL.to_vec(),
            cross: false,
            control: Measure::Auc,
            repeats: 5,
            bins: 5,
            seed: 1,
            jobs: 1,
            formats: vec![ReportFormat::Csv, ReportFormat::Markdown],
            de: DeConfig::default(),
            smote: SmoteParams::default(),
        }
    }
}

pub const KEYS: [&str; 20] = [
    "data", "out", "label", "learners", "prefilters", "measures", "mode", "control", "repeats",
    "bins", "seed", "jobs", "format", "de_pop", "de_cf", "de_f", "de_lives", "smote_k", "smote_m",
    "smote_r",
];

fn list<T: FromStr<Err = String>>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>())
        .collect::<Result<_, _>>()
        .map_err(|reason| bad(key, value, reason))?;
    if items.is_empty() {
        return Err(bad(key, value, "empty list".into()));
    }
    Ok(items)
}

fn bad(key: &str, value: &str, reason: String) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason,
    }
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| bad(key, value, e.to_string()))
}

fn join<T>(items: &[T], name: impl Fn(&T) -> &'static str) -> String {
    items.iter().map(name).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key.trim() {
            "data" => self.data = value.to_string(),
            "out" => self.out = PathBuf::from(value),
            "label" => self.label = value.to_string(),
            "learners" => self.learners = list(key, value)?,
            "prefilters" => self.prefilters = list(key, value)?,
            "measures" => self.measures = list(key, value)?,
            "mode" => {
                self.cross = match value.to_ascii_lowercase().as_str() {
                    "within" | "within_measure" => false,
                    "cross" | "cross_measure" => true,
                    _ => return Err(bad(key, value, "expected within or cross".into())),
                }
            }
            "control" => self.control = value.parse().map_err(|e| bad(key, value, e))?,
            "repeats" => self.repeats = scalar(key, value)?,
            "bins" => self.bins = scalar(key, value)?,
            "seed" => self.seed = scalar(key, value)?,
            "jobs" => self.jobs = scalar(key, value)?,
            "format" => self.formats = list(key, value)?,
            "de_pop" => self.de.n = scalar(key, value)?,
            "de_cf" => self.de.cf = scalar(key, value)?,
            "de_f" => self.de.f = scalar(key, value)?,
            "de_lives" => self.de.lives = scalar(key, value)?,
            "smote_k" => self.smote.k = scalar(key, value)?,
            "smote_m" => self.smote.m = scalar(key, value)?,
            "smote_r" => self.smote.r = scalar(key, value)?,
            other => {
                return Err(ConfigError::UnknownKey {
                    key: other.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Defaults overlaid with the settings in `text`.
    pub fn parse(text: &str, source_name: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                source_name: source_name.to_string(),
                line: i + 1,
                text: raw.to_string(),
            })?;
            cfg.set(key, value).map_err(|e| ConfigError::At {
                source_name: source_name.to_string(),
                line: i + 1,
                inner: Box::new(e),
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Every setting, in a form [`RunConfig::parse`] reads back.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("data", self.data.clone());
        kv("out", self.out.display().to_string());
        kv("label", self.label.clone());
        kv("learners", join(&self.learners, |l| l.name()));
        kv("prefilters", join(&self.prefilters, |p| p.name()));
        kv("measures", join(&self.measures, |m| m.name()));
        kv("mode", if self.cross { "cross" } else { "within" }.to_string());
        kv("control", self.control.name().to_string());
        kv("repeats", self.repeats.to_string());
        kv("bins", self.bins.to_string());
        kv("seed", self.seed.to_string());
        kv("jobs", self.jobs.to_string());
        kv("format", join(&self.formats, |f| f.name()));
        kv("de_pop", self.de.n.to_string());
        kv("de_cf", self.de.cf.to_string());
        kv("de_f", self.de.f.to_string());
        kv("de_lives", self.de.lives.to_string());
        kv("smote_k", self.smote.k.to_string());
        kv("smote_m", self.smote.m.to_string());
        kv("smote_r", self.smote.r.to_string());
        s
    }

    pub fn mode(&self) -> Mode {
        if self.cross {
            Mode::CrossMeasure(self.control)
        } else {
            Mode::WithinMeasure
        }
    }

    /// Reads the configured datasets: one CSV, every `*.csv` in a
    /// directory (name order), or the synthetic suite.
    pub fn load_datasets(&self) -> Result<Vec<Dataset>, DataError> {
        if self.data == SYNTHETIC {
            return synthetic_suite(self.seed);
        }
        let path = Path::new(&self.data);
        if path.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|source| DataError::Io { path: path.to_path_buf(), source })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(DataError::Parameter(format!("no .csv files in {}", path.display())));
            }
            files.iter().map(|f| load_csv(f, &self.label)).collect()
        } else {
            Ok(vec![load_csv(path, &self.label)?])
        }
    }

    pub fn to_plan(&self, datasets: Vec<Dataset>) -> ExperimentPlan {
        ExperimentPlan {
            datasets,
            learners: self.learners.clone(),
            prefilters: self.prefilters.clone(),
            measures: self.measures.clone(),
            repeats: self.repeats,
            bins: self.bins,
            mode: self.mode(),
            seed: self.seed,
            de: self.de,
            smote: self.smote,
        }
    }
}

/// Three imbalanced two-cluster datasets (minority 8% to 14%).
pub fn synthetic_suite(seed: u64) -> Result<Vec<Dataset>, DataError> {
    let specs = [
        ("synth_a", 300, 8, 0.10, 0.9),
        ("synth_b", 250, 6, 0.14, 0.7),
        ("synth_c", 360, 10, 0.08, 1.1),
    ];
    specs
        .iter()
        .enumerate()
        .map(|(i, &(name, n, p, frac, sep))| {
            Ok(make_synthetic(n, p, frac, sep, crate::seed::derive(seed, &[i as u64]))?.with_name(name))
        })
        .collect()
}

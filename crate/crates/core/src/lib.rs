//! Class-imbalance preprocessing study toolkit.
//!
//! The crate bundles everything needed to ask whether tuning a data
//! preprocessor matters more than choosing a classifier:
//!
//! - [`data`]: CSV ingestion, seeded shuffling/binning, synthetic fixtures
//! - [`metrics`]: recall, precision, false alarm and AUC
//! - [`learners`]: six classifiers behind one train/score interface
//! - [`resample`]: SMOTE with tunable `(k, m, r)` and the MAHAKIL oversampler
//! - [`tune`]: differential evolution and the SMOTUNED wrapper around it
//! - [`stats`]: A12, bootstrap significance and Scott-Knott ranking
//! - [`rig`]: the repeated cross-validation experiment engine and its reports
//! - [`config`]: flat key/value run manifests

pub mod config;
pub mod data;
pub mod learners;
pub mod metrics;
pub mod resample;
pub mod rig;
pub mod seed;
pub mod stats;
pub mod tune;

pub use data::{class_counts, load_csv, make_synthetic, shuffle_and_bin, BinPartition, Dataset};
pub use learners::{LearnerKind, LearnerSpec, Model};
pub use metrics::{auc, confusion, ConfusionMatrix, Direction, Measure};
pub use resample::{mahakil, minkowski_distance, nearest_same_class, smote, SmoteParams};
pub use rig::{run, summarize, CellResult, ExperimentPlan, Mode, Prefilter};
pub use stats::{a12, bootstrap_significant, scott_knott, RankedGroups, TreatmentSamples};
pub use tune::{de_optimize, decode, smotuned, DeConfig};

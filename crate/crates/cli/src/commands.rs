use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use smotuned::config::{ConfigError, ReportFormat, RunConfig};
use smotuned::data::{class_counts, load_csv, make_synthetic, DataError, Dataset};
use smotuned::learners::LearnerKind;
use smotuned::metrics::Measure;
use smotuned::rig::{self, CellResult, Prefilter, RigError};
use smotuned::{mahakil, shuffle_and_bin, smote, smotuned, DeConfig, LearnerSpec, SmoteParams};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<RigError> for CliError {
    fn from(e: RigError) -> Self {
        match e {
            RigError::InvalidPlan(_) => CliError::Usage(e.to_string()),
            RigError::Data { .. } => CliError::Data(e.to_string()),
            RigError::Pool(_) => CliError::Runtime(e.to_string()),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "smotuned", version, about = "Tuned SMOTE experiments for defect prediction")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the repeated cross-validation study and write reports
    Run(RunArgs),
    /// Resample one CSV with SMOTE or MAHAKIL
    Resample(ResampleArgs),
    /// Tune SMOTE for one learner and measure on one CSV
    Tune(TuneArgs),
    /// Re-rank an existing results CSV
    Rank(RankArgs),
    /// Print the effective configuration
    ConfigDump(RunArgs),
    /// Write a synthetic imbalanced dataset
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// key = value manifest; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV file, directory of CSVs, or @synthetic
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    learners: Option<String>,
    #[arg(long)]
    prefilters: Option<String>,
    #[arg(long)]
    measures: Option<String>,
    /// within or cross
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    control: Option<String>,
    #[arg(long)]
    repeats: Option<String>,
    #[arg(long)]
    bins: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    /// comma list of csv, markdown, json
    #[arg(long)]
    format: Option<String>,
    /// Any other config key, as KEY=VALUE
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let flags = [
            ("data", &self.data),
            ("out", &self.out),
            ("label", &self.label),
            ("learners", &self.learners),
            ("prefilters", &self.prefilters),
            ("measures", &self.measures),
            ("mode", &self.mode),
            ("control", &self.control),
            ("repeats", &self.repeats),
            ("bins", &self.bins),
            ("seed", &self.seed),
            ("jobs", &self.jobs),
            ("format", &self.format),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).map_err(|e| CliError::Usage(format!("--{key}: {e}")))?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k, v).map_err(|e| CliError::Usage(format!("--set: {e}")))?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Smote,
    Mahakil,
}

#[derive(Debug, Args)]
struct ResampleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "smote")]
    method: Method,
    #[arg(long, default_value = "bug")]
    label: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 50)]
    m: u32,
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    /// MAHAKIL minority size (default: majority size)
    #[arg(long)]
    target: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "bug")]
    label: String,
    #[arg(long, default_value = "rf")]
    learner: String,
    #[arg(long, default_value = "auc")]
    measure: String,
    /// Bins dealt from the input; the last is the validation fold
    #[arg(long, default_value_t = 4)]
    folds: usize,
    #[arg(long, default_value_t = 1)]
    lives: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: OutFormat,
}

#[derive(Debug, Args)]
struct RankArgs {
    /// results.csv from a previous run
    #[arg(long)]
    results: PathBuf,
    /// Directory for ranks.md; stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to every measure in the results
    #[arg(long)]
    measures: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: OutFormat,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    features: usize,
    #[arg(long, default_value_t = 0.1)]
    minority: f64,
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    #[arg(long, default_value = "bug")]
    label: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(a) => cmd_run(&a.resolve()?),
        Command::ConfigDump(a) => {
            print!("{}", a.resolve()?.dump());
            Ok(())
        }
        Command::Resample(a) => cmd_resample(&a),
        Command::Tune(a) => cmd_tune(&a),
        Command::Rank(a) => cmd_rank(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(write_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(write_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    write_text(path, &(text + "\n"))
}

fn first_seen<T: PartialEq + Copy>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn rank_all(results: &[CellResult], measures: &[Measure], seed: u64) -> Result<Vec<rig::DatasetRanking>, CliError> {
    let mut all = Vec::new();
    for &m in measures {
        all.extend(rig::rank(results, m, seed).map_err(runtime)?);
    }
    Ok(all)
}

fn cmd_run(cfg: &RunConfig) -> Result<(), CliError> {
    let datasets = cfg.load_datasets()?;
    let plan = cfg.to_plan(datasets);
    plan.validate()?;
    eprintln!(
        "running {} dataset(s) x {} learner(s) x {} prefilter(s), {}x{} cv, {} job(s)",
        plan.datasets.len(),
        plan.learners.len(),
        plan.prefilters.len(),
        plan.repeats,
        plan.bins,
        cfg.jobs
    );
    let results = rig::run_parallel(&plan, cfg.jobs)?;

    let out = &cfg.out;
    fs::create_dir_all(out).map_err(write_err(out))?;
    let summary = rig::summarize(&results);
    let rankings = rank_all(&results, &plan.measures, cfg.seed)?;
    let runtimes = rig::runtime_report(&results);

    for format in &cfg.formats {
        match format {
            ReportFormat::Csv => {
                let path = out.join("results.csv");
                rig::write_results_csv(create(&path)?, &results).map_err(runtime)?;
                let path = out.join("runtimes.csv");
                let mut w = create(&path)?;
                let mut text = String::from("dataset,prefilter,mean_seconds,cells\n");
                for r in &runtimes {
                    text.push_str(&format!("{},{},{},{}\n", r.dataset, r.prefilter, r.mean_seconds, r.cells));
                }
                w.write_all(text.as_bytes()).map_err(write_err(&path))?;
                w.flush().map_err(write_err(&path))?;
            }
            ReportFormat::Markdown => {
                write_text(&out.join("summary.md"), &rig::render_summary_markdown(&summary))?;
                write_text(
                    &out.join("ranks.md"),
                    &rig::render_ranks_markdown(&rankings, &plan.learners, &plan.prefilters),
                )?;
            }
            ReportFormat::Json => {
                write_json(&out.join("results.json"), &results)?;
                write_json(&out.join("summary.json"), &summary)?;
                write_json(&out.join("ranks.json"), &rankings)?;
                write_json(&out.join("runtimes.json"), &runtimes)?;
            }
        }
    }
    let missing = results.iter().filter(|r| r.value.is_none()).count();
    eprintln!(
        "wrote {} cell results ({missing} missing) to {}",
        results.len(),
        out.display()
    );
    Ok(())
}

fn counts(d: &Dataset) -> (usize, usize) {
    let pos = d.labels().iter().filter(|&&l| l).count();
    (pos, d.len() - pos)
}

fn cmd_resample(a: &ResampleArgs) -> Result<(), CliError> {
    let d = load_csv(&a.input, &a.label)?;
    let out = match a.method {
        Method::Smote => {
            let p = SmoteParams { k: a.k, m: a.m, r: a.r };
            p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            smote(&d, &p, a.seed).map_err(runtime)?
        }
        Method::Mahakil => {
            let target = a.target.unwrap_or_else(|| class_counts(&d).1);
            mahakil(&d, target, a.seed).map_err(runtime)?
        }
    };
    out.write_csv(&a.output, &a.label)?;
    let (b, c) = (counts(&d), counts(&out));
    println!("({},{}) -> ({},{})", b.0, b.1, c.0, c.1);
    Ok(())
}

#[derive(Serialize)]
struct TuneReport<'a> {
    dataset: &'a str,
    learner: LearnerKind,
    seed: u64,
    #[serde(flatten)]
    outcome: smotuned::tune::TuneOutcome,
}

fn cmd_tune(a: &TuneArgs) -> Result<(), CliError> {
    let learner: LearnerKind = a.learner.parse().map_err(CliError::Usage)?;
    let goal: Measure = a.measure.parse().map_err(CliError::Usage)?;
    let d = load_csv(&a.input, &a.label)?;
    let p = shuffle_and_bin(&d, a.folds, a.seed)?;
    let folds: Vec<Dataset> = (0..a.folds).map(|b| d.subset(&p.members(b))).collect();
    let cfg = DeConfig { lives: a.lives, ..Default::default() };
    let spec = LearnerSpec::new(learner, a.seed);
    let outcome = smotuned(&folds, &spec, goal, &cfg, a.seed).map_err(runtime)?;
    match a.format {
        OutFormat::Json => {
            let report = TuneReport {
                dataset: d.name(),
                learner,
                seed: a.seed,
                outcome,
            };
            println!("{}", serde_json::to_string(&report).map_err(runtime)?);
        }
        OutFormat::Text => {
            let score = outcome.score.map_or("undefined".to_string(), |s| format!("{s:.4}"));
            println!(
                "{} {}: k={} m={} r={:.3}  validation {}={} ({} evaluations, {} generations)",
                d.name(),
                learner,
                outcome.params.k,
                outcome.params.m,
                outcome.params.r,
                goal,
                score,
                outcome.evaluations,
                outcome.generations
            );
        }
    }
    Ok(())
}

fn cmd_rank(a: &RankArgs) -> Result<(), CliError> {
    let file = File::open(&a.results)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.results.display())))?;
    let results = rig::read_results_csv(file).map_err(|e| CliError::Data(e.to_string()))?;
    let measures: Vec<Measure> = match &a.measures {
        Some(list) => list
            .split(',')
            .map(|s| s.parse())
            .collect::<Result<_, _>>()
            .map_err(CliError::Usage)?,
        None => first_seen(results.iter().map(|r| r.measure)),
    };
    let rankings = rank_all(&results, &measures, a.seed)?;
    let text = match a.format {
        OutFormat::Json => serde_json::to_string_pretty(&rankings).map_err(runtime)? + "\n",
        OutFormat::Text => {
            let learners = first_seen(results.iter().map(|r| r.learner));
            let mut prefilters: Vec<Prefilter> = first_seen(results.iter().map(|r| r.prefilter));
            prefilters.sort();
            rig::render_ranks_markdown(&rankings, &learners, &prefilters)
        }
    };
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(write_err(dir))?;
            let name = if a.format == OutFormat::Json { "ranks.json" } else { "ranks.md" };
            write_text(&dir.join(name), &text)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let name = a
        .output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "synthetic".into());
    let d = make_synthetic(a.n, a.features, a.minority, a.separation, a.seed)?.with_name(name);
    d.write_csv(&a.output, &a.label)?;
    let (pos, neg) = counts(&d);
    println!("wrote {} ({pos} defective, {neg} clean)", a.output.display());
    Ok(())
}

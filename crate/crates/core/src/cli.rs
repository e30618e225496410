//! The `catnet` command line: `gen`, `run` and `report`.
//!
//! Exit codes are 0 on success, 1 for usage or configuration problems and 2
//! for failures while a command is doing its work. Set `CATNET_LOG` (e.g.
//! `info`, `debug`) for log output on stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::classify::predictions_csv;
use crate::config::{manifest_path_for, RunConfig};
use crate::dataset::{encode, generate_synthetic, split_by_group, SyntheticSpec};
use crate::error::Error;
use crate::evaluate::{heatmap_pgm, matrix_csv, mean_summary_csv, mean_summary_rows, MetricsReport, RunReport};
use crate::exemplar::{ExemplarStore, FeatureMeanMatrix};
use crate::io::{sha256_hex, write_atomic};
use crate::model::Learner;
use crate::nn::checkpoint;
use crate::trainer::{run_schedule, RunObserver, StepRecord};

pub const PARTIAL_MARKER: &str = ".partial";
pub const METRICS_FILE: &str = "metrics.json";
pub const MEANS_FILE: &str = "feature_means.json";

#[derive(Debug, Parser)]
#[command(
    name = "catnet",
    version,
    about = "Class-incremental learning runs on multi-modal feature streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and its group split manifest.
    Gen(GenArgs),
    /// Train and evaluate one run into a fresh directory.
    Run(RunArgs),
    /// Summarize a finished run; writes R.pgm and mean_summary.csv into it.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// TOML file with the synthetic dataset parameters.
    #[arg(long)]
    pub spec: PathBuf,
    /// Dataset path; the manifest goes next to it as `<stem>.manifest.toml`.
    #[arg(long)]
    pub out: PathBuf,
    /// Overwrite an existing dataset and manifest.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run configuration (TOML). Relative data paths resolve against its
    /// directory.
    #[arg(long)]
    pub config: PathBuf,
    /// Run directory. Must be missing or empty unless --force is given.
    #[arg(long)]
    pub out: PathBuf,
    /// Replace the contents of an existing run directory. Only directories
    /// that hold a previous run (config.toml, metrics.json or a .partial
    /// marker) are cleared; anything else is refused.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directory containing metrics.json.
    #[arg(long)]
    pub run: PathBuf,
    /// Second run directory to print side by side.
    #[arg(long)]
    pub compare: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl Into<Error>) -> CliError {
    CliError::Runtime(e.into())
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter("CATNET_LOG")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a.spec, &a.out, a.force).map(|g| {
            println!("wrote {} ({} samples)", a.out.display(), g.samples);
            println!("manifest {}", g.manifest.display());
            println!("sha256 {}", g.digest);
        }),
        Command::Run(a) => cmd_run(&a.config, &a.out, a.force).map(|r| print!("{}", summary(&r))),
        Command::Report(a) => cmd_report(&a.run, a.compare.as_deref()).map(|text| print!("{text}")),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenOutcome {
    pub manifest: PathBuf,
    pub samples: usize,
    /// SHA-256 of the dataset file.
    pub digest: String,
}

pub fn cmd_gen(spec_path: &Path, out: &Path, force: bool) -> Result<GenOutcome, CliError> {
    let text = fs::read_to_string(spec_path).map_err(|e| usage(format!("cannot read {}: {e}", spec_path.display())))?;
    let spec: SyntheticSpec = toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", spec_path.display())))?;
    let problems = spec.problems();
    if !problems.is_empty() {
        return Err(usage(format!("{}: {}", spec_path.display(), problems.join("; "))));
    }
    let manifest_path = manifest_path_for(out);
    if !force {
        for p in [out, manifest_path.as_path()] {
            if p.exists() {
                return Err(usage(format!("{} exists; pass --force to overwrite", p.display())));
            }
        }
    }
    let dataset = generate_synthetic(&spec).map_err(usage)?;
    let manifest = split_by_group(&dataset, spec.split, spec.seed).map_err(usage)?;
    let bytes = encode(&dataset);
    write_atomic(out, &bytes).map_err(runtime)?;
    write_atomic(&manifest_path, manifest.to_toml().as_bytes()).map_err(runtime)?;
    Ok(GenOutcome {
        manifest: manifest_path,
        samples: dataset.samples().len(),
        digest: sha256_hex(&bytes),
    })
}

#[derive(Serialize, Deserialize)]
struct MeansFile {
    stream_dims: Vec<usize>,
    #[serde(flatten)]
    means: FeatureMeanMatrix,
}

struct ArtifactWriter<'a> {
    dir: &'a Path,
    log: String,
}

impl RunObserver for ArtifactWriter<'_> {
    fn on_step(&mut self, record: &StepRecord) {
        self.log
            .push_str(&serde_json::to_string(record).expect("step record serializes"));
        self.log.push('\n');
    }

    fn on_task_end(&mut self, task: usize, learner: &Learner, store: &ExemplarStore) -> crate::Result<()> {
        for (s, net) in learner.nets().iter().enumerate() {
            checkpoint::save(net, &self.dir.join(format!("checkpoints/task{task}_stream{s}.catn")))?;
        }
        let cache = serde_json::to_string_pretty(&store.to_cache())?;
        write_atomic(&self.dir.join(format!("exemplars/task{task}.json")), cache.as_bytes())?;
        write_atomic(&self.dir.join("train_log.jsonl"), self.log.as_bytes())
    }
}

fn is_run_dir(dir: &Path) -> bool {
    ["config.toml", METRICS_FILE, PARTIAL_MARKER]
        .iter()
        .any(|f| dir.join(f).exists())
}

fn prepare_out_dir(out: &Path, force: bool) -> Result<(), CliError> {
    if out.exists() {
        if !out.is_dir() {
            return Err(usage(format!("{} exists and is not a directory", out.display())));
        }
        let empty = fs::read_dir(out).map_err(runtime)?.next().is_none();
        if !empty {
            if !force {
                return Err(usage(format!(
                    "{} is not empty; pass --force to replace it",
                    out.display()
                )));
            }
            if !is_run_dir(out) {
                return Err(usage(format!(
                    "{} does not look like a run directory; refusing to clear it",
                    out.display()
                )));
            }
            fs::remove_dir_all(out).map_err(runtime)?;
        }
    }
    fs::create_dir_all(out).map_err(runtime)
}

/// Runs the configured schedule into `out` and returns the metrics that
/// were written to `metrics.json`.
pub fn cmd_run(config_path: &Path, out: &Path, force: bool) -> Result<RunReport, CliError> {
    let text =
        fs::read_to_string(config_path).map_err(|e| usage(format!("cannot read {}: {e}", config_path.display())))?;
    let config = RunConfig::from_toml(&text).map_err(|e| usage(format!("{}: {e}", config_path.display())))?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let (dataset, manifest) = config.load_data(base).map_err(usage)?;
    let spec = config.run_spec(&dataset).map_err(usage)?;
    let digest = config.digest();

    prepare_out_dir(out, force)?;
    let marker = out.join(PARTIAL_MARKER);
    write_atomic(&marker, format!("{digest}\n").as_bytes()).map_err(runtime)?;
    write_atomic(&out.join("config.toml"), text.as_bytes()).map_err(runtime)?;

    let mut writer = ArtifactWriter {
        dir: out,
        log: String::new(),
    };
    let outcome = run_schedule(&dataset, &manifest, &spec, &mut writer).map_err(runtime)?;
    write_atomic(&out.join("train_log.jsonl"), writer.log.as_bytes()).map_err(runtime)?;

    let metrics = MetricsReport::from_matrix(&outcome.matrix).map_err(runtime)?;
    let softmax = MetricsReport::from_matrix(&outcome.softmax_matrix).map_err(runtime)?;
    let run_id = out
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "run".to_string());
    let report = RunReport {
        run_id,
        config_digest: digest,
        method: config.method.to_string(),
        mode: config.mode.to_string(),
        r: outcome.matrix.rows(),
        bwt: metrics.bwt,
        bwt_delta: metrics.bwt_delta,
        mean_accuracy: metrics.mean_accuracy,
        initial_accuracy: metrics.initial_accuracy,
        per_task_final: metrics.per_task_final,
        micro_mean_accuracy: outcome.micro_accuracy,
        softmax_r: outcome.softmax_matrix.rows(),
        softmax_mean_accuracy: softmax.mean_accuracy,
        skipped_samples: outcome.skipped_samples,
    };

    write_atomic(&out.join("R.csv"), matrix_csv(&outcome.matrix).as_bytes()).map_err(runtime)?;
    write_atomic(
        &out.join("R_softmax.csv"),
        matrix_csv(&outcome.softmax_matrix).as_bytes(),
    )
    .map_err(runtime)?;
    write_atomic(
        &out.join("predictions.csv"),
        predictions_csv(&outcome.predictions).as_bytes(),
    )
    .map_err(runtime)?;
    let lr = serde_json::to_string(&outcome.lr_traces).map_err(runtime)?;
    write_atomic(&out.join("lr_trace.json"), lr.as_bytes()).map_err(runtime)?;
    if let Some(means) = outcome.means {
        let file = MeansFile {
            stream_dims: outcome.learner.stream_dims(),
            means,
        };
        let json = serde_json::to_string(&file).map_err(runtime)?;
        write_atomic(&out.join(MEANS_FILE), json.as_bytes()).map_err(runtime)?;
    }
    write_atomic(&out.join(METRICS_FILE), report.to_json().as_bytes()).map_err(runtime)?;
    fs::remove_file(&marker).map_err(runtime)?;
    log::info!("run {} finished", report.run_id);
    Ok(report)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

/// Plain-text summary of one run.
pub fn summary(r: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "run {} ({} / {})", r.run_id, r.method, r.mode);
    let _ = writeln!(out, "config digest {}", r.config_digest);
    let _ = writeln!(out, "tasks {}", r.r.len());
    let _ = writeln!(out, "BWT {}", fmt_opt(r.bwt));
    let _ = writeln!(out, "mean accuracy {:.4}", r.mean_accuracy);
    let _ = writeln!(out, "initial accuracy {:.4}", r.initial_accuracy);
    let _ = writeln!(out, "final accuracy by task");
    for (j, v) in r.per_task_final.iter().enumerate() {
        let _ = writeln!(out, "  task {j}  {v:.4}");
    }
    out
}

/// Two runs side by side, one metric per line.
pub fn compare_table(a: &RunReport, b: &RunReport) -> String {
    let mut rows = vec![
        ("method".to_string(), a.method.clone(), b.method.clone()),
        ("mode".to_string(), a.mode.clone(), b.mode.clone()),
        ("tasks".to_string(), a.r.len().to_string(), b.r.len().to_string()),
        ("BWT".to_string(), fmt_opt(a.bwt), fmt_opt(b.bwt)),
        (
            "mean accuracy".to_string(),
            format!("{:.4}", a.mean_accuracy),
            format!("{:.4}", b.mean_accuracy),
        ),
        (
            "initial accuracy".to_string(),
            format!("{:.4}", a.initial_accuracy),
            format!("{:.4}", b.initial_accuracy),
        ),
    ];
    for j in 0..a.per_task_final.len().max(b.per_task_final.len()) {
        let cell = |r: &RunReport| fmt_opt(r.per_task_final.get(j).copied());
        rows.push((format!("task {j} final"), cell(a), cell(b)));
    }
    let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max("metric".len());
    let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0).max(a.run_id.len());
    let mut out = format!("{:<w0$}  {:<w1$}  {}\n", "metric", a.run_id, b.run_id);
    for (name, x, y) in rows {
        let _ = writeln!(out, "{name:<w0$}  {x:<w1$}  {y}");
    }
    out
}

fn load_report(dir: &Path) -> Result<RunReport, CliError> {
    let path = dir.join(METRICS_FILE);
    let text = fs::read_to_string(&path).map_err(|_| usage(Error::MissingArtifact(path.clone())))?;
    RunReport::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Prints the summary (or the comparison table) and writes `R.pgm` and
/// `mean_summary.csv` into the first run directory.
pub fn cmd_report(run: &Path, compare: Option<&Path>) -> Result<String, CliError> {
    let report = load_report(run)?;
    let matrix = report.matrix().map_err(usage)?;
    write_atomic(&run.join("R.pgm"), &heatmap_pgm(&matrix)).map_err(runtime)?;

    let means_path = run.join(MEANS_FILE);
    let rows = if means_path.exists() {
        let text = fs::read_to_string(&means_path).map_err(runtime)?;
        let file: MeansFile =
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", means_path.display())))?;
        mean_summary_rows(&file.means, &file.stream_dims).map_err(usage)?
    } else {
        Vec::new()
    };
    write_atomic(&run.join("mean_summary.csv"), mean_summary_csv(&rows).as_bytes()).map_err(runtime)?;

    match compare {
        None => Ok(summary(&report)),
        Some(other) => Ok(compare_table(&report, &load_report(other)?)),
    }
}

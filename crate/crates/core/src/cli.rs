//! The `dqrc` command-line driver.
//!
//! Exit codes: 0 success, 1 other failure, 2 data error, 3 config or usage
//! error, 4 service error.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::data::{
    compute_metrics, load_series, make_windows, synthesize_series, DataSource, DatasetArtifact, ForecastMetrics,
    SplitSpec, SynthComponents, DEFAULT_COLUMN, DEFAULT_WINDOW,
};
use crate::error::{Error, ErrorCategory, Result};
use crate::orchestrator::{
    build_pipeline, predict_dataset, train, worker_serve, ArchitectureConfig, BackendMode, BackendSet, BackendSpec,
    DispatchCounts, ExperimentConfig, TrainedPipeline, Variant, WorkerOptions, WorkerServer, DEFAULT_MAX_TRAIN_SAMPLES,
};
use crate::readout::{ReadoutKind, DEFAULT_LAMBDA};
use crate::reservoir::{NeuronKind, DEFAULT_PASSES};
use crate::simulator::{Calibration, NoiseModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_SERVICE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "dqrc", version, about = "Distributed quantum reservoir computing for load forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Window, normalize and split a series into a dataset artifact.
    Prepare(PrepareArgs),
    /// Train and evaluate one configured experiment.
    Run(RunArgs),
    /// Run a grid of experiments and emit per-architecture tables.
    Sweep(SweepArgs),
    /// Serve the worker protocol.
    Worker(WorkerArgs),
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Headered delimited input file.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_COLUMN)]
    pub column: String,
    /// Generate a synthetic hourly load series instead of reading a file.
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long, default_value_t = 3000)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long)]
    pub trend: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Sample counts `TRAIN,VAL,TEST`; defaults to 70/15/15.
    #[arg(long, value_parser = parse_split)]
    pub split: Option<SplitSpec>,
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory for `result.json`, `result.csv` and `model.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the grid file's `dataset`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Keep rows already completed in `rows.jsonl`.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "transport")]
pub struct WorkerTransport {
    #[arg(long)]
    pub listen: Option<String>,
    #[arg(long)]
    pub stdio: bool,
}

#[derive(Debug, Args)]
pub struct WorkerArgs {
    #[command(flatten)]
    pub transport: WorkerTransport,
    /// Default noise for requests that carry none: built-in name or TOML path.
    #[arg(long)]
    pub calibration: Option<String>,
}

fn parse_split(s: &str) -> std::result::Result<SplitSpec, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [train, val, test] => Ok(SplitSpec::new(train, val, test)),
        _ => Err("expected TRAIN,VAL,TEST".into()),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.category() {
        ErrorCategory::Data => EXIT_DATA,
        ErrorCategory::Config => EXIT_CONFIG,
        ErrorCategory::Service => EXIT_SERVICE,
        ErrorCategory::Invalid | ErrorCategory::Numerical => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Prepare(a) => cmd_prepare(&a, out).map(|_| ()),
        Command::Run(a) => cmd_run(&a.config, &a.dataset, &a.out, out).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(&a, out).map(|_| ()),
        Command::Worker(a) => cmd_worker(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn cmd_prepare(args: &PrepareArgs, out: &mut dyn Write) -> Result<DatasetArtifact> {
    let (series, source) = match &args.input {
        Some(path) => (
            load_series(path, &args.column)?,
            DataSource::File { path: path.display().to_string(), column: args.column.clone() },
        ),
        None => {
            let mut components = SynthComponents::default();
            if let Some(n) = args.noise_std {
                components.noise_std = n;
            }
            if let Some(t) = args.trend {
                components.trend = t;
            }
            (
                synthesize_series(args.length, args.seed, &components)?,
                DataSource::Synthetic { length: args.length, seed: args.seed, components },
            )
        }
    };
    if series.len() <= args.window {
        return Err(Error::data(format!("series of length {} is too short for window {}", series.len(), args.window)));
    }
    let samples = series.len() - args.window;
    let split = args.split.unwrap_or_else(|| SplitSpec::default_for(samples));
    let data = make_windows(&series, args.window, split)?;
    let artifact = DatasetArtifact::new(source, series.len(), data);
    artifact.save(&args.output)?;
    writeln!(
        out,
        "series length {}, window {}, samples {samples} (train {}, val {}, test {}), train range [{}, {}] -> {}",
        series.len(),
        args.window,
        split.train,
        split.val,
        split.test,
        artifact.data.norm.min,
        artifact.data.norm.max,
        args.output.display()
    )?;
    Ok(artifact)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub val: Option<ForecastMetrics>,
    pub test: ForecastMetrics,
}

/// One evaluated configuration. Wall-clock time is reported on stdout and
/// kept out of the serialized record so reruns produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub label: String,
    pub execution: String,
    pub config: ExperimentConfig,
    pub dataset: String,
    pub seed: u64,
    pub train_samples: usize,
    pub stride: usize,
    pub metrics: SplitMetrics,
    pub dispatch: Vec<DispatchCounts>,
    pub artifacts: Vec<String>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Row label in the style of the result tables: `N`, `RxN`, `N/I`, `RxN/I`.
pub fn row_label(a: &ArchitectureConfig) -> String {
    match a.variant {
        Variant::SRSR => a.neurons_per_reservoir.to_string(),
        Variant::MRSR => format!("{}x{}", a.num_reservoirs, a.neurons_per_reservoir),
        Variant::SRMR => format!("{}/{}", a.neurons_per_reservoir, a.ridge_instances),
        Variant::MRMR => format!("{}x{}/{}", a.num_reservoirs, a.neurons_per_reservoir, a.ridge_instances),
    }
}

fn execution_label(specs: &[BackendSpec]) -> &'static str {
    if specs.iter().any(|b| b.mode == BackendMode::Noisy) {
        "noisy"
    } else {
        "ideal"
    }
}

/// Trains on the train split and scores the val and test splits.
pub fn run_experiment(
    config: &ExperimentConfig,
    dataset: &DatasetArtifact,
    dataset_label: &str,
    base: Option<&Path>,
) -> Result<(ExperimentResult, TrainedPipeline)> {
    config.validate()?;
    if let Some(w) = config.dataset.window {
        if w != dataset.data.window {
            return Err(Error::config(format!(
                "config expects window {w}, dataset {dataset_label} has window {}",
                dataset.data.window
            )));
        }
    }
    let started = Instant::now();
    let specs = config.backend_specs();
    let backends = BackendSet::from_specs(&specs, base, config.shots, config.workers)?;
    let pipeline = build_pipeline(&config.architecture, dataset.data.window)?;
    let trained = train(&pipeline, &dataset.data.train, &backends, config.max_train_samples)?;
    let score = |split: &crate::data::WindowedDataset| -> Result<ForecastMetrics> {
        compute_metrics(&split.targets, &predict_dataset(&trained, split, &backends)?)
    };
    let val = if dataset.data.val.is_empty() { None } else { Some(score(&dataset.data.val)?) };
    let test = score(&dataset.data.test)?;
    let result = ExperimentResult {
        label: row_label(&config.architecture),
        execution: execution_label(&specs).into(),
        config: config.clone(),
        dataset: dataset_label.into(),
        seed: config.architecture.seed,
        train_samples: trained.train_samples,
        stride: trained.stride,
        metrics: SplitMetrics { val, test },
        dispatch: backends.dispatch_counts(),
        artifacts: Vec::new(),
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((result, trained))
}

fn write_result_csv(path: &Path, r: &ExperimentResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record([
        "label",
        "variant",
        "reservoirs",
        "neurons_per_reservoir",
        "ridge_instances",
        "reservoir_kind",
        "readout_kind",
        "execution",
        "MAE",
        "RMSE",
        "R2",
        "val_MAE",
        "val_RMSE",
        "val_R2",
    ])
    .map_err(csv_error)?;
    let a = &r.config.architecture;
    let t = &r.metrics.test;
    let v = r.metrics.val.as_ref();
    let fmt = |x: Option<f64>| x.map_or(String::new(), |x| format!("{x:.6}"));
    w.write_record([
        r.label.clone(),
        a.variant.to_string(),
        a.num_reservoirs.to_string(),
        a.neurons_per_reservoir.to_string(),
        a.ridge_instances.to_string(),
        a.reservoir_kind.to_string(),
        a.readout_kind.to_string(),
        r.execution.clone(),
        fmt(Some(t.mae)),
        fmt(Some(t.rmse)),
        fmt(Some(t.r2)),
        fmt(v.map(|m| m.mae)),
        fmt(v.map(|m| m.rmse)),
        fmt(v.map(|m| m.r2)),
    ])
    .map_err(csv_error)?;
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn cmd_run(
    config_path: &Path,
    dataset_path: &Path,
    out_dir: &Path,
    out: &mut dyn Write,
) -> Result<ExperimentResult> {
    let config = ExperimentConfig::load(config_path)?;
    let dataset = DatasetArtifact::load(dataset_path)?;
    fs::create_dir_all(out_dir)?;
    let (mut result, trained) =
        run_experiment(&config, &dataset, &dataset_path.display().to_string(), config_path.parent())?;
    let (json, csv_path, model) = (out_dir.join("result.json"), out_dir.join("result.csv"), out_dir.join("model.json"));
    result.artifacts = [&json, &csv_path, &model].iter().map(|p| p.display().to_string()).collect();
    trained.save(&model)?;
    write_json(&json, &result)?;
    write_result_csv(&csv_path, &result)?;
    let t = &result.metrics.test;
    writeln!(
        out,
        "{} {} ({}/{} {}): test MAE {:.4} RMSE {:.4} R2 {:.4} in {:.1}s",
        config.architecture.variant,
        result.label,
        config.architecture.reservoir_kind,
        config.architecture.readout_kind,
        result.execution,
        t.mae,
        t.rmse,
        t.r2,
        result.wall_seconds
    )?;
    for d in &result.dispatch {
        writeln!(out, "  {:<16} expectation {:>10} kernel {:>12}", d.backend, d.expectation, d.kernel)?;
    }
    Ok(result)
}

fn default_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}
fn default_splits() -> Vec<usize> {
    vec![2, 3, 5]
}
fn default_reservoir_kinds() -> Vec<NeuronKind> {
    vec![NeuronKind::Classical, NeuronKind::Quantum]
}
fn default_readout_kinds() -> Vec<ReadoutKind> {
    vec![ReadoutKind::Classical, ReadoutKind::Quantum]
}
fn default_executions() -> Vec<BackendMode> {
    vec![BackendMode::Ideal]
}
fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}
fn default_passes() -> usize {
    DEFAULT_PASSES
}
fn default_max_train_samples() -> usize {
    DEFAULT_MAX_TRAIN_SAMPLES
}

fn default_kernel_qubits() -> usize {
    10
}

/// Backend names used by the sweep, in placement order.
pub const SWEEP_BACKENDS: [&str; 3] = ["ibm_marrakesh", "ibm_brisbane", "ionq_aria_1"];

/// Sweep grid file schema (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dataset: Option<String>,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    /// Total reservoir neurons per configuration.
    pub neurons: Vec<usize>,
    #[serde(default = "default_splits")]
    pub reservoirs: Vec<usize>,
    #[serde(default = "default_splits")]
    pub ridge_instances: Vec<usize>,
    #[serde(default = "default_reservoir_kinds")]
    pub reservoir_kinds: Vec<NeuronKind>,
    #[serde(default = "default_readout_kinds")]
    pub readout_kinds: Vec<ReadoutKind>,
    #[serde(default = "default_executions")]
    pub executions: Vec<BackendMode>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_passes")]
    pub passes: usize,
    #[serde(default = "default_kernel_qubits")]
    pub kernel_qubits: usize,
    #[serde(default = "default_max_train_samples")]
    pub max_train_samples: usize,
    #[serde(default)]
    pub shots: Option<u32>,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// Architecture shapes `(reservoirs, neurons per reservoir, instances)` of
    /// `variant`, in grid order.
    pub fn shapes(&self, variant: Variant) -> Vec<(usize, usize, usize)> {
        let mut shapes = Vec::new();
        for &n in &self.neurons {
            match variant {
                Variant::SRSR => shapes.push((1, n, 1)),
                Variant::SRMR => shapes.extend(self.ridge_instances.iter().filter(|&&i| i <= n).map(|&i| (1, n, i))),
                Variant::MRSR | Variant::MRMR => {
                    for &r in self.reservoirs.iter().filter(|&&r| r > 0 && n % r == 0) {
                        shapes.push((r, n / r, if variant == Variant::MRMR { r } else { 1 }));
                    }
                }
            }
        }
        shapes
    }

    /// Every experiment of the grid with its stable row id. Fully classical
    /// configurations run only once, under ideal execution.
    pub fn experiments(&self) -> Vec<(String, ExperimentConfig)> {
        let mut out = Vec::new();
        for &variant in &self.variants {
            for (r, n, i) in self.shapes(variant) {
                for &rk in &self.reservoir_kinds {
                    for &ok in &self.readout_kinds {
                        for &mode in &self.executions {
                            let classical = rk == NeuronKind::Classical && ok == ReadoutKind::Classical;
                            if classical && mode == BackendMode::Noisy {
                                continue;
                            }
                            let mut a = ArchitectureConfig::new(variant, r, n, i, rk, ok, self.seed);
                            a.lambda = self.lambda;
                            a.passes = self.passes;
                            a.kernel_qubits = self.kernel_qubits;
                            let mut c = ExperimentConfig::new(a);
                            c.backends = SWEEP_BACKENDS
                                .iter()
                                .map(|name| match mode {
                                    BackendMode::Ideal => BackendSpec::ideal(*name),
                                    BackendMode::Noisy => BackendSpec::noisy(*name, *name, self.shots),
                                })
                                .collect();
                            c.max_train_samples = Some(self.max_train_samples);
                            c.workers = self.workers;
                            let mode_name = if mode == BackendMode::Noisy { "noisy" } else { "ideal" };
                            let id = format!("{variant}|{r}x{n}/{i}|{rk}|{ok}|{mode_name}");
                            out.push((id, c));
                        }
                    }
                }
            }
        }
        out
    }
}

/// One line of `rows.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<ExperimentResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepSummary {
    pub computed: usize,
    pub reused: usize,
    pub failed: usize,
}

fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // A torn final line from an interrupted run is dropped.
        if let Ok(r) = serde_json::from_str::<SweepRow>(&line) {
            rows.push(r);
        }
    }
    Ok(rows)
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<SweepSummary> {
    let grid = SweepConfig::load(&args.grid)?;
    let base = args.grid.parent().unwrap_or(Path::new("."));
    let dataset_path = match (&args.dataset, &grid.dataset) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => base.join(p),
        (None, None) => return Err(Error::config("no dataset given (grid `dataset` or --dataset)")),
    };
    let dataset = DatasetArtifact::load(&dataset_path)?;
    fs::create_dir_all(&args.out)?;
    let rows_path = args.out.join("rows.jsonl");
    let done: BTreeMap<String, SweepRow> = if args.resume {
        read_rows(&rows_path)?.into_iter().filter(|r| r.result.is_some()).map(|r| (r.id.clone(), r)).collect()
    } else {
        BTreeMap::new()
    };
    let experiments = grid.experiments();
    let mut summary = SweepSummary::default();
    let mut rows = Vec::with_capacity(experiments.len());
    {
        let mut log = BufWriter::new(OpenOptions::new().create(true).write(true).truncate(true).open(&rows_path)?);
        let label = dataset_path.display().to_string();
        for (id, config) in &experiments {
            let row = match done.get(id) {
                Some(r) => {
                    summary.reused += 1;
                    r.clone()
                }
                None => {
                    summary.computed += 1;
                    match run_experiment(config, &dataset, &label, Some(base)) {
                        Ok((r, _)) => {
                            writeln!(
                                out,
                                "{id}: test MAE {:.4} RMSE {:.4} ({:.1}s)",
                                r.metrics.test.mae, r.metrics.test.rmse, r.wall_seconds
                            )?;
                            SweepRow { id: id.clone(), result: Some(r), error: None }
                        }
                        Err(e) => {
                            summary.failed += 1;
                            writeln!(out, "{id}: failed: {e}")?;
                            SweepRow { id: id.clone(), result: None, error: Some(e.to_string()) }
                        }
                    }
                }
            };
            serde_json::to_writer(&mut log, &row)?;
            log.write_all(b"\n")?;
            log.flush()?;
            rows.push(row);
        }
    }
    write_tables(&grid, &rows, &args.out)?;
    writeln!(
        out,
        "{} rows: {} computed, {} reused, {} failed -> {}",
        rows.len(),
        summary.computed,
        summary.reused,
        summary.failed,
        args.out.display()
    )?;
    Ok(summary)
}

fn column_group(r: &ExperimentResult) -> String {
    let a = &r.config.architecture;
    format!("{}-reservoir/{}-ridge/{}", a.reservoir_kind, a.readout_kind, r.execution)
}

/// Writes `<VARIANT>.csv` and `<VARIANT>.txt` (rows = configurations, a
/// MAE/RMSE/R2 column triple per reservoir/readout/execution group) plus the
/// long-format `curves.csv`.
fn write_tables(grid: &SweepConfig, rows: &[SweepRow], dir: &Path) -> Result<()> {
    let ok: Vec<(&str, &ExperimentResult)> =
        rows.iter().filter_map(|r| r.result.as_ref().map(|x| (r.id.as_str(), x))).collect();
    let failed: BTreeSet<&str> = rows.iter().filter(|r| r.error.is_some()).map(|r| r.id.as_str()).collect();
    for &variant in &grid.variants {
        let of_variant: Vec<&(&str, &ExperimentResult)> =
            ok.iter().filter(|(_, r)| r.config.architecture.variant == variant).collect();
        let mut groups: Vec<String> = Vec::new();
        for (_, r) in &of_variant {
            let g = column_group(r);
            if !groups.contains(&g) {
                groups.push(g);
            }
        }
        let mut labels: Vec<String> = Vec::new();
        for (r, n, i) in grid.shapes(variant) {
            let mut a = ArchitectureConfig::new(variant, r, n, i, NeuronKind::Classical, ReadoutKind::Classical, 0);
            a.ridge_instances = i;
            let l = row_label(&a);
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
        let mut header = vec!["configuration".to_string()];
        for g in &groups {
            header.extend(["MAE", "RMSE", "R2"].iter().map(|m| format!("{g} {m}")));
        }
        let mut table = vec![header];
        for l in &labels {
            let mut line = vec![l.clone()];
            for g in &groups {
                match of_variant.iter().find(|(_, r)| &r.label == l && &column_group(r) == g) {
                    Some((_, r)) => {
                        let t = &r.metrics.test;
                        line.extend([t.mae, t.rmse, t.r2].iter().map(|x| format!("{x:.4}")));
                    }
                    None => {
                        let marker =
                            if failed.iter().any(|id| id.starts_with(&format!("{variant}|"))) { "-" } else { "" };
                        line.extend(std::iter::repeat_n(marker.to_string(), 3));
                    }
                }
            }
            table.push(line);
        }
        let mut w = csv::Writer::from_path(dir.join(format!("{variant}.csv"))).map_err(csv_error)?;
        for line in &table {
            w.write_record(line).map_err(csv_error)?;
        }
        w.flush()?;
        fs::write(dir.join(format!("{variant}.txt")), aligned(&table))?;
    }
    let mut w = csv::Writer::from_path(dir.join("curves.csv")).map_err(csv_error)?;
    w.write_record([
        "variant",
        "configuration",
        "total_neurons",
        "reservoirs",
        "ridge_instances",
        "reservoir_kind",
        "readout_kind",
        "execution",
        "metric",
        "value",
    ])
    .map_err(csv_error)?;
    for (_, r) in &ok {
        let a = &r.config.architecture;
        let t = &r.metrics.test;
        for (metric, value) in [("MAE", t.mae), ("RMSE", t.rmse), ("R2", t.r2)] {
            w.write_record([
                a.variant.to_string(),
                r.label.clone(),
                a.total_neurons().to_string(),
                a.num_reservoirs.to_string(),
                a.ridge_instances.to_string(),
                a.reservoir_kind.to_string(),
                a.readout_kind.to_string(),
                r.execution.clone(),
                metric.to_string(),
                format!("{value:.6}"),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn aligned(table: &[Vec<String>]) -> String {
    let cols = table.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| table.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for row in table {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        s.push_str(cells.join("  ").trim_end());
        s.push('\n');
    }
    s
}

fn worker_noise(calibration: Option<&str>) -> Result<Option<NoiseModel>> {
    let Some(c) = calibration else {
        return Ok(None);
    };
    let cal = if Calibration::builtin_names().any(|n| n == c) {
        Calibration::builtin(c)?
    } else {
        Calibration::load(Path::new(c))?
    };
    Ok(Some(NoiseModel::from_calibration(&cal)?))
}

pub fn cmd_worker(args: &WorkerArgs, out: &mut dyn Write) -> Result<()> {
    let options = WorkerOptions { noise: worker_noise(args.calibration.as_deref())?, fault: None };
    if args.transport.stdio {
        let stdin = std::io::stdin();
        let stdout = std::io::stdout();
        worker_serve(stdin.lock(), stdout.lock(), &options)?;
        return Ok(());
    }
    let address = args.transport.listen.as_deref().unwrap_or("127.0.0.1:0");
    let server = WorkerServer::bind(address, options)?;
    writeln!(out, "listening on {}", server.local_addr()?)?;
    out.flush()?;
    server.serve()
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use gssl_core::bench::{run_bench, run_single_trial, BenchPlan, PROTOCOL};
use gssl_core::data::{load_dataset, save_dataset, synth_sbm_generate, Dataset, Setting, SynthConfig};
use gssl_core::model::ModelKind;
use gssl_core::rng::stream;
use gssl_core::train::{grid_search, write_log, FitMetrics, GridSpec, TrainConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "gssl", version, about = "Generative graph semi-supervised node classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a dataset directory, print its counts and check every invariant.
    Validate {
        #[arg(long)]
        dataset: String,
    },
    /// Fit one model and write checkpoint, training log and metrics.
    Train(RunArgs),
    /// Grid-search one model and write per-cell scores plus the selected config.
    Grid(RunArgs),
    /// Run the full datasets x settings x models benchmark.
    Bench(RunArgs),
    /// Generate a stochastic-block-model dataset directory.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Dataset name under $GRAPH_SSL_DATA or a directory path. Comma-separated for bench.
    #[arg(long, value_delimiter = ',', required = true)]
    dataset: Vec<String>,
    /// Model name; comma-separated for bench (default: all seven).
    #[arg(long, value_delimiter = ',')]
    model: Vec<String>,
    /// standard, missing_edge or reduced_label; comma-separated for bench (default: all).
    #[arg(long, value_delimiter = ',')]
    setting: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bench: trials per cell (default 10). Grid: trials per grid cell (default 1).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
    /// TOML file with training-config keys; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Bench: reuse completed cells found under --out.
    #[arg(long)]
    resume: bool,
    /// Bench: fit the base config directly instead of grid-searching each cell.
    #[arg(long)]
    no_grid: bool,
    /// Bench: trials per grid cell during selection.
    #[arg(long, default_value_t = 1)]
    grid_trials: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TOML file with generator keys; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    feature_dim: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
}

/// Marks errors caused by bad input so they map to exit code 2.
#[derive(Debug)]
struct InvalidInput;

impl std::fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("invalid input")
    }
}

trait Invalid<T> {
    fn invalid(self) -> anyhow::Result<T>;
}

impl<T, E: Into<anyhow::Error>> Invalid<T> for Result<T, E> {
    fn invalid(self) -> anyhow::Result<T> {
        self.map_err(|e| e.into().context(InvalidInput))
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use gssl_core::Error as E;
    let input = err.downcast_ref::<InvalidInput>().is_some()
        || err
            .chain()
            .any(|c| matches!(c.downcast_ref::<E>(), Some(E::Load { .. } | E::Config(_) | E::Dataset(_))));
    if input {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { dataset } => cmd_validate(&dataset),
        Command::Train(a) => cmd_train(&a),
        Command::Grid(a) => cmd_grid(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Synth(a) => cmd_synth(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn resolve_dataset(name: &str) -> PathBuf {
    if let Some(root) = std::env::var_os("GRAPH_SSL_DATA") {
        let p = Path::new(&root).join(name);
        if p.is_dir() {
            return p;
        }
    }
    PathBuf::from(name)
}

fn dataset_label(dir: &Path) -> String {
    dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn load(name: &str) -> anyhow::Result<(String, Dataset)> {
    let dir = resolve_dataset(name);
    if !dir.is_dir() {
        return Err(anyhow::anyhow!("dataset {name:?} not found (looked for directory {})", dir.display()))
            .invalid();
    }
    let (ds, report) = load_dataset(&dir).invalid()?;
    if report.cleanup.duplicates > 0 {
        log::warn!("{}: dropped {} duplicate edges", dir.display(), report.cleanup.duplicates);
    }
    if report.cleanup.self_loops > 0 {
        log::warn!("{}: dropped {} self-loops", dir.display(), report.cleanup.self_loops);
    }
    Ok((dataset_label(&dir), ds))
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).invalid()?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display())).invalid()
}

fn parse_models(names: &[String]) -> anyhow::Result<Vec<ModelKind>> {
    names.iter().map(|m| m.parse::<ModelKind>()).collect::<Result<_, _>>().invalid()
}

fn parse_settings(names: &[String]) -> anyhow::Result<Vec<Setting>> {
    names.iter().map(|s| s.parse::<Setting>()).collect::<Result<_, _>>().invalid()
}

fn base_config(a: &RunArgs) -> anyhow::Result<TrainConfig> {
    let mut c: TrainConfig = match &a.config {
        Some(p) => read_toml(p)?,
        None => TrainConfig::default(),
    };
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = a.eta {
        c.eta = v;
    }
    if let Some(v) = a.p0 {
        c.p0 = v;
    }
    if let Some(v) = a.p1 {
        c.p1 = v;
    }
    if let Some(v) = a.hidden {
        c.hidden = v;
    }
    if let Some(v) = a.lr {
        c.lr = v;
    }
    if let Some(v) = a.max_epochs {
        c.max_epochs = v;
    }
    if let Some(v) = a.patience {
        c.patience = v;
    }
    Ok(c)
}

/// Flags given explicitly pin the matching grid axis.
fn grid_spec(a: &RunArgs) -> GridSpec {
    let mut g = GridSpec::default();
    if let Some(v) = a.hidden {
        g.hidden = vec![v];
    }
    if let Some(v) = a.lr {
        g.lr = vec![v];
    }
    if let Some(v) = a.eta {
        g.eta = vec![v];
    }
    if a.p0.is_some() || a.p1.is_some() {
        g.sbm = vec![(a.p0.unwrap_or(0.9), a.p1.unwrap_or(0.1))];
    }
    g
}

fn warn_eta(a: &RunArgs, models: &[ModelKind]) {
    if a.eta.is_some() {
        let baselines: Vec<&str> = models.iter().filter(|m| !m.is_generative()).map(|m| m.name()).collect();
        if !baselines.is_empty() {
            log::warn!("--eta is ignored for baselines without a generative term: {}", baselines.join(", "));
        }
    }
}

fn single<'a, T>(what: &str, items: &'a [T]) -> anyhow::Result<&'a T> {
    match items {
        [one] => Ok(one),
        _ => Err(anyhow::anyhow!("{what} takes exactly one value here (got {})", items.len())).invalid(),
    }
}

/// Model and setting of a single-model command. Without `--model` the
/// config file must name one.
fn single_run(a: &RunArgs) -> anyhow::Result<(TrainConfig, Setting)> {
    let mut config = base_config(a)?;
    if !a.model.is_empty() {
        config.model = *single("--model", &parse_models(&a.model)?)?;
    } else if a.config.is_none() {
        return Err(anyhow::anyhow!("--model is required")).invalid();
    }
    let setting = match a.setting.as_slice() {
        [] => Setting::Standard,
        s => *single("--setting", &parse_settings(s)?)?,
    };
    warn_eta(a, &[config.model]);
    Ok((config, setting))
}

fn mkdir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn cmd_validate(name: &str) -> anyhow::Result<u8> {
    let (label, ds) = load(name)?;
    let g = &ds.graph;
    println!("dataset {label}");
    println!("  nodes     {}", ds.num_nodes());
    println!("  edges     {}", g.num_edges());
    println!("  features  {}", ds.num_features());
    println!("  classes   {}", ds.num_classes);
    println!("  split     train {} / val {} / test {}", ds.observed_nodes().len(), ds.val.len(), ds.test.len());
    println!("  train per class {:?}", ds.class_counts(&ds.observed_nodes()));
    let components = g.components();
    let num_components = components.iter().max().map_or(0, |m| m + 1);
    println!("  connected components {num_components}");
    ds.validate().invalid()?;
    println!("invariants ok: labels in range, splits disjoint and in range, edges canonical and loop-free, features finite");
    Ok(0)
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    dataset: &'a str,
    setting: Setting,
    config: &'a TrainConfig,
    #[serde(flatten)]
    metrics: &'a FitMetrics,
}

fn cmd_train(a: &RunArgs) -> anyhow::Result<u8> {
    let (label, ds) = load(single("--dataset", &a.dataset)?)?;
    let (config, setting) = single_run(a)?;
    let model = config.model;
    config.validate().invalid()?;
    let (report, fitted) = run_single_trial(&ds, setting, &config, 0, config.seed)?;
    mkdir(&a.out)?;
    fitted.bundle.params.to_checkpoint(model.name()).save(a.out.join("checkpoint.json"))?;
    write_log(&fitted.log, a.out.join("train_log.jsonl"))?;
    let out = TrainOutput {
        dataset: &label,
        setting,
        config: &config,
        metrics: &fitted.metrics,
    };
    write_json(&a.out.join("metrics.json"), &out)?;
    println!(
        "{model} on {label} ({setting}): test {:.4} val {:.4}, best epoch {} of {}",
        report.test_acc, report.val_acc, report.best_epoch, report.epochs_run
    );
    Ok(0)
}

fn cmd_grid(a: &RunArgs) -> anyhow::Result<u8> {
    let (label, ds) = load(single("--dataset", &a.dataset)?)?;
    let (base, setting) = single_run(a)?;
    let model = base.model;
    base.validate().invalid()?;
    let trials = a.trials.unwrap_or(1);
    if trials == 0 {
        return Err(anyhow::anyhow!("--trials must be positive")).invalid();
    }
    let outcome = grid_search(&grid_spec(a), &base, &ds, setting, trials, base.seed, a.jobs)?;
    mkdir(&a.out)?;
    outcome.write_csv(a.out.join("grid.csv"))?;
    let best = outcome.best_config();
    fs::write(a.out.join("best_config.toml"), toml::to_string(best)?)?;
    let cell = &outcome.cells[outcome.best];
    println!(
        "{model} on {label} ({setting}): {} cells, selected hidden={} lr={} eta={} p0={} p1={} (val {:.4} ± {:.4})",
        outcome.cells.len(),
        best.hidden,
        best.lr,
        best.eta,
        best.p0,
        best.p1,
        cell.mean_val_acc,
        cell.std_val_acc
    );
    Ok(0)
}

fn cmd_bench(a: &RunArgs) -> anyhow::Result<u8> {
    let models = if a.model.is_empty() { ModelKind::ALL.to_vec() } else { parse_models(&a.model)? };
    let settings = if a.setting.is_empty() { Setting::ALL.to_vec() } else { parse_settings(&a.setting)? };
    warn_eta(a, &models);
    let mut datasets = Vec::new();
    for name in &a.dataset {
        datasets.push(load(name)?);
    }
    let base = base_config(a)?;
    base.validate().invalid()?;
    let plan = BenchPlan {
        settings,
        models,
        trials: a.trials.unwrap_or(10),
        seed: base.seed,
        jobs: a.jobs,
        grid: (!a.no_grid).then(|| grid_spec(a)),
        grid_trials: a.grid_trials,
        resume: a.resume,
        base,
    };
    if plan.trials == 0 || plan.grid_trials == 0 {
        return Err(anyhow::anyhow!("--trials and --grid-trials must be positive")).invalid();
    }
    log::info!("{PROTOCOL}");
    let outcome = run_bench(&plan, &datasets, &a.out)?;
    println!(
        "{} cells ({} resumed), {} failed; summary in {}",
        outcome.cells.len() + outcome.failures.len(),
        outcome.resumed,
        outcome.failures.len(),
        a.out.join("summary.md").display()
    );
    for f in &outcome.failures {
        eprintln!("failed: {}/{}/{}: {}", f.dataset, f.setting, f.model, f.error);
    }
    Ok(if outcome.failures.is_empty() { 0 } else { 1 })
}

fn cmd_synth(a: &SynthArgs) -> anyhow::Result<u8> {
    let mut cfg: SynthConfig = match &a.config {
        Some(p) => read_toml(p)?,
        None => SynthConfig::default(),
    };
    if let Some(v) = a.nodes {
        cfg.num_nodes = v;
    }
    if let Some(v) = a.classes {
        cfg.num_classes = v;
    }
    if let Some(v) = a.p0 {
        cfg.p0 = v;
    }
    if let Some(v) = a.p1 {
        cfg.p1 = v;
    }
    if let Some(v) = a.feature_dim {
        cfg.feature_dim = v;
    }
    if let Some(v) = a.noise {
        cfg.feature_noise = v;
    }
    cfg.validate().invalid()?;
    let ds = synth_sbm_generate(&cfg, &mut stream(a.seed, &[]))?;
    if a.out.exists() && fs::read_dir(&a.out)?.next().is_some() {
        bail!("output directory {} is not empty", a.out.display());
    }
    save_dataset(&ds, &a.out)?;
    println!(
        "wrote {} nodes, {} edges, {} classes to {}",
        ds.num_nodes(),
        ds.graph.num_edges(),
        ds.num_classes,
        a.out.display()
    );
    Ok(0)
}

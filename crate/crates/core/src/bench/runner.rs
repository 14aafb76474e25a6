use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{emit_report, run_trials, summarize, CellRecord, SummaryRow};
use crate::data::{Dataset, Setting};
use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::parallel::map_indexed;
use crate::rng::{derive_seed, tags};
use crate::train::{grid_search, write_log, GridSpec, TrainConfig};

pub const PROTOCOL: &str = "Protocol: hyperparameters are grid-searched once per (dataset, setting, model) \
on mean validation accuracy; the selected cell is then refit for the listed number of independent trials \
and test accuracy is reported as mean ± sample std. Trial t applies the setting with the same seed for every model. \
Bold: best in column. Underlined: generative model above its discriminative counterpart. \
*: Welch t-test p < 0.05 against that counterpart.";

#[derive(Clone, Debug)]
pub struct BenchPlan {
    pub settings: Vec<Setting>,
    pub models: Vec<ModelKind>,
    pub trials: usize,
    pub seed: u64,
    /// Cells evaluated concurrently.
    pub jobs: usize,
    /// Defaults for every fit; `model` is overwritten per cell.
    pub base: TrainConfig,
    /// `None` fits `base` directly without searching.
    pub grid: Option<GridSpec>,
    pub grid_trials: usize,
    /// Reuse cell results already present in the output directory.
    pub resume: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub dataset: String,
    pub setting: Setting,
    pub model: ModelKind,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct BenchOutcome {
    pub cells: Vec<CellRecord>,
    pub rows: Vec<SummaryRow>,
    pub failures: Vec<CellFailure>,
    pub resumed: usize,
}

fn cell_id(dataset: &str, setting: Setting, model: ModelKind) -> String {
    format!("{dataset}__{setting}__{model}")
}

pub fn cell_path(out: &Path, dataset: &str, setting: Setting, model: ModelKind) -> PathBuf {
    out.join("cells").join(format!("{}.json", cell_id(dataset, setting, model)))
}

fn mkdir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn run_cell(plan: &BenchPlan, name: &str, ds: &Dataset, setting: Setting, model: ModelKind, out: &Path) -> Result<CellRecord> {
    let id = cell_id(name, setting, model);
    let base = TrainConfig {
        model,
        ..plan.base.clone()
    };
    let config = match &plan.grid {
        Some(spec) => {
            let seed = derive_seed(plan.seed, &[tags::GRID]);
            let grid = grid_search(spec, &base, ds, setting, plan.grid_trials, seed, 1)?;
            let dir = out.join("grids");
            mkdir(&dir)?;
            grid.write_csv(dir.join(format!("{id}.csv")))?;
            grid.best_config().clone()
        }
        None => base,
    };
    let logs = out.join("logs").join(&id);
    mkdir(&logs)?;
    let trials = run_trials(ds, setting, &config, plan.trials, plan.seed, 1, |report, fit| {
        write_log(&fit.log, logs.join(format!("trial{}.jsonl", report.trial)))
    })?;
    let record = CellRecord {
        dataset: name.into(),
        setting,
        model,
        trials,
    };
    let path = cell_path(out, name, setting, model);
    mkdir(path.parent().expect("cell path has a parent"))?;
    std::fs::write(&path, serde_json::to_string_pretty(&record)?).map_err(|e| Error::io(&path, e))?;
    Ok(record)
}

/// Runs every (dataset, setting, model) cell, writes per-cell results and
/// logs under `out`, then `summary.csv` / `summary.md`. A failing cell is
/// recorded and the run continues.
pub fn run_bench(plan: &BenchPlan, datasets: &[(String, Dataset)], out: &Path) -> Result<BenchOutcome> {
    if plan.trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    plan.base.validate()?;
    mkdir(out)?;
    let mut todo = Vec::new();
    for (d, _) in datasets.iter().enumerate() {
        for &setting in &plan.settings {
            for &model in &plan.models {
                todo.push((d, setting, model));
            }
        }
    }
    let results = map_indexed(plan.jobs, todo.len(), |i| {
        let (d, setting, model) = todo[i];
        let (name, ds) = &datasets[d];
        let path = cell_path(out, name, setting, model);
        if plan.resume && path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            match serde_json::from_str::<CellRecord>(&text) {
                Ok(r) if r.trials.len() == plan.trials => return Ok((r, true)),
                _ => log::warn!("{}: incomplete, rerunning", path.display()),
            }
        }
        log::info!("running {name} / {setting} / {model}");
        run_cell(plan, name, ds, setting, model, out).map(|r| (r, false))
    })?;

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    let mut resumed = 0;
    for ((d, setting, model), r) in todo.into_iter().zip(results) {
        match r {
            Ok((record, was_resumed)) => {
                resumed += usize::from(was_resumed);
                cells.push(record);
            }
            Err(e) => {
                log::error!("{} / {setting} / {model} failed: {e}", datasets[d].0);
                failures.push(CellFailure {
                    dataset: datasets[d].0.clone(),
                    setting,
                    model,
                    error: e.to_string(),
                });
            }
        }
    }
    let rows = summarize(&cells)?;
    emit_report(&rows, out, PROTOCOL)?;
    if !failures.is_empty() {
        let path = out.join("failures.json");
        std::fs::write(&path, serde_json::to_string_pretty(&failures)?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(BenchOutcome {
        cells,
        rows,
        failures,
        resumed,
    })
}

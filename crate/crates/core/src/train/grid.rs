use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{fit, TrainConfig};
use crate::data::{apply_setting, Dataset, Setting};
use crate::error::{Error, Result};
use crate::model::{HeadKind, PosteriorKind};
use crate::nets::HiddenMode;
use crate::parallel::map_indexed;
use crate::rng::{derive_seed, stream, tags};

/// Candidate values per hyperparameter. `eta` applies to generative models,
/// `sbm` to SBM heads, `gat_hidden_modes` to GAT posteriors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub hidden: Vec<usize>,
    pub lr: Vec<f64>,
    pub eta: Vec<f64>,
    pub sbm: Vec<(f64, f64)>,
    pub gat_hidden_modes: Vec<HiddenMode>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            hidden: vec![16, 32, 64],
            lr: vec![0.001, 0.005, 0.01],
            eta: vec![0.5, 1.0, 10.0],
            sbm: vec![(0.9, 0.1), (0.5, 0.6)],
            gat_hidden_modes: vec![HiddenMode::PerHead],
        }
    }
}

fn sorted<T: Clone + PartialOrd>(v: &[T]) -> Vec<T> {
    let mut v = v.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("grid values are comparable"));
    v.dedup();
    v
}

impl GridSpec {
    /// The grid containing only `config`'s own values.
    pub fn singleton(config: &TrainConfig) -> Self {
        Self {
            hidden: vec![config.hidden],
            lr: vec![config.lr],
            eta: vec![config.eta],
            sbm: vec![(config.p0, config.p1)],
            gat_hidden_modes: vec![config.gat_hidden_mode],
        }
    }

    /// Every cell for `base.model`, in lexicographic order of
    /// (hidden, lr, eta, (p0, p1), gat hidden mode). Dimensions the model does
    /// not use keep `base`'s value.
    pub fn cells(&self, base: &TrainConfig) -> Result<Vec<TrainConfig>> {
        let spec = base.model.spec();
        let etas = if spec.head.is_some() { sorted(&self.eta) } else { vec![base.eta] };
        let sbms = if spec.head == Some(HeadKind::Sbm) {
            sorted(&self.sbm)
        } else {
            vec![(base.p0, base.p1)]
        };
        let modes = if spec.posterior == PosteriorKind::Gat {
            sorted(&self.gat_hidden_modes)
        } else {
            vec![base.gat_hidden_mode]
        };
        let (hidden, lr) = (sorted(&self.hidden), sorted(&self.lr));
        if [hidden.len(), lr.len(), etas.len(), sbms.len(), modes.len()].contains(&0) {
            return Err(Error::Config("grid has an empty dimension".into()));
        }
        let mut out = Vec::new();
        for &h in &hidden {
            for &lr in &lr {
                for &eta in &etas {
                    for &(p0, p1) in &sbms {
                        for &mode in &modes {
                            let cell = TrainConfig {
                                hidden: h,
                                lr,
                                eta,
                                p0,
                                p1,
                                gat_hidden_mode: mode,
                                ..base.clone()
                            };
                            cell.validate()?;
                            out.push(cell);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Index of the cell with the highest mean score over `trials` evaluations
/// (first on ties), plus every score by cell then trial.
pub fn select_best<F>(num_cells: usize, trials: usize, jobs: usize, score: F) -> Result<(usize, Vec<Vec<f64>>)>
where
    F: Fn(usize, usize) -> Result<f64> + Sync + Send,
{
    if num_cells == 0 || trials == 0 {
        return Err(Error::Config("grid search needs at least one cell and one trial".into()));
    }
    let flat = map_indexed(jobs, num_cells * trials, |i| score(i / trials, i % trials))?;
    let mut scores = vec![Vec::with_capacity(trials); num_cells];
    for (i, s) in flat.into_iter().enumerate() {
        scores[i / trials].push(s.map_err(|e| Error::Trial {
            trial: i % trials,
            source: Box::new(e),
        })?);
    }
    let mut best = 0;
    let mut best_mean = f64::NEG_INFINITY;
    for (c, s) in scores.iter().enumerate() {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        if m > best_mean {
            best = c;
            best_mean = m;
        }
    }
    Ok((best, scores))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridTrial {
    pub trial: usize,
    pub seed: u64,
    pub val_acc: f64,
    pub test_acc: Option<f64>,
    pub best_epoch: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub config: TrainConfig,
    pub trials: Vec<GridTrial>,
    pub mean_val_acc: f64,
    pub std_val_acc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub best: usize,
    pub cells: Vec<CellResult>,
}

impl GridOutcome {
    pub fn best_config(&self) -> &TrainConfig {
        &self.cells[self.best].config
    }

    /// One row per (cell, trial).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut s = String::from(
            "cell,trial,seed,model,hidden,lr,eta,p0,p1,gat_hidden_mode,val_acc,test_acc,best_epoch,cell_mean_val_acc,cell_std_val_acc,selected\n",
        );
        for (c, cell) in self.cells.iter().enumerate() {
            let k = &cell.config;
            for t in &cell.trials {
                s += &format!(
                    "{c},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    t.trial,
                    t.seed,
                    k.model,
                    k.hidden,
                    k.lr,
                    k.eta,
                    k.p0,
                    k.p1,
                    serde_json::to_value(k.gat_hidden_mode)?.as_str().unwrap_or_default(),
                    t.val_acc,
                    t.test_acc.map(|a| a.to_string()).unwrap_or_default(),
                    t.best_epoch,
                    cell.mean_val_acc,
                    cell.std_val_acc,
                    c == self.best
                );
            }
        }
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Fits every cell `trials` times on `setting` applied to `ds` and keeps the
/// cell with the best mean validation accuracy. Trial `t` sees the same
/// setting draw in every cell; fit seeds derive from (seed, cell, trial).
pub fn grid_search(
    spec: &GridSpec,
    base: &TrainConfig,
    ds: &Dataset,
    setting: Setting,
    trials: usize,
    seed: u64,
    jobs: usize,
) -> Result<GridOutcome> {
    let cells = spec.cells(base)?;
    let datasets: Vec<Dataset> = (0..trials)
        .map(|t| apply_setting(ds, setting, &mut stream(seed, &[tags::GRID, tags::SETTING, t as u64])))
        .collect();
    let flat = map_indexed(jobs, cells.len() * trials, |i| {
        let (c, t) = (i / trials, i % trials);
        let config = TrainConfig {
            seed: derive_seed(seed, &[tags::GRID, c as u64, t as u64]),
            ..cells[c].clone()
        };
        fit(&config, &datasets[t]).map(|r| GridTrial {
            trial: t,
            seed: config.seed,
            val_acc: r.metrics.val_acc,
            test_acc: r.metrics.test_acc,
            best_epoch: r.metrics.best_epoch,
        })
    })?;
    let mut flat = flat.into_iter();
    let mut results = Vec::with_capacity(cells.len());
    for config in cells {
        let trials: Vec<GridTrial> = flat.by_ref().take(trials).collect::<Result<_>>()?;
        let (mean, std) = mean_std(&trials.iter().map(|t| t.val_acc).collect::<Vec<_>>());
        results.push(CellResult {
            config,
            trials,
            mean_val_acc: mean,
            std_val_acc: std,
        });
    }
    let (best, _) = select_best(results.len(), 1, 1, |c, _| Ok(results[c].mean_val_acc))?;
    Ok(GridOutcome { best, cells: results })
}

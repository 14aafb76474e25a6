use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{apply_setting, Dataset, Setting};
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::rng::{derive_seed, stream, tags};
use crate::train::{fit, FitResult, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub config: TrainConfig,
    pub test_acc: f64,
    pub val_acc: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub wall_time_secs: f64,
}

/// Seed of trial `trial` under `base`; shared by every model so that all
/// models in a trial see the same setting draw.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    derive_seed(base, &[tags::TRIAL, trial as u64])
}

/// Applies `setting` to the pristine `ds` and fits once. Everything random
/// derives from `seed`, so rerunning with the logged seed reproduces the
/// result exactly.
pub fn run_single_trial(
    ds: &Dataset,
    setting: Setting,
    config: &TrainConfig,
    trial: usize,
    seed: u64,
) -> Result<(TrialReport, FitResult)> {
    let start = Instant::now();
    let data = apply_setting(ds, setting, &mut stream(seed, &[tags::SETTING]));
    let config = TrainConfig {
        seed,
        ..config.clone()
    };
    let result = fit(&config, &data)?;
    let test_acc = result
        .metrics
        .test_acc
        .ok_or_else(|| Error::Dataset("test split is empty".into()))?;
    let report = TrialReport {
        trial,
        seed,
        config,
        test_acc,
        val_acc: result.metrics.val_acc,
        best_epoch: result.metrics.best_epoch,
        epochs_run: result.metrics.epochs_run,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((report, result))
}

/// `n_trials` independent fits at `config`, trial `t` seeded by
/// [`trial_seed`]`(base_seed, t)`. `on_trial` sees each finished fit, e.g.
/// to write its training log.
pub fn run_trials<F>(
    ds: &Dataset,
    setting: Setting,
    config: &TrainConfig,
    n_trials: usize,
    base_seed: u64,
    jobs: usize,
    on_trial: F,
) -> Result<Vec<TrialReport>>
where
    F: Fn(&TrialReport, &FitResult) -> Result<()> + Sync + Send,
{
    let results = map_indexed(jobs, n_trials, |t| {
        let (report, fit) = run_single_trial(ds, setting, config, t, trial_seed(base_seed, t))?;
        on_trial(&report, &fit)?;
        Ok(report)
    })?;
    results
        .into_iter()
        .enumerate()
        .map(|(t, r)| {
            r.map_err(|e: Error| Error::Trial {
                trial: t,
                source: Box::new(e),
            })
        })
        .collect()
}

//! Optimisation, early stopping and hyperparameter search.

mod adam;
mod config;
mod fit;
mod grid;

pub use adam::Adam;
pub use config::TrainConfig;
pub use fit::{evaluate, fit, read_log, write_log, EpochRecord, FitMetrics, FitResult};
pub use grid::{grid_search, mean_std, select_best, CellResult, GridOutcome, GridSpec, GridTrial};

pub mod bench;
pub mod data;
mod error;
pub mod metrics;
pub mod model;
pub mod nets;
pub mod objective;
mod parallel;
pub mod params;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
pub use parallel::map_indexed;

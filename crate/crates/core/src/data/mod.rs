//! Graphs, datasets, experimental settings and edge sampling.

mod dataset;
mod graph;
mod io;
mod sampling;
mod setting;
mod synth;

pub use dataset::Dataset;
pub use graph::{gcn_normalize, EdgeCleanup, NormalizedAdjacency, SparseGraph};
pub use io::{load_dataset, save_dataset, LoadReport, Meta, Split};
pub use sampling::{negative_sample_edges, EdgeBatch};
pub use setting::{apply_setting, Setting};
pub use synth::{synth_sbm_generate, SynthConfig};

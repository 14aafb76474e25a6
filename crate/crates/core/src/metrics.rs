use gssl_autodiff::Tensor;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nets::BeliefMatrix;

/// Fraction of `nodes` whose most probable class (lowest index on ties)
/// equals the true label.
pub fn accuracy(beliefs: &BeliefMatrix, ds: &Dataset, nodes: &[usize]) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::Contract("accuracy over an empty node set".into()));
    }
    let hits = nodes.iter().filter(|&&i| beliefs.argmax(i) == ds.labels[i]).count();
    Ok(hits as f64 / nodes.len() as f64)
}

/// Mean of `-logq[i, y_i]` over `nodes`.
pub fn cross_entropy(logq: &Tensor, ds: &Dataset, nodes: &[usize]) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::Contract("cross-entropy over an empty node set".into()));
    }
    Ok(-nodes.iter().map(|&i| logq.get(i, ds.labels[i])).sum::<f64>() / nodes.len() as f64)
}

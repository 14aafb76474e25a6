use std::rc::Rc;

use gssl_autodiff::{Tape, Tensor, Var};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Row-stochastic `n x K` matrix of per-node class distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefMatrix(Tensor);

impl BeliefMatrix {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(probs: Tensor) -> Result<Self> {
        for i in 0..probs.rows() {
            let row = probs.row(i);
            let s: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (s - 1.0).abs() > Self::TOLERANCE {
                return Err(Error::Contract(format!("belief row {i} is not a distribution")));
            }
        }
        Ok(Self(probs))
    }

    pub fn from_log_probs(logp: &Tensor) -> Result<Self> {
        Self::new(logp.map(f64::exp))
    }

    /// Observed rows replaced by one-hot ground truth.
    pub fn with_observed(mut self, ds: &Dataset) -> Self {
        for i in 0..ds.num_nodes() {
            if ds.observed[i] {
                let row = self.0.row_mut(i);
                row.fill(0.0);
                row[ds.labels[i]] = 1.0;
            }
        }
        self
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn argmax(&self, i: usize) -> usize {
        self.0.argmax_row(i)
    }
}

/// One-hot matrix of the labels, zero rows for unobserved nodes.
pub fn observed_one_hot(ds: &Dataset) -> Tensor {
    let mut t = Tensor::zeros(ds.num_nodes(), ds.num_classes);
    for i in 0..ds.num_nodes() {
        if ds.observed[i] {
            t.set(i, ds.labels[i], 1.0);
        }
    }
    t
}

/// `exp(logq)` with observed rows pinned to their one-hot labels. Gradient
/// reaches `logq` only through unobserved rows.
pub fn beliefs_with_observed(
    tape: &mut Tape,
    logq: Var,
    observed: &Rc<Vec<bool>>,
    one_hot: &Tensor,
) -> Result<Var> {
    let q = tape.exp(logq);
    Ok(tape.replace_rows(q, observed.clone(), one_hot)?)
}

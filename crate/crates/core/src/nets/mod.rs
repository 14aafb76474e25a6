//! Prior and posterior networks. Each emits row-wise log-probabilities
//! over the `K` classes.

mod beliefs;
mod gat;
mod gcn;
mod init;
mod mlp;

use std::rc::Rc;

use gssl_autodiff::{SparseMatrix, Tape, Tensor, Var};

pub use beliefs::{beliefs_with_observed, observed_one_hot, BeliefMatrix};
pub use gat::{GatConfig, GatNet, HiddenMode};
pub use gcn::GcnNet;
pub use init::glorot_init;
pub use mlp::MlpNet;

use crate::data::{gcn_normalize, Dataset};
use crate::error::Result;
use crate::params::Bound;
use crate::rng::StreamRng;

/// Model-ready views of a dataset, built once per fit.
#[derive(Clone, Debug)]
pub struct GraphInputs {
    pub features: Rc<SparseMatrix>,
    pub adjacency: Rc<SparseMatrix>,
    pub arc_src: Rc<Vec<usize>>,
    pub arc_dst: Rc<Vec<usize>>,
}

impl GraphInputs {
    pub fn new(ds: &Dataset, normalize_features: bool) -> Self {
        let x = if normalize_features {
            l1_normalize_rows(&ds.features)
        } else {
            ds.features.clone()
        };
        let (src, dst) = ds.graph.attention_arcs();
        Self {
            features: Rc::new(SparseMatrix::from_dense(&x)),
            adjacency: Rc::new(gcn_normalize(&ds.graph).0),
            arc_src: Rc::new(src),
            arc_dst: Rc::new(dst),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }
}

/// Divides each row by its L1 norm; all-zero rows are left alone.
pub fn l1_normalize_rows(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for i in 0..out.rows() {
        let s: f64 = out.row(i).iter().map(|v| v.abs()).sum();
        if s > 0.0 {
            for v in out.row_mut(i) {
                *v /= s;
            }
        }
    }
    out
}

/// Training flag plus the dropout stream for one forward pass.
pub struct Pass<'a> {
    pub training: bool,
    pub rng: &'a mut StreamRng,
}

/// The approximate posterior `q(Y | X, G)`, or a plain classifier for baselines.
#[derive(Clone, Debug)]
pub enum PosteriorNet {
    Mlp(MlpNet),
    Gcn(GcnNet),
    Gat(GatNet),
}

impl PosteriorNet {
    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        inputs: &GraphInputs,
        pass: &mut Pass<'_>,
    ) -> Result<Var> {
        match self {
            PosteriorNet::Mlp(net) => net.forward(tape, bound, &inputs.features, pass),
            PosteriorNet::Gcn(net) => net.forward(tape, bound, inputs, pass),
            PosteriorNet::Gat(net) => net.forward(tape, bound, inputs, pass),
        }
    }
}

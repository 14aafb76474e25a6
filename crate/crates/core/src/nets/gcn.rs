use std::rc::Rc;

use gssl_autodiff::{sparse_dropout, Parameter, Tape, Var};
use rand::Rng;

use super::{glorot_init, GraphInputs, Pass};
use crate::error::Result;
use crate::params::{Bound, ParamId, ParamSet};

/// Two-layer GCN, `log_softmax(Â relu(Â X W1) W2)`, with dropout on the
/// input of each layer.
#[derive(Clone, Debug)]
pub struct GcnNet {
    pub w1: ParamId,
    pub w2: ParamId,
    pub dropout: f64,
}

impl GcnNet {
    /// Registers `{prefix}.w1` (decayed) and `{prefix}.w2`.
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        prefix: &str,
        (d, h, k): (usize, usize, usize),
        dropout: f64,
        rng: &mut R,
    ) -> Self {
        let w1 = params.add(Parameter::new(format!("{prefix}.w1"), glorot_init(d, h, rng)), true);
        let w2 = params.add(Parameter::new(format!("{prefix}.w2"), glorot_init(h, k, rng)), false);
        Self { w1, w2, dropout }
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        inputs: &GraphInputs,
        pass: &mut Pass<'_>,
    ) -> Result<Var> {
        let x = Rc::new(sparse_dropout(&inputs.features, self.dropout, pass.training, pass.rng)?);
        let xw = tape.sparse_matmul(x, bound.var(self.w1))?;
        let h = tape.sparse_matmul(inputs.adjacency.clone(), xw)?;
        let h = tape.relu(h);
        let h = tape.dropout(h, self.dropout, pass.training, pass.rng)?;
        let hw = tape.matmul(h, bound.var(self.w2))?;
        let o = tape.sparse_matmul(inputs.adjacency.clone(), hw)?;
        Ok(tape.log_softmax_rows(o)?)
    }
}

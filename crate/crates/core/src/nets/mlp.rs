use std::rc::Rc;

use gssl_autodiff::{sparse_dropout, Parameter, SparseMatrix, Tape, Tensor, Var};
use rand::Rng;

use super::{glorot_init, Pass};
use crate::error::Result;
use crate::params::{Bound, ParamId, ParamSet};

/// Two-layer perceptron, `log_softmax(relu(X W1 + b1) W2 + b2)`.
#[derive(Clone, Debug)]
pub struct MlpNet {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    pub dropout: f64,
}

impl MlpNet {
    /// Registers `{prefix}.w1`, `.b1`, `.w2`, `.b2`; only `w1` is decayed.
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        prefix: &str,
        (d, h, k): (usize, usize, usize),
        dropout: f64,
        rng: &mut R,
    ) -> Self {
        let w1 = params.add(Parameter::new(format!("{prefix}.w1"), glorot_init(d, h, rng)), true);
        let b1 = params.add(Parameter::new(format!("{prefix}.b1"), Tensor::zeros(1, h)), false);
        let w2 = params.add(Parameter::new(format!("{prefix}.w2"), glorot_init(h, k, rng)), false);
        let b2 = params.add(Parameter::new(format!("{prefix}.b2"), Tensor::zeros(1, k)), false);
        Self {
            w1,
            b1,
            w2,
            b2,
            dropout,
        }
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        x: &Rc<SparseMatrix>,
        pass: &mut Pass<'_>,
    ) -> Result<Var> {
        let x = Rc::new(sparse_dropout(x, self.dropout, pass.training, pass.rng)?);
        let h = tape.sparse_matmul(x, bound.var(self.w1))?;
        let h = tape.add_row(h, bound.var(self.b1))?;
        let h = tape.relu(h);
        let h = tape.dropout(h, self.dropout, pass.training, pass.rng)?;
        let o = tape.matmul(h, bound.var(self.w2))?;
        let o = tape.add_row(o, bound.var(self.b2))?;
        Ok(tape.log_softmax_rows(o)?)
    }
}

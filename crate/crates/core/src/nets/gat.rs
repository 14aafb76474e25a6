use std::rc::Rc;

use gssl_autodiff::{sparse_dropout, Activation, Parameter, Tape, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{glorot_init, GraphInputs, Pass};
use crate::error::Result;
use crate::params::{Bound, ParamId, ParamSet};

/// How a "hidden units" setting maps onto the attention heads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenMode {
    /// Each head gets `hidden` units.
    PerHead,
    /// The concatenation of all heads has `hidden` units.
    Total,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GatConfig {
    pub heads: usize,
    pub hidden_mode: HiddenMode,
    pub negative_slope: f64,
    /// Applied to layer inputs and to attention coefficients.
    pub dropout: f64,
}

impl Default for GatConfig {
    fn default() -> Self {
        Self {
            heads: 8,
            hidden_mode: HiddenMode::PerHead,
            negative_slope: 0.2,
            dropout: 0.6,
        }
    }
}

impl GatConfig {
    pub fn head_dim(&self, hidden: usize) -> usize {
        match self.hidden_mode {
            HiddenMode::PerHead => hidden,
            HiddenMode::Total => (hidden / self.heads).max(1),
        }
    }
}

#[derive(Clone, Debug)]
struct AttentionHead {
    w: ParamId,
    att_dst: ParamId,
    att_src: ParamId,
}

impl AttentionHead {
    fn new<R: Rng + ?Sized>(params: &mut ParamSet, prefix: &str, d: usize, f: usize, rng: &mut R) -> Self {
        let mut add = |name: &str, r, c| {
            params.add(Parameter::new(format!("{prefix}.{name}"), glorot_init(r, c, rng)), true)
        };
        Self {
            w: add("w", d, f),
            att_dst: add("att_dst", f, 1),
            att_src: add("att_src", f, 1),
        }
    }
}

/// Two-layer graph attention network: multi-head first layer with
/// concatenated heads and ELU, single-head output layer.
#[derive(Clone, Debug)]
pub struct GatNet {
    heads: Vec<AttentionHead>,
    out: AttentionHead,
    pub config: GatConfig,
}

impl GatNet {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        prefix: &str,
        (d, hidden, k): (usize, usize, usize),
        config: GatConfig,
        rng: &mut R,
    ) -> Self {
        let f = config.head_dim(hidden);
        let heads = (0..config.heads)
            .map(|l| AttentionHead::new(params, &format!("{prefix}.head{l}"), d, f, rng))
            .collect();
        let out = AttentionHead::new(params, &format!("{prefix}.out"), config.heads * f, k, rng);
        Self { heads, out, config }
    }

    /// Width of the concatenated first-layer output.
    pub fn hidden_width(&self, params: &ParamSet) -> usize {
        self.heads
            .iter()
            .map(|h| params.get(h.w).value.cols())
            .sum()
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        inputs: &GraphInputs,
        pass: &mut Pass<'_>,
    ) -> Result<Var> {
        Ok(self.forward_inspect(tape, bound, inputs, pass)?.0)
    }

    /// Also returns each first-layer head's attention coefficients (per arc,
    /// before attention dropout).
    pub fn forward_inspect(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        inputs: &GraphInputs,
        pass: &mut Pass<'_>,
    ) -> Result<(Var, Vec<Var>)> {
        let rate = self.config.dropout;
        let x = Rc::new(sparse_dropout(&inputs.features, rate, pass.training, pass.rng)?);
        let mut outs = Vec::with_capacity(self.heads.len());
        let mut alphas = Vec::with_capacity(self.heads.len());
        for head in &self.heads {
            let z = tape.sparse_matmul(x.clone(), bound.var(head.w))?;
            let (o, a) = self.attend(tape, bound, head, z, inputs, pass)?;
            outs.push(o);
            alphas.push(a);
        }
        let h = tape.concat_cols(&outs)?;
        let h = tape.activation(h, Activation::Elu)?;
        let h = tape.dropout(h, rate, pass.training, pass.rng)?;
        let z = tape.matmul(h, bound.var(self.out.w))?;
        let (o, _) = self.attend(tape, bound, &self.out, z, inputs, pass)?;
        Ok((tape.log_softmax_rows(o)?, alphas))
    }

    fn attend(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        head: &AttentionHead,
        z: Var,
        inputs: &GraphInputs,
        pass: &mut Pass<'_>,
    ) -> Result<(Var, Var)> {
        let n = tape.value(z).rows();
        let sd = tape.matmul(z, bound.var(head.att_dst))?;
        let ss = tape.matmul(z, bound.var(head.att_src))?;
        let ed = tape.gather_rows(sd, inputs.arc_dst.clone())?;
        let es = tape.gather_rows(ss, inputs.arc_src.clone())?;
        let e = tape.add(ed, es)?;
        let e = tape.activation(e, Activation::LeakyRelu(self.config.negative_slope))?;
        let alpha = tape.segment_softmax(e, inputs.arc_dst.clone(), n)?;
        let dropped = tape.dropout(alpha, self.config.dropout, pass.training, pass.rng)?;
        let out = tape.edge_aggregate(dropped, z, inputs.arc_src.clone(), inputs.arc_dst.clone())?;
        Ok((out, alpha))
    }
}

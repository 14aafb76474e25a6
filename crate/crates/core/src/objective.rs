//! Edge likelihoods and the variational training objective.
//!
//! The graph likelihood factorises over unordered node pairs. Its
//! expectation under the mean-field posterior is taken exactly: for a pair
//! `(i, j)` it is `Σ_a Σ_b r_i(a) r_j(b) log p(e_ij | a, b)`, where `r` are
//! the belief rows (one-hot for observed nodes). The total loss is
//!
//! ```text
//! recon + kl + prior + η · supervised
//!   recon      = -E_q log p(G | X, Y)
//!   kl         = Σ_{i missing} KL(q_i || p_i)
//!   prior      = -Σ_{i observed} log p(y_i | x_i)
//!   supervised = -Σ_{i observed} log q(y_i | X, G)
//! ```

use std::rc::Rc;

use gssl_autodiff::{Parameter, SparseMatrix, Tape, Tensor, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EdgeBatch};
use crate::error::{Error, Result};
use crate::nets::{glorot_init, observed_one_hot};
use crate::params::{Bound, ParamId, ParamSet};

/// Planted-partition edge model with fixed probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    /// Edge probability between nodes of the same class.
    pub p0: f64,
    /// Edge probability between nodes of different classes.
    pub p1: f64,
}

impl SbmParams {
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        for (name, p) in [("p0", p0), ("p1", p1)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Config(format!("{name} = {p} must lie strictly in (0, 1)")));
            }
        }
        Ok(Self { p0, p1 })
    }
}

pub fn sbm_edge_logprob(p: &SbmParams, same_class: bool, edge_present: bool) -> f64 {
    let prob = if same_class { p.p0 } else { p.p1 };
    if edge_present {
        prob.ln()
    } else {
        (1.0 - prob).ln()
    }
}

/// Latent-space edge model: `σ([U x_i, y_i, U x_j, y_j] · w + b)`.
///
/// `w` is one column laid out as `[feature_i (L), label_i (K), feature_j (L),
/// label_j (K)]` with `L` the latent width.
#[derive(Clone, Debug)]
pub struct LsmHead {
    pub u: ParamId,
    pub w: ParamId,
    pub bias: ParamId,
    pub latent: usize,
    pub num_classes: usize,
    /// Average the logits of both pair orientations instead of using `i < j`.
    pub symmetric: bool,
}

impl LsmHead {
    pub fn new<R: Rng + ?Sized>(
        params: &mut ParamSet,
        prefix: &str,
        (d, latent, k): (usize, usize, usize),
        symmetric: bool,
        rng: &mut R,
    ) -> Self {
        let u = params.add(Parameter::new(format!("{prefix}.u"), glorot_init(latent, d, rng)), false);
        let w = params.add(
            Parameter::new(format!("{prefix}.w"), glorot_init(2 * (latent + k), 1, rng)),
            false,
        );
        let bias = params.add(Parameter::new(format!("{prefix}.bias"), Tensor::scalar(0.0)), false);
        Self {
            u,
            w,
            bias,
            latent,
            num_classes: k,
            symmetric,
        }
    }

    fn width(&self) -> usize {
        2 * (self.latent + self.num_classes)
    }

    fn feature_block(&self, second: bool) -> usize {
        if second {
            self.latent + self.num_classes
        } else {
            0
        }
    }

    fn label_block(&self, second: bool) -> usize {
        self.feature_block(second) + self.latent
    }
}

/// `K x K` logit table for a pair, `(a, b)` entry for labels `a` of `i` and
/// `b` of `j`, computed as `c_ij + w_label_i[a] + w_label_j[b]`.
pub fn lsm_pairwise_logits(
    u: &Tensor,
    w: &Tensor,
    bias: f64,
    num_classes: usize,
    x_i: &[f64],
    x_j: &[f64],
) -> Tensor {
    let latent = u.rows();
    let k = num_classes;
    debug_assert_eq!(w.len(), 2 * (latent + k));
    let w = w.data();
    let project = |x: &[f64], off: usize| -> f64 {
        (0..latent)
            .map(|r| u.row(r).iter().zip(x).map(|(a, b)| a * b).sum::<f64>() * w[off + r])
            .sum()
    };
    let c = project(x_i, 0) + project(x_j, latent + k) + bias;
    Tensor::from_fn(k, k, |a, b| c + w[latent + a] + w[2 * latent + k + b])
}

/// The `p(G | X, Y)` factor.
#[derive(Clone, Debug)]
pub enum EdgeHead {
    Lsm(LsmHead),
    Sbm(SbmParams),
}

/// Label-dependent constants shared by every pass over one dataset.
#[derive(Clone, Debug)]
pub struct LabelContext {
    pub observed: Rc<Vec<bool>>,
    pub one_hot: Tensor,
    pub observed_picks: Rc<Vec<(usize, usize)>>,
    pub missing: Rc<Vec<usize>>,
}

impl LabelContext {
    pub fn new(ds: &Dataset) -> Self {
        let picks = ds.observed_nodes().into_iter().map(|i| (i, ds.labels[i])).collect();
        Self {
            observed: Rc::new(ds.observed.clone()),
            one_hot: observed_one_hot(ds),
            observed_picks: Rc::new(picks),
            missing: Rc::new(ds.missing_nodes()),
        }
    }

    pub fn num_observed(&self) -> usize {
        self.observed_picks.len()
    }

    pub fn num_missing(&self) -> usize {
        self.missing.len()
    }
}

fn split_pairs(pairs: &[(usize, usize)]) -> (Rc<Vec<usize>>, Rc<Vec<usize>>) {
    let (i, j): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
    (Rc::new(i), Rc::new(j))
}

/// `Σ_{(i,j) ∈ pairs} E_{r_i, r_j} log p(e_ij = present | y_i, y_j)`.
pub fn expected_pairs_loglik(
    tape: &mut Tape,
    head: &EdgeHead,
    bound: &Bound,
    features: &Rc<SparseMatrix>,
    pairs: &[(usize, usize)],
    beliefs: Var,
    present: bool,
) -> Result<Var> {
    let (is, js) = split_pairs(pairs);
    let ri = tape.gather_rows(beliefs, is.clone())?;
    let rj = tape.gather_rows(beliefs, js.clone())?;
    match head {
        EdgeHead::Sbm(p) => {
            let same = sbm_edge_logprob(p, true, present);
            let diff = sbm_edge_logprob(p, false, present);
            // Σ_ab r_i(a) r_j(b) log p = log p_diff + (log p_same - log p_diff) <r_i, r_j>
            let prod = tape.mul(ri, rj)?;
            let overlap = tape.sum(prod);
            let scaled = tape.scale(overlap, same - diff);
            Ok(tape.add_scalar(scaled, pairs.len() as f64 * diff))
        }
        EdgeHead::Lsm(h) => lsm_expected(tape, h, bound, features, (&is, &js), (ri, rj), present),
    }
}

fn lsm_expected(
    tape: &mut Tape,
    h: &LsmHead,
    bound: &Bound,
    features: &Rc<SparseMatrix>,
    (is, js): (&Rc<Vec<usize>>, &Rc<Vec<usize>>),
    (ri, rj): (Var, Var),
    present: bool,
) -> Result<Var> {
    let (l, k, width) = (h.latent, h.num_classes, h.width());
    let w = bound.var(h.w);

    let ut = tape.transpose(bound.var(h.u));
    let ux = tape.sparse_matmul(features.clone(), ut)?;
    let select = |tape: &mut Tape, off: usize| -> Result<Var> {
        let sel = tape.constant(Tensor::from_fn(l, width, |r, c| if c == off + r { 1.0 } else { 0.0 }));
        let block = tape.matmul(sel, w)?;
        Ok(tape.matmul(ux, block)?)
    };
    let mut fi = select(tape, h.feature_block(false))?;
    let mut fj = select(tape, h.feature_block(true))?;
    if h.symmetric {
        let s = tape.add(fi, fj)?;
        fi = tape.scale(s, 0.5);
        fj = fi;
    }
    let ci = tape.gather_rows(fi, is.clone())?;
    let cj = tape.gather_rows(fj, js.clone())?;
    let c = tape.add(ci, cj)?;
    let c = tape.add_row(c, bound.var(h.bias))?;

    // label contribution for every (a, b), as a K² x 1 column
    let (li, lj) = (h.label_block(false), h.label_block(true));
    let label_sel = Tensor::from_fn(k * k, width, |ab, col| {
        let (a, b) = (ab / k, ab % k);
        let hit = |off: usize, cls: usize| if col == off + cls { 1.0 } else { 0.0 };
        if h.symmetric {
            0.5 * (hit(li, a) + hit(lj, b) + hit(li, b) + hit(lj, a))
        } else {
            hit(li, a) + hit(lj, b)
        }
    });
    let label_sel = tape.constant(label_sel);
    let label = tape.matmul(label_sel, w)?;
    let label_row = tape.transpose(label);

    let ones = tape.constant(Tensor::full(1, k * k, 1.0));
    let table = tape.matmul(c, ones)?;
    let table = tape.add_row(table, label_row)?;
    let signed = if present { table } else { tape.neg(table) };
    let logp = tape.log_sigmoid(signed);

    let expand_a = tape.constant(Tensor::from_fn(k, k * k, |a, ab| if ab / k == a { 1.0 } else { 0.0 }));
    let expand_b = tape.constant(Tensor::from_fn(k, k * k, |b, ab| if ab % k == b { 1.0 } else { 0.0 }));
    let wa = tape.matmul(ri, expand_a)?;
    let wb = tape.matmul(rj, expand_b)?;
    let weight = tape.mul(wa, wb)?;
    let weighted = tape.mul(weight, logp)?;
    Ok(tape.sum(weighted))
}

/// Expected log-likelihood of a single pair.
pub fn expected_edge_loglik(
    tape: &mut Tape,
    head: &EdgeHead,
    bound: &Bound,
    features: &Rc<SparseMatrix>,
    pair: (usize, usize),
    beliefs: Var,
    present: bool,
) -> Result<Var> {
    expected_pairs_loglik(tape, head, bound, features, &[pair], beliefs, present)
}

/// Positives counted as present, negatives as absent; no reweighting.
pub fn graph_loglik_term(
    tape: &mut Tape,
    head: &EdgeHead,
    bound: &Bound,
    features: &Rc<SparseMatrix>,
    batch: &EdgeBatch,
    beliefs: Var,
) -> Result<Var> {
    let pos = expected_pairs_loglik(tape, head, bound, features, &batch.positives, beliefs, true)?;
    let neg = expected_pairs_loglik(tape, head, bound, features, &batch.negatives, beliefs, false)?;
    Ok(tape.add(pos, neg)?)
}

/// `Σ_{i missing} Σ_k q_ik (log q_ik - log p_ik)`.
pub fn kl_term(tape: &mut Tape, logq: Var, logp: Var, missing: &Rc<Vec<usize>>) -> Result<Var> {
    let lq = tape.gather_rows(logq, missing.clone())?;
    let lp = tape.gather_rows(logp, missing.clone())?;
    let q = tape.exp(lq);
    let diff = tape.sub(lq, lp)?;
    let terms = tape.mul(q, diff)?;
    Ok(tape.sum(terms))
}

/// `-Σ_{i observed} logp[i, y_i]`.
pub fn observed_prior_term(tape: &mut Tape, logp: Var, picks: &Rc<Vec<(usize, usize)>>) -> Result<Var> {
    let v = tape.pick_elements(logp, picks.clone())?;
    let s = tape.sum(v);
    Ok(tape.neg(s))
}

/// `-Σ_{i observed} logq[i, y_i]`.
pub fn supervised_term(tape: &mut Tape, logq: Var, picks: &Rc<Vec<(usize, usize)>>) -> Result<Var> {
    observed_prior_term(tape, logq, picks)
}

/// How each loss component is aggregated over its terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Plain sums: the exact negative ELBO.
    Sum,
    /// Each component divided by its number of terms (pairs, missing
    /// nodes, observed nodes).
    #[default]
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub recon: f64,
    pub kl: f64,
    pub prior: f64,
    pub supervised: f64,
    pub eta: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn negative_elbo(&self) -> f64 {
        self.recon + self.kl + self.prior
    }
}

/// Tape handles of a [`LossBreakdown`].
#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub recon: Var,
    pub kl: Var,
    pub prior: Var,
    pub supervised: Var,
    pub total: Var,
}

impl LossVars {
    pub fn read(&self, tape: &Tape, eta: f64) -> LossBreakdown {
        LossBreakdown {
            recon: tape.value(self.recon).item(),
            kl: tape.value(self.kl).item(),
            prior: tape.value(self.prior).item(),
            supervised: tape.value(self.supervised).item(),
            eta,
            total: tape.value(self.total).item(),
        }
    }
}

/// Everything [`total_loss`] reads besides the tape.
pub struct ObjectiveInputs<'a> {
    pub head: &'a EdgeHead,
    pub bound: &'a Bound,
    pub features: &'a Rc<SparseMatrix>,
    pub labels: &'a LabelContext,
    pub batch: &'a EdgeBatch,
    pub eta: f64,
    pub reduction: Reduction,
}

fn reduce(tape: &mut Tape, v: Var, count: usize, reduction: Reduction) -> Var {
    match reduction {
        Reduction::Sum => v,
        Reduction::Mean => tape.scale(v, 1.0 / count.max(1) as f64),
    }
}

/// `recon + kl + prior + η · supervised` for posterior `logq` and prior `logp`.
pub fn total_loss(
    tape: &mut Tape,
    logq: Var,
    logp: Var,
    io: &ObjectiveInputs<'_>,
) -> Result<(LossVars, LossBreakdown)> {
    if !(io.eta >= 0.0 && io.eta.is_finite()) {
        return Err(Error::Config(format!("eta must be finite and non-negative, got {}", io.eta)));
    }
    let labels = io.labels;
    let beliefs = crate::nets::beliefs_with_observed(tape, logq, &labels.observed, &labels.one_hot)?;
    let ll = graph_loglik_term(tape, io.head, io.bound, io.features, io.batch, beliefs)?;
    let recon = tape.neg(ll);
    let recon = reduce(tape, recon, io.batch.len(), io.reduction);
    let kl = kl_term(tape, logq, logp, &labels.missing)?;
    let kl = reduce(tape, kl, labels.num_missing(), io.reduction);
    let prior = observed_prior_term(tape, logp, &labels.observed_picks)?;
    let prior = reduce(tape, prior, labels.num_observed(), io.reduction);
    let sup = supervised_term(tape, logq, &labels.observed_picks)?;
    let sup = reduce(tape, sup, labels.num_observed(), io.reduction);

    let elbo = tape.add(recon, kl)?;
    let elbo = tape.add(elbo, prior)?;
    let weighted = tape.scale(sup, io.eta);
    let total = tape.add(elbo, weighted)?;
    let vars = LossVars {
        recon,
        kl,
        prior,
        supervised: sup,
        total,
    };
    let breakdown = vars.read(tape, io.eta);
    check_finite(&breakdown)?;
    Ok((vars, breakdown))
}

/// Supervised cross-entropy alone, for the discriminative baselines.
pub fn supervised_loss(
    tape: &mut Tape,
    logq: Var,
    labels: &LabelContext,
    reduction: Reduction,
) -> Result<(LossVars, LossBreakdown)> {
    let sup = supervised_term(tape, logq, &labels.observed_picks)?;
    let sup = reduce(tape, sup, labels.num_observed(), reduction);
    let zero = tape.constant(Tensor::scalar(0.0));
    let vars = LossVars {
        recon: zero,
        kl: zero,
        prior: zero,
        supervised: sup,
        total: sup,
    };
    let breakdown = vars.read(tape, 1.0);
    check_finite(&breakdown)?;
    Ok((vars, breakdown))
}

fn check_finite(b: &LossBreakdown) -> Result<()> {
    if [b.recon, b.kl, b.prior, b.supervised, b.total].iter().all(|v| v.is_finite()) {
        return Ok(());
    }
    Err(Error::Numeric {
        what: "loss".into(),
        detail: format!(
            "recon={} kl={} prior={} supervised={} total={}",
            b.recon, b.kl, b.prior, b.supervised, b.total
        ),
    })
}

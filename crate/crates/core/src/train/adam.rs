use gssl_autodiff::{Gradients, Tensor};

use crate::error::{Error, Result};
use crate::params::{Bound, ParamSet};

/// Bias-corrected Adam with L2 decay folded into the gradient.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl Adam {
    pub fn new(params: &ParamSet, lr: f64, weight_decay: f64) -> Self {
        let zeros = || params.iter().map(|p| Tensor::zeros(p.value.rows(), p.value.cols())).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Gradients of every parameter, in [`ParamSet`] order.
    pub fn collect<'g>(bound: &Bound, grads: &'g Gradients) -> Vec<Option<&'g Tensor>> {
        bound.vars().iter().map(|&v| grads.get(v)).collect()
    }

    /// One update. A missing gradient counts as zero; frozen parameters are
    /// skipped. Nothing is modified if any gradient is non-finite.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Option<&Tensor>]) -> Result<()> {
        assert_eq!(grads.len(), params.len(), "one gradient slot per parameter");
        for (p, g) in params.iter().zip(grads) {
            if let Some(g) = g {
                if !g.is_finite() {
                    return Err(Error::Numeric {
                        what: format!("gradient of {}", p.name),
                        detail: format!("{} of {} entries non-finite", g.data().iter().filter(|v| !v.is_finite()).count(), g.len()),
                    });
                }
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (idx, g) in grads.iter().enumerate() {
            let id = crate::params::ParamId(idx);
            let decay = if params.decays(id) { self.weight_decay } else { 0.0 };
            let p = params.get_mut(id);
            if !p.trainable || (g.is_none() && decay == 0.0) {
                continue;
            }
            let (m, v) = (&mut self.m[idx], &mut self.v[idx]);
            let theta = p.value.data_mut();
            for j in 0..theta.len() {
                let gj = g.map_or(0.0, |g| g.data()[j]) + decay * theta[j];
                let mj = &mut m.data_mut()[j];
                *mj = self.beta1 * *mj + (1.0 - self.beta1) * gj;
                let vj = &mut v.data_mut()[j];
                *vj = self.beta2 * *vj + (1.0 - self.beta2) * gj * gj;
                let mhat = m.data()[j] / c1;
                let vhat = v.data()[j] / c2;
                theta[j] -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

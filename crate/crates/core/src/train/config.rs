use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Architecture, ModelKind, PosteriorKind};
use crate::nets::{GatConfig, HiddenMode};
use crate::objective::{Reduction, SbmParams};

/// Everything one fit needs. Unset fields take the defaults below; `dropout`
/// defaults per posterior (0.6 for GAT, 0.5 otherwise).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub hidden: usize,
    pub lr: f64,
    pub eta: f64,
    pub p0: f64,
    pub p1: f64,
    pub lsm_latent: usize,
    pub lsm_symmetric: bool,
    pub dropout: Option<f64>,
    pub prior_dropout: f64,
    pub gat_heads: usize,
    pub gat_hidden_mode: HiddenMode,
    pub gat_negative_slope: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub normalize_features: bool,
    pub reduction: Reduction,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Gcn,
            hidden: 16,
            lr: 0.01,
            eta: 1.0,
            p0: 0.9,
            p1: 0.1,
            lsm_latent: 8,
            lsm_symmetric: false,
            dropout: None,
            prior_dropout: 0.5,
            gat_heads: 8,
            gat_hidden_mode: HiddenMode::PerHead,
            gat_negative_slope: 0.2,
            weight_decay: 5e-4,
            max_epochs: 1000,
            patience: 100,
            seed: 0,
            normalize_features: true,
            reduction: Reduction::Mean,
        }
    }
}

impl TrainConfig {
    pub fn for_model(model: ModelKind) -> Self {
        Self {
            model,
            ..Self::default()
        }
    }

    pub fn effective_dropout(&self) -> f64 {
        self.dropout.unwrap_or(match self.model.spec().posterior {
            PosteriorKind::Gat => 0.6,
            _ => 0.5,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.hidden == 0 {
            return bad("hidden must be positive".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be non-negative, got {}", self.eta));
        }
        for (name, r) in [("dropout", self.effective_dropout()), ("prior_dropout", self.prior_dropout)] {
            if !(0.0..1.0).contains(&r) {
                return bad(format!("{name} must lie in [0, 1), got {r}"));
            }
        }
        if !(self.weight_decay >= 0.0) {
            return bad(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if self.max_epochs == 0 || self.gat_heads == 0 || self.lsm_latent == 0 {
            return bad("max_epochs, gat_heads and lsm_latent must be positive".into());
        }
        SbmParams::new(self.p0, self.p1)?;
        Ok(())
    }

    pub fn architecture(&self) -> Architecture {
        let dropout = self.effective_dropout();
        Architecture {
            hidden: self.hidden,
            dropout,
            gat: GatConfig {
                heads: self.gat_heads,
                hidden_mode: self.gat_hidden_mode,
                negative_slope: self.gat_negative_slope,
                dropout,
            },
            prior_dropout: self.prior_dropout,
            lsm_latent: self.lsm_latent,
            lsm_symmetric: self.lsm_symmetric,
            sbm: SbmParams {
                p0: self.p0,
                p1: self.p1,
            },
        }
    }
}

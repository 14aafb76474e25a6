//! The seven model variants and their parameter bundles.

use std::fmt;
use std::str::FromStr;

use gssl_autodiff::{Tape, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nets::{GatConfig, GatNet, GcnNet, GraphInputs, MlpNet, Pass, PosteriorNet};
use crate::objective::{EdgeHead, LsmHead, SbmParams};
use crate::params::{Bound, ParamSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mlp,
    Gcn,
    Gat,
    LsmGcn,
    LsmGat,
    SbmGcn,
    SbmGat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosteriorKind {
    Mlp,
    Gcn,
    Gat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Lsm,
    Sbm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Mlp,
        ModelKind::Gcn,
        ModelKind::Gat,
        ModelKind::LsmGcn,
        ModelKind::LsmGat,
        ModelKind::SbmGcn,
        ModelKind::SbmGat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Gcn => "gcn",
            ModelKind::Gat => "gat",
            ModelKind::LsmGcn => "lsm_gcn",
            ModelKind::LsmGat => "lsm_gat",
            ModelKind::SbmGcn => "sbm_gcn",
            ModelKind::SbmGat => "sbm_gat",
        }
    }

    pub fn spec(self) -> ModelSpec {
        let (posterior, head) = match self {
            ModelKind::Mlp => (PosteriorKind::Mlp, None),
            ModelKind::Gcn => (PosteriorKind::Gcn, None),
            ModelKind::Gat => (PosteriorKind::Gat, None),
            ModelKind::LsmGcn => (PosteriorKind::Gcn, Some(HeadKind::Lsm)),
            ModelKind::LsmGat => (PosteriorKind::Gat, Some(HeadKind::Lsm)),
            ModelKind::SbmGcn => (PosteriorKind::Gcn, Some(HeadKind::Sbm)),
            ModelKind::SbmGat => (PosteriorKind::Gat, Some(HeadKind::Sbm)),
        };
        ModelSpec { posterior, head }
    }

    pub fn is_generative(self) -> bool {
        self.spec().head.is_some()
    }

    /// The discriminative model sharing this variant's posterior network.
    pub fn counterpart(self) -> Option<ModelKind> {
        match self {
            ModelKind::LsmGcn | ModelKind::SbmGcn => Some(ModelKind::Gcn),
            ModelKind::LsmGat | ModelKind::SbmGat => Some(ModelKind::Gat),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown model {s:?}")))
    }
}

/// Posterior network plus optional edge head. Any combination is buildable,
/// including an MLP posterior under a generative head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub posterior: PosteriorKind,
    pub head: Option<HeadKind>,
}

/// Architecture hyperparameters needed to allocate a bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub hidden: usize,
    /// Dropout of the MLP/GCN posterior; GAT uses `gat.dropout`.
    pub dropout: f64,
    pub gat: GatConfig,
    /// Dropout of the prior MLP.
    pub prior_dropout: f64,
    pub lsm_latent: usize,
    pub lsm_symmetric: bool,
    pub sbm: SbmParams,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            hidden: 16,
            dropout: 0.5,
            gat: GatConfig::default(),
            prior_dropout: 0.5,
            lsm_latent: 8,
            lsm_symmetric: false,
            sbm: SbmParams { p0: 0.9, p1: 0.1 },
        }
    }
}

/// Prior `p(Y | X)` and edge head `p(G | X, Y)` of a generative model.
#[derive(Clone, Debug)]
pub struct Generative {
    pub prior: MlpNet,
    pub head: EdgeHead,
}

/// All parameters of one model plus the networks that read them.
#[derive(Clone, Debug)]
pub struct ModelBundle {
    pub spec: ModelSpec,
    pub params: ParamSet,
    pub posterior: PosteriorNet,
    pub generative: Option<Generative>,
}

/// Log-probabilities from one forward pass.
#[derive(Clone, Copy, Debug)]
pub struct Outputs {
    pub logq: Var,
    pub logp: Option<Var>,
}

impl ModelBundle {
    /// Parameters are named `posterior.*`, `prior.*` and `lsm.*`.
    pub fn new<R: Rng + ?Sized>(
        spec: ModelSpec,
        arch: &Architecture,
        (d, k): (usize, usize),
        rng: &mut R,
    ) -> Result<Self> {
        if arch.hidden == 0 || d == 0 || k < 2 {
            return Err(Error::Config(format!(
                "need hidden > 0, features > 0 and at least 2 classes (got {}, {d}, {k})",
                arch.hidden
            )));
        }
        let mut params = ParamSet::new();
        let dims = (d, arch.hidden, k);
        let posterior = match spec.posterior {
            PosteriorKind::Mlp => PosteriorNet::Mlp(MlpNet::new(&mut params, "posterior", dims, arch.dropout, rng)),
            PosteriorKind::Gcn => PosteriorNet::Gcn(GcnNet::new(&mut params, "posterior", dims, arch.dropout, rng)),
            PosteriorKind::Gat => PosteriorNet::Gat(GatNet::new(&mut params, "posterior", dims, arch.gat, rng)),
        };
        let generative = match spec.head {
            None => None,
            Some(kind) => {
                let width = match &posterior {
                    PosteriorNet::Gat(net) => net.hidden_width(&params),
                    _ => arch.hidden,
                };
                let prior = MlpNet::new(&mut params, "prior", (d, width, k), arch.prior_dropout, rng);
                let head = match kind {
                    HeadKind::Sbm => EdgeHead::Sbm(SbmParams::new(arch.sbm.p0, arch.sbm.p1)?),
                    HeadKind::Lsm => EdgeHead::Lsm(LsmHead::new(
                        &mut params,
                        "lsm",
                        (d, arch.lsm_latent, k),
                        arch.lsm_symmetric,
                        rng,
                    )),
                };
                Some(Generative { prior, head })
            }
        };
        Ok(Self {
            spec,
            params,
            posterior,
            generative,
        })
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        inputs: &GraphInputs,
        pass: &mut Pass<'_>,
    ) -> Result<Outputs> {
        let logq = self.posterior.forward(tape, bound, inputs, pass)?;
        let logp = match &self.generative {
            Some(g) => Some(g.prior.forward(tape, bound, &inputs.features, pass)?),
            None => None,
        };
        Ok(Outputs { logq, logp })
    }
}

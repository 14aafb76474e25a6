//! Named parameter storage and JSON checkpoints.
//!
//! Checkpoint layout:
//!
//! ```json
//! {
//!   "format": "gssl-checkpoint",
//!   "version": 1,
//!   "model": "sbm_gcn",
//!   "params": [
//!     {"name": "posterior.w1", "rows": 1433, "cols": 16, "values": [...]}
//!   ]
//! }
//! ```
//!
//! `values` is row-major; entries appear in parameter creation order.

use std::fs;
use std::path::Path;

use gssl_autodiff::{Parameter, Tape, Tensor, Var};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

/// Parameters in creation order, each flagged for L2 weight decay or not.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    params: Vec<Parameter>,
    decay: Vec<bool>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, p: Parameter, decay: bool) -> ParamId {
        assert!(
            self.params.iter().all(|q| q.name != p.name),
            "duplicate parameter name {}",
            p.name
        );
        self.params.push(p);
        self.decay.push(decay);
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn decays(&self, id: ParamId) -> bool {
        self.decay[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Places every parameter on `tape`; the result is indexed by [`ParamId`].
    pub fn bind(&self, tape: &mut Tape) -> Bound {
        Bound(self.params.iter().map(|p| tape.param(p)).collect())
    }

    pub fn snapshot(&self) -> Vec<Tensor> {
        self.params.iter().map(|p| p.value.clone()).collect()
    }

    pub fn restore(&mut self, values: &[Tensor]) {
        assert_eq!(values.len(), self.params.len());
        for (p, v) in self.params.iter_mut().zip(values) {
            p.value = v.clone();
        }
    }

    pub fn to_checkpoint(&self, model: &str) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: 1,
            model: model.into(),
            params: self
                .params
                .iter()
                .map(|p| CheckpointEntry {
                    name: p.name.clone(),
                    rows: p.value.rows(),
                    cols: p.value.cols(),
                    values: p.value.data().to_vec(),
                })
                .collect(),
        }
    }

    /// Overwrites values from a checkpoint whose names and shapes match exactly.
    pub fn load_checkpoint(&mut self, ck: &Checkpoint) -> Result<()> {
        if ck.params.len() != self.params.len() {
            return Err(Error::Config(format!(
                "checkpoint has {} parameters, model has {}",
                ck.params.len(),
                self.params.len()
            )));
        }
        for (p, e) in self.params.iter_mut().zip(&ck.params) {
            if p.name != e.name || p.value.shape() != (e.rows, e.cols) {
                return Err(Error::Config(format!(
                    "checkpoint entry {} {:?} does not match parameter {} {:?}",
                    e.name,
                    (e.rows, e.cols),
                    p.name,
                    p.value.shape()
                )));
            }
            p.value = Tensor::from_vec(e.rows, e.cols, e.values.clone())?;
        }
        Ok(())
    }
}

/// Tape handles for a [`ParamSet`].
#[derive(Clone, Debug)]
pub struct Bound(Vec<Var>);

impl Bound {
    pub fn var(&self, id: ParamId) -> Var {
        self.0[id.0]
    }

    pub fn vars(&self) -> &[Var] {
        &self.0
    }
}

pub const CHECKPOINT_FORMAT: &str = "gssl-checkpoint";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: String,
    pub params: Vec<CheckpointEntry>,
}

impl Checkpoint {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint =
            serde_json::from_str(&text).map_err(|e| Error::load(path, e.line(), e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::load(path, 1, format!("unknown format {:?}", ck.format)));
        }
        Ok(ck)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_round_trip() {
        let mut ps = ParamSet::new();
        ps.add(Parameter::new("a", Tensor::from_rows(&[[1.0, 2.5]])), true);
        ps.add(Parameter::new("b", Tensor::scalar(-0.125)), false);
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("ck.json");
        ps.to_checkpoint("mlp").save(&path).unwrap();

        let mut other = ps.clone();
        for p in other.iter_mut() {
            p.value = p.value.map(|_| 0.0);
        }
        other.load_checkpoint(&Checkpoint::load(&path).unwrap()).unwrap();
        assert_eq!(other, ps);
    }

    #[test]
    fn mismatched_checkpoint_rejected() {
        let mut ps = ParamSet::new();
        ps.add(Parameter::new("a", Tensor::zeros(2, 2)), false);
        let mut ck = ps.to_checkpoint("x");
        ck.params[0].rows = 1;
        assert!(ps.load_checkpoint(&ck).is_err());
    }
}

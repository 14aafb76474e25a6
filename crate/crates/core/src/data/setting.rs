use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};

/// Experimental protocol applied to a pristine dataset before each trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Standard,
    /// Every edge touching a test node is removed, for training and inference alike.
    MissingEdge,
    /// Half of each class's training labels are withheld.
    ReducedLabel,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::Standard, Setting::MissingEdge, Setting::ReducedLabel];

    pub fn name(self) -> &'static str {
        match self {
            Setting::Standard => "standard",
            Setting::MissingEdge => "missing_edge",
            Setting::ReducedLabel => "reduced_label",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Setting::Standard),
            "missing_edge" | "missing-edge" => Ok(Setting::MissingEdge),
            "reduced_label" | "reduced-label" => Ok(Setting::ReducedLabel),
            other => Err(Error::Config(format!("unknown setting {other:?}"))),
        }
    }
}

pub fn apply_setting<R: Rng + ?Sized>(ds: &Dataset, setting: Setting, rng: &mut R) -> Dataset {
    match setting {
        Setting::Standard => ds.clone(),
        Setting::MissingEdge => {
            let mut is_test = vec![false; ds.num_nodes()];
            for &i in &ds.test {
                is_test[i] = true;
            }
            Dataset {
                graph: ds.graph.filter_edges(|u, v| !is_test[u] && !is_test[v]),
                ..ds.clone()
            }
        }
        Setting::ReducedLabel => {
            let mut out = ds.clone();
            let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); ds.num_classes];
            for &i in &ds.train {
                per_class[ds.labels[i]].push(i);
            }
            let mut dropped = vec![false; ds.num_nodes()];
            for members in &mut per_class {
                members.shuffle(rng);
                let keep = members.len().div_ceil(2);
                for &i in &members[keep..] {
                    dropped[i] = true;
                }
            }
            out.train.retain(|&i| !dropped[i]);
            for (i, d) in dropped.iter().enumerate() {
                if *d {
                    out.observed[i] = false;
                }
            }
            out
        }
    }
}

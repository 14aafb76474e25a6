//! Planted-partition generator.

use gssl_autodiff::Tensor;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::graph::SparseGraph;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub num_nodes: usize,
    pub num_classes: usize,
    /// Within-class edge probability.
    pub p0: f64,
    /// Between-class edge probability.
    pub p1: f64,
    pub feature_dim: usize,
    pub feature_noise: f64,
    /// Fraction of nodes labelled for training, spread evenly over classes.
    pub labeled_fraction: f64,
    pub val_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_nodes: 200,
            num_classes: 2,
            p0: 0.9,
            p1: 0.1,
            feature_dim: 16,
            feature_noise: 1.0,
            labeled_fraction: 0.1,
            val_fraction: 0.2,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {p} is not a probability")))
            }
        };
        prob("p0", self.p0)?;
        prob("p1", self.p1)?;
        prob("labeled_fraction", self.labeled_fraction)?;
        prob("val_fraction", self.val_fraction)?;
        if self.labeled_fraction + self.val_fraction > 1.0 {
            return Err(Error::Config("labeled_fraction + val_fraction exceeds 1".into()));
        }
        if self.num_classes == 0 || self.num_nodes < self.num_classes {
            return Err(Error::Config("need at least one node per class".into()));
        }
        if self.feature_dim < self.num_classes {
            return Err(Error::Config(format!(
                "feature_dim {} cannot embed {} class centroids",
                self.feature_dim, self.num_classes
            )));
        }
        if !(self.feature_noise >= 0.0 && self.feature_noise.is_finite()) {
            return Err(Error::Config("feature_noise must be finite and non-negative".into()));
        }
        Ok(())
    }
}

pub fn synth_sbm_generate<R: Rng + ?Sized>(cfg: &SynthConfig, rng: &mut R) -> Result<Dataset> {
    cfg.validate()?;
    let (n, k) = (cfg.num_nodes, cfg.num_classes);
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(rng);

    let mut pairs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { cfg.p0 } else { cfg.p1 };
            if rng.random::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    let (graph, _) = SparseGraph::from_pairs(n, pairs);

    let noise = Normal::new(0.0, cfg.feature_noise).expect("validated noise scale");
    let features = Tensor::from_fn(n, cfg.feature_dim, |i, j| {
        let centroid = if j == labels[i] { 1.0 } else { 0.0 };
        centroid + noise.sample(rng)
    });

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let per_class = ((cfg.labeled_fraction * n as f64) / k as f64).round() as usize;
    let mut taken = vec![0usize; k];
    let (mut train, mut rest) = (Vec::new(), Vec::new());
    for i in order {
        if taken[labels[i]] < per_class {
            taken[labels[i]] += 1;
            train.push(i);
        } else {
            rest.push(i);
        }
    }
    let n_val = ((cfg.val_fraction * n as f64).round() as usize).min(rest.len());
    let test = rest.split_off(n_val);
    let mut val = rest;
    train.sort_unstable();
    val.sort_unstable();
    let mut test = test;
    test.sort_unstable();
    Dataset::new(features, labels, k, graph, train, val, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_limit_is_union_of_cliques() {
        let cfg = SynthConfig {
            num_nodes: 30,
            num_classes: 3,
            p0: 1.0,
            p1: 0.0,
            ..Default::default()
        };
        let ds = synth_sbm_generate(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(ds.graph.num_edges(), 3 * (10 * 9 / 2));
        let comps = ds.graph.components();
        assert_eq!(comps.iter().max(), Some(&2));
        for (u, v) in ds.graph.edges() {
            assert_eq!(ds.labels[*u], ds.labels[*v]);
        }
    }

    #[test]
    fn rejects_bad_probability() {
        let cfg = SynthConfig { p0: 1.5, ..Default::default() };
        assert!(matches!(
            synth_sbm_generate(&cfg, &mut ChaCha8Rng::seed_from_u64(1)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn splits_are_balanced_and_disjoint() {
        let ds = synth_sbm_generate(&SynthConfig::default(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(ds.class_counts(&ds.train), vec![10, 10]);
        assert_eq!(ds.val.len(), 40);
        assert_eq!(ds.test.len(), 140);
        ds.validate().unwrap();
    }
}

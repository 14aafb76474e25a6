use gssl_autodiff::Tensor;

use super::graph::SparseGraph;
use crate::error::{Error, Result};

/// Node features, ground-truth labels, split masks and the graph.
///
/// Every node keeps its true label for evaluation; training only ever reads
/// the labels of nodes flagged in `observed`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Tensor,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub graph: SparseGraph,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub observed: Vec<bool>,
}

impl Dataset {
    /// Assembles a dataset whose observed labels are exactly the train split.
    pub fn new(
        features: Tensor,
        labels: Vec<usize>,
        num_classes: usize,
        graph: SparseGraph,
        train: Vec<usize>,
        val: Vec<usize>,
        test: Vec<usize>,
    ) -> Result<Self> {
        let mut observed = vec![false; labels.len()];
        for &i in &train {
            if i < observed.len() {
                observed[i] = true;
            }
        }
        let ds = Self {
            features,
            labels,
            num_classes,
            graph,
            train,
            val,
            test,
            observed,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    pub fn observed_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&i| self.observed[i]).collect()
    }

    pub fn missing_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&i| !self.observed[i]).collect()
    }

    pub fn class_counts(&self, nodes: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &i in nodes {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    /// Checks every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes();
        let bad = |msg: String| Err(Error::Dataset(msg));
        if self.num_classes == 0 {
            return bad("num_classes must be positive".into());
        }
        if self.features.rows() != n {
            return bad(format!("{} feature rows for {n} labels", self.features.rows()));
        }
        if self.graph.num_nodes() != n {
            return bad(format!("graph has {} nodes, dataset {n}", self.graph.num_nodes()));
        }
        if self.observed.len() != n {
            return bad("observed mask length differs from node count".into());
        }
        if let Some((i, &y)) = self.labels.iter().enumerate().find(|(_, &y)| y >= self.num_classes) {
            return bad(format!("label {y} of node {i} not below num_classes {}", self.num_classes));
        }
        if !self.features.is_finite() {
            return bad("features contain non-finite values".into());
        }
        let mut owner = vec![None; n];
        for (name, split) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &i in split {
                if i >= n {
                    return bad(format!("{name} split references node {i} >= {n}"));
                }
                if let Some(prev) = owner[i] {
                    return bad(format!("node {i} appears in both {prev} and {name}"));
                }
                owner[i] = Some(name);
            }
        }
        if let Some(&i) = self.train.iter().find(|&&i| !self.observed[i]) {
            return bad(format!("train node {i} is not observed"));
        }
        Ok(())
    }
}

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;

use super::graph::SparseGraph;
use crate::error::{Error, Result};

/// Observed edges plus sampled non-edges, both as canonical `(u, v)`, `u < v`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeBatch {
    pub positives: Vec<(usize, usize)>,
    pub negatives: Vec<(usize, usize)>,
    pub seed: u64,
}

impl EdgeBatch {
    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every unordered pair of the graph: edges as positives, all non-edges
    /// as negatives. Quadratic; intended for small exact computations.
    pub fn all_pairs(g: &SparseGraph) -> Self {
        let n = g.num_nodes();
        let mut negatives = Vec::with_capacity(g.num_non_edges());
        for u in 0..n {
            for v in u + 1..n {
                if !g.has_edge(u, v) {
                    negatives.push((u, v));
                }
            }
        }
        Self {
            positives: g.edges().to_vec(),
            negatives,
            seed: 0,
        }
    }
}

// Above this many candidate pairs the sampler never enumerates.
const ENUMERATION_LIMIT: usize = 4_000_000;
const ATTEMPTS_PER_SAMPLE: usize = 64;

/// Draws `count` distinct non-adjacent unordered pairs uniformly at random.
pub fn negative_sample_edges<R: Rng + ?Sized>(
    g: &SparseGraph,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let n = g.num_nodes();
    let available = g.num_non_edges();
    if count > available {
        return Err(Error::Sampling(format!(
            "requested {count} negatives but only {available} non-edges exist"
        )));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let total_pairs = n * (n - 1) / 2;
    if 2 * count > available && total_pairs <= ENUMERATION_LIMIT {
        let mut pool = Vec::with_capacity(available);
        for u in 0..n {
            for v in u + 1..n {
                if !g.has_edge(u, v) {
                    pool.push((u, v));
                }
            }
        }
        return Ok(index::sample(rng, pool.len(), count)
            .into_iter()
            .map(|k| pool[k])
            .collect());
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    let budget = ATTEMPTS_PER_SAMPLE * count + 1024;
    for _ in 0..budget {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v || g.has_edge(u, v) {
            continue;
        }
        let pair = (u.min(v), u.max(v));
        if seen.insert(pair) {
            out.push(pair);
            if out.len() == count {
                return Ok(out);
            }
        }
    }
    Err(Error::Sampling(format!(
        "gave up after {budget} attempts with {} of {count} negatives; graph too dense",
        out.len()
    )))
}

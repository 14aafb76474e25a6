use gssl_autodiff::SparseMatrix;

/// Undirected simple graph in compressed adjacency form.
///
/// `edges` holds every unordered pair once as `(u, v)` with `u < v`, sorted.
/// Neighbour lists are symmetric and sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

/// What [`SparseGraph::from_pairs`] discarded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeCleanup {
    pub self_loops: usize,
    pub duplicates: usize,
}

impl SparseGraph {
    pub fn empty(n: usize) -> Self {
        Self::from_canonical(n, Vec::new())
    }

    /// Builds from arbitrary pairs: orientation is ignored, duplicates are
    /// merged and self-loops dropped. Panics if a node id is `>= n`.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> (Self, EdgeCleanup) {
        let mut cleanup = EdgeCleanup::default();
        let mut edges = Vec::new();
        for (u, v) in pairs {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range for n = {n}");
            if u == v {
                cleanup.self_loops += 1;
                continue;
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup();
        cleanup.duplicates = before - edges.len();
        (Self::from_canonical(n, edges), cleanup)
    }

    fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0usize; offsets[n]];
        for &(u, v) in &edges {
            neighbors[fill[u]] = v;
            fill[u] += 1;
            neighbors[fill[v]] = u;
            fill[v] += 1;
        }
        for i in 0..n {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Self {
            n,
            edges,
            offsets,
            neighbors,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Number of unordered non-adjacent pairs, self-pairs excluded.
    pub fn num_non_edges(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2 - self.edges.len()
    }

    /// Keeps only the edges for which `keep` holds.
    pub fn filter_edges(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Self {
        let edges = self.edges.iter().copied().filter(|&(u, v)| keep(u, v)).collect();
        Self::from_canonical(self.n, edges)
    }

    /// Directed arc lists `(src, dst)` covering both orientations of every
    /// edge plus one self-loop per node, grouped by `dst`.
    pub fn attention_arcs(&self) -> (Vec<usize>, Vec<usize>) {
        let mut src = Vec::with_capacity(2 * self.edges.len() + self.n);
        let mut dst = Vec::with_capacity(src.capacity());
        for i in 0..self.n {
            src.push(i);
            dst.push(i);
            for &j in self.neighbors(i) {
                src.push(j);
                dst.push(i);
            }
        }
        (src, dst)
    }

    /// Connected component id per node (BFS order of discovery).
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut queue = std::collections::VecDeque::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Symmetrically normalised adjacency with self-loops,
/// `Â_ij = 1 / sqrt((d_i + 1)(d_j + 1))` for `i ~ j` or `i = j`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedAdjacency(pub SparseMatrix);

pub fn gcn_normalize(g: &SparseGraph) -> NormalizedAdjacency {
    let n = g.num_nodes();
    let coef = |i: usize, j: usize| {
        1.0 / (((g.degree(i) + 1) * (g.degree(j) + 1)) as f64).sqrt()
    };
    let mut trip = Vec::with_capacity(2 * g.num_edges() + n);
    for i in 0..n {
        trip.push((i, i, coef(i, i)));
        for &j in g.neighbors(i) {
            trip.push((i, j, coef(i, j)));
        }
    }
    NormalizedAdjacency(
        SparseMatrix::from_triplets(n, n, trip).expect("graph indices are in range"),
    )
}

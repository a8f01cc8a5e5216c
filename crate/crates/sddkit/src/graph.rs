//! Weighted undirected graphs, their implied Laplacians, and generators.
//!
//! A [`WeightedGraph`] is an edge list in canonical order plus a per-vertex
//! adjacency index. The Laplacian is never materialized here; matrix-vector
//! products stream over the edge list.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A single undirected edge. Endpoints are stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl Edge {
    /// The endpoint that is not `x`.
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Undirected graph with positive edge weights and no parallel edges.
///
/// Parallel edges in the input are merged by weight summation at
/// construction; the edge list is kept sorted by `(u, v)` so that edge ids
/// are independent of input order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adj_off: Vec<usize>,
    adj: Vec<usize>,
}

impl WeightedGraph {
    pub fn new(n: usize, input: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut merged: HashMap<(usize, usize), f64> = HashMap::new();
        for (u, v, w) in input {
            if u >= n {
                return Err(Error::VertexOutOfRange { v: u, n });
            }
            if v >= n {
                return Err(Error::VertexOutOfRange { v, n });
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidWeight { u, v, w });
            }
            let key = (u.min(v), u.max(v));
            *merged.entry(key).or_insert(0.0) += w;
        }
        let mut edges: Vec<Edge> = merged
            .into_iter()
            .map(|((u, v), w)| Edge { u, v, w })
            .collect();
        edges.sort_unstable_by_key(|e| (e.u, e.v));

        let mut adj_off = vec![0usize; n + 1];
        for e in &edges {
            adj_off[e.u + 1] += 1;
            adj_off[e.v + 1] += 1;
        }
        for i in 0..n {
            adj_off[i + 1] += adj_off[i];
        }
        let mut cursor = adj_off.clone();
        let mut adj = vec![0usize; 2 * edges.len()];
        for (id, e) in edges.iter().enumerate() {
            adj[cursor[e.u]] = id;
            cursor[e.u] += 1;
            adj[cursor[e.v]] = id;
            cursor[e.v] += 1;
        }
        Ok(WeightedGraph {
            n,
            edges,
            adj_off,
            adj,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    /// Ids of the edges incident to `v`.
    pub fn incident(&self, v: usize) -> &[usize] {
        &self.adj[self.adj_off[v]..self.adj_off[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj_off[v + 1] - self.adj_off[v]
    }

    /// Weighted degree (the Laplacian diagonal entry).
    pub fn weighted_degree(&self, v: usize) -> f64 {
        self.incident(v).iter().map(|&e| self.edges[e].w).sum()
    }

    /// Applies the implied Laplacian: `y = L x` with
    /// `L(i,i) = sum_j w_ij`, `L(i,j) = -w_ij`.
    pub fn laplacian_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        for e in &self.edges {
            let d = e.w * (x[e.u] - x[e.v]);
            y[e.u] += d;
            y[e.v] -= d;
        }
        Ok(y)
    }

    /// The quadratic form `x^T L x = sum_e w_e (x_u - x_v)^2`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|e| e.w * (x[e.u] - x[e.v]) * (x[e.u] - x[e.v]))
            .sum()
    }

    /// Sizes of the connected components, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            stack.push(s);
            let mut size = 0usize;
            while let Some(v) = stack.pop() {
                size += 1;
                for &eid in self.incident(v) {
                    let u = self.edges[eid].other(v);
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            sizes.push(size);
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.component_sizes().len() == 1
    }

    pub fn require_connected(&self) -> Result<()> {
        let sizes = self.component_sizes();
        if self.n > 1 && sizes.len() > 1 {
            return Err(Error::Disconnected(sizes));
        }
        Ok(())
    }

    /// Vertices of the largest connected component, with a renumbered
    /// subgraph. Used by the CLI splitter for disconnected inputs.
    pub fn largest_component(&self) -> (Vec<usize>, WeightedGraph) {
        let mut comp = vec![usize::MAX; self.n];
        let mut stack = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            let c = members.len();
            comp[s] = c;
            stack.push(s);
            let mut verts = vec![s];
            while let Some(v) = stack.pop() {
                for &eid in self.incident(v) {
                    let u = self.edges[eid].other(v);
                    if comp[u] == usize::MAX {
                        comp[u] = c;
                        stack.push(u);
                        verts.push(u);
                    }
                }
            }
            members.push(verts);
        }
        let mut best = members.into_iter().max_by_key(|m| m.len()).unwrap_or_default();
        best.sort_unstable();
        let index: HashMap<usize, usize> = best.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| index.contains_key(&e.u) && index.contains_key(&e.v))
            .map(|e| (index[&e.u], index[&e.v], e.w));
        let sub = WeightedGraph::new(best.len(), edges).expect("subgraph of a valid graph");
        (best, sub)
    }

    /// New graph with every edge weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> WeightedGraph {
        let mut g = self.clone();
        for e in &mut g.edges {
            e.w *= factor;
        }
        g
    }

    /// New graph with the weights of the edges in `mask` multiplied by
    /// `factor` and all other weights unchanged.
    pub fn with_scaled_edges(&self, mask: &[bool], factor: f64) -> WeightedGraph {
        let mut g = self.clone();
        for (id, e) in g.edges.iter_mut().enumerate() {
            if mask[id] {
                e.w *= factor;
            }
        }
        g
    }
}

/// Subtracts the mean from `x` in place; returns the mean that was removed.
pub fn project_mean(x: &mut [f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for v in x.iter_mut() {
        *v -= mean;
    }
    mean
}

/// Path on `n` vertices with unit weights.
pub fn path(n: usize) -> Result<WeightedGraph> {
    if n == 0 {
        return Err(Error::param("n", "path needs at least one vertex"));
    }
    WeightedGraph::new(n, (1..n).map(|i| (i - 1, i, 1.0)))
}

/// Cycle on `n >= 3` vertices with unit weights.
pub fn cycle(n: usize) -> Result<WeightedGraph> {
    if n < 3 {
        return Err(Error::param("n", "cycle needs at least three vertices"));
    }
    WeightedGraph::new(n, (0..n).map(|i| (i, (i + 1) % n, 1.0)))
}

/// Four-connected grid with `rows * cols` vertices and unit weights.
pub fn grid2d(rows: usize, cols: usize) -> Result<WeightedGraph> {
    if rows == 0 || cols == 0 {
        return Err(Error::param("rows/cols", "grid dimensions must be positive"));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::with_capacity(2 * rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1), 1.0));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c), 1.0));
            }
        }
    }
    WeightedGraph::new(rows * cols, edges)
}

/// Complete graph on `n` vertices with unit weights.
pub fn complete(n: usize) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(Error::param("n", "complete graph needs at least two vertices"));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            edges.push((u, v, 1.0));
        }
    }
    WeightedGraph::new(n, edges)
}

/// Random connected graph with `n` vertices, `m` edges and weights in
/// `[0.5, 2)`. Deterministic for a fixed seed: a random spanning tree is
/// drawn first, then distinct extra edges until `m` is reached.
pub fn random(n: usize, m: usize, seed: u64) -> Result<WeightedGraph> {
    if n == 0 {
        return Err(Error::param("n", "graph needs at least one vertex"));
    }
    if m + 1 < n {
        return Err(Error::param(
            "m",
            format!("{m} edges cannot connect {n} vertices"),
        ));
    }
    let max_m = n * n.saturating_sub(1) / 2;
    if m > max_m {
        return Err(Error::param(
            "m",
            format!("{m} exceeds the {max_m} distinct pairs on {n} vertices"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = |rng: &mut ChaCha8Rng| rng.gen_range(0.5..2.0);
    let mut present = std::collections::HashSet::new();
    let mut edges = Vec::with_capacity(m);
    for v in 1..n {
        let u = rng.gen_range(0..v);
        present.insert((u, v));
        let w = weight(&mut rng);
        edges.push((u, v, w));
    }
    while edges.len() < m {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if present.insert(key) {
            let w = weight(&mut rng);
            edges.push((key.0, key.1, w));
        }
    }
    let g = WeightedGraph::new(n, edges)?;
    debug_assert!(g.is_connected());
    Ok(g)
}

/// Graph family selector used by the CLI and the benchmark harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Path,
    Cycle,
    Grid2d,
    Random,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(Family::Path),
            "cycle" => Ok(Family::Cycle),
            "grid2d" => Ok(Family::Grid2d),
            "random" => Ok(Family::Random),
            other => Err(Error::param(
                "family",
                format!("unknown family {other:?}; expected path|cycle|grid2d|random"),
            )),
        }
    }
}

/// Generates a family member with roughly `target_m` edges.
pub fn generate(family: Family, target_m: usize, seed: u64) -> Result<WeightedGraph> {
    match family {
        Family::Path => path(target_m + 1),
        Family::Cycle => cycle(target_m.max(3)),
        Family::Grid2d => {
            // m = 2k(k-1) for a k x k grid
            let k = (((1.0 + (1.0 + 2.0 * target_m as f64).sqrt()) / 2.0).round() as usize).max(2);
            grid2d(k, k)
        }
        Family::Random => {
            let n = (target_m / 4).max(2);
            random(n, target_m.max(n - 1), seed)
        }
    }
}

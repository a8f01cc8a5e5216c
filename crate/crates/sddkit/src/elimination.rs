//! Greedy elimination of degree-1 and degree-2 vertices.
//!
//! Removing a degree-1 vertex is exact; splicing a degree-2 vertex replaces
//! its two incident edges by one of weight `w1 w2 / (w1 + w2)` (the series
//! rule), merging with any parallel edge by summation. Both are partial
//! Cholesky pivots on a Laplacian, so the reduced graph is the Schur
//! complement and stays a Laplacian. The recorded factor supports O(n)
//! forward and back substitution.
//!
//! If the input has `n - 1 + j` edges with `j >= 2`, the reduced graph has
//! at most `2j - 2` vertices and `3j - 3` edges.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// One recorded pivot, with the weights as they were at pivot time.
#[derive(Debug, Clone, PartialEq)]
pub enum PivotStep {
    Degree1 {
        v: usize,
        neighbor: usize,
        w: f64,
    },
    Degree2 {
        v: usize,
        n1: usize,
        n2: usize,
        w1: f64,
        w2: f64,
        /// Series weight `w1 w2 / (w1 + w2)` of the splice edge.
        merged: f64,
    },
}

impl PivotStep {
    pub fn vertex(&self) -> usize {
        match *self {
            PivotStep::Degree1 { v, .. } | PivotStep::Degree2 { v, .. } => v,
        }
    }
}

/// Ordered elimination record mapping a graph to its reduced Schur
/// complement and back.
#[derive(Debug, Clone)]
pub struct EliminationFactor {
    n: usize,
    steps: Vec<PivotStep>,
    eliminated: Vec<usize>,
    /// original vertex id -> reduced id for survivors
    survivor_map: Vec<Option<usize>>,
    survivors: Vec<usize>,
}

impl EliminationFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reduced_n(&self) -> usize {
        self.survivors.len()
    }

    pub fn steps(&self) -> &[PivotStep] {
        &self.steps
    }

    pub fn eliminated(&self) -> &[usize] {
        &self.eliminated
    }

    pub fn survivor_map(&self) -> &[Option<usize>] {
        &self.survivor_map
    }

    pub fn survivors(&self) -> &[usize] {
        &self.survivors
    }

    /// Forward substitution: replays the pivots on a right-hand side,
    /// returning the eliminated coordinates' values (in elimination order)
    /// and the Schur-complement right-hand side on the reduced vertices.
    ///
    /// A right-hand side with nonzero mean is projected first, with a
    /// warning; Laplacian systems are only solvable on the mean-zero
    /// subspace.
    pub fn forward(&self, c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if c.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: c.len(),
            });
        }
        let mut work = c.to_vec();
        let norm = work.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        let mean = work.iter().sum::<f64>() / self.n.max(1) as f64;
        if mean.abs() > 1e-12 * norm.max(1.0) {
            log::warn!("forward substitution: projecting rhs with mean {mean:.3e}");
            for v in work.iter_mut() {
                *v -= mean;
            }
        }
        let mut c_top = Vec::with_capacity(self.steps.len());
        for step in &self.steps {
            match *step {
                PivotStep::Degree1 { v, neighbor, .. } => {
                    c_top.push(work[v]);
                    work[neighbor] += work[v];
                }
                PivotStep::Degree2 {
                    v, n1, n2, w1, w2, ..
                } => {
                    c_top.push(work[v]);
                    let total = w1 + w2;
                    work[n1] += work[v] * w1 / total;
                    work[n2] += work[v] * w2 / total;
                }
            }
        }
        let c_bottom = self.survivors.iter().map(|&v| work[v]).collect();
        Ok((c_top, c_bottom))
    }

    /// Back substitution: recovers the eliminated coordinates from the
    /// reduced solution by replaying the pivots in reverse.
    pub fn backward(&self, c_top: &[f64], x_bottom: &[f64]) -> Result<Vec<f64>> {
        if c_top.len() != self.steps.len() {
            return Err(Error::DimensionMismatch {
                expected: self.steps.len(),
                actual: c_top.len(),
            });
        }
        if x_bottom.len() != self.survivors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.survivors.len(),
                actual: x_bottom.len(),
            });
        }
        let mut x = vec![0.0; self.n];
        for (&v, &xv) in self.survivors.iter().zip(x_bottom) {
            x[v] = xv;
        }
        for (step, &cv) in self.steps.iter().zip(c_top).rev() {
            match *step {
                PivotStep::Degree1 { v, neighbor, w } => {
                    x[v] = x[neighbor] + cv / w;
                }
                PivotStep::Degree2 {
                    v, n1, n2, w1, w2, ..
                } => {
                    x[v] = (w1 * x[n1] + w2 * x[n2] + cv) / (w1 + w2);
                }
            }
        }
        Ok(x)
    }
}

/// Eliminates all degree-1 and degree-2 vertices of a connected graph.
///
/// Pivots are scheduled by a FIFO worklist seeded with all degree <= 2
/// vertices in ascending id order; neighbors whose degree drops re-enter
/// the queue. Stops when no such vertices remain or one vertex is left.
pub fn greedy_elimination(g: &WeightedGraph) -> Result<(WeightedGraph, EliminationFactor)> {
    g.require_connected()?;
    let n = g.n();
    // BTreeMap adjacency keeps neighbor enumeration deterministic
    let mut adj: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for e in g.edges() {
        adj[e.u].insert(e.v, e.w);
        adj[e.v].insert(e.u, e.w);
    }
    let mut alive = vec![true; n];
    let mut remaining = n;
    let mut queued = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for v in 0..n {
        if adj[v].len() <= 2 {
            queue.push_back(v);
            queued[v] = true;
        }
    }

    let mut steps = Vec::new();
    let mut eliminated = Vec::new();
    while let Some(v) = queue.pop_front() {
        queued[v] = false;
        if !alive[v] || remaining <= 1 {
            continue;
        }
        match adj[v].len() {
            0 => {} // the last vertex of a fully collapsed graph
            1 => {
                let (&u, &w) = adj[v].iter().next().unwrap();
                adj[u].remove(&v);
                adj[v].clear();
                alive[v] = false;
                remaining -= 1;
                steps.push(PivotStep::Degree1 { v, neighbor: u, w });
                eliminated.push(v);
                if adj[u].len() <= 2 && !queued[u] {
                    queue.push_back(u);
                    queued[u] = true;
                }
            }
            2 => {
                let mut it = adj[v].iter();
                let (&n1, &w1) = it.next().unwrap();
                let (&n2, &w2) = it.next().unwrap();
                let merged = w1 * w2 / (w1 + w2);
                adj[n1].remove(&v);
                adj[n2].remove(&v);
                adj[v].clear();
                alive[v] = false;
                remaining -= 1;
                // splice; a parallel edge merges by summation
                *adj[n1].entry(n2).or_insert(0.0) += merged;
                *adj[n2].entry(n1).or_insert(0.0) += merged;
                steps.push(PivotStep::Degree2 {
                    v,
                    n1,
                    n2,
                    w1,
                    w2,
                    merged,
                });
                eliminated.push(v);
                for u in [n1, n2] {
                    if adj[u].len() <= 2 && !queued[u] {
                        queue.push_back(u);
                        queued[u] = true;
                    }
                }
            }
            _ => {}
        }
    }

    let survivors: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    let mut survivor_map = vec![None; n];
    for (idx, &v) in survivors.iter().enumerate() {
        survivor_map[v] = Some(idx);
    }
    let mut edges = Vec::new();
    for &v in &survivors {
        for (&u, &w) in &adj[v] {
            if v < u {
                edges.push((survivor_map[v].unwrap(), survivor_map[u].unwrap(), w));
            }
        }
    }
    let reduced = WeightedGraph::new(survivors.len(), edges)?;
    let factor = EliminationFactor {
        n,
        steps,
        eliminated,
        survivor_map,
        survivors,
    };
    Ok((reduced, factor))
}

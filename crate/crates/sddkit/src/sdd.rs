//! SDD matrices and their reduction to graph Laplacians.
//!
//! A matrix that is already a Laplacian maps to its graph directly. General
//! SDD matrices go through a double cover: each original vertex i gets a
//! twin i', negative off-diagonals connect like vertices, positive
//! off-diagonals connect a vertex to the twin of the other, and row excess
//! ties each vertex to its own twin. Solutions come back through
//! `x_i = (x̂_i - x̂_{i'}) / 2`.

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

const SYM_TOL: f64 = 1e-12;

/// Symmetric diagonally dominant matrix in coordinate form.
///
/// Off-diagonal entries are stored once per unordered pair with `i < j`;
/// symmetry is by construction. Diagonal dominance is validated within a
/// relative tolerance of 1e-12 per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SddMatrix {
    n: usize,
    diag: Vec<f64>,
    off: Vec<(usize, usize, f64)>,
}

impl SddMatrix {
    /// Builds from an arbitrary coordinate list. Entries may appear in any
    /// order; `(i, j)` and `(j, i)` must agree when both present, and each
    /// row must satisfy `A_ii >= sum_{j != i} |A_ij|` within tolerance.
    pub fn from_entries(
        n: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut diag = vec![0.0; n];
        let mut seen_diag = vec![false; n];
        let mut off: std::collections::HashMap<(usize, usize), (f64, bool)> =
            std::collections::HashMap::new();
        for (i, j, v) in entries {
            if i >= n {
                return Err(Error::VertexOutOfRange { v: i, n });
            }
            if j >= n {
                return Err(Error::VertexOutOfRange { v: j, n });
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { row: i });
            }
            if i == j {
                if seen_diag[i] && diag[i] != v {
                    return Err(Error::NotSymmetric { i, j });
                }
                seen_diag[i] = true;
                diag[i] = v;
                continue;
            }
            let key = (i.min(j), i.max(j));
            let lower = i > j;
            match off.entry(key) {
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert((v, lower));
                }
                std::collections::hash_map::Entry::Occupied(mut e) => {
                    let (prev, prev_lower) = *e.get();
                    if prev_lower == lower {
                        // duplicate coordinate on the same side
                        return Err(Error::NotSymmetric { i, j });
                    }
                    let scale = prev.abs().max(v.abs()).max(1.0);
                    if (prev - v).abs() > SYM_TOL * scale {
                        return Err(Error::NotSymmetric { i, j });
                    }
                    e.insert((v, lower));
                }
            }
        }
        let mut off: Vec<(usize, usize, f64)> = off
            .into_iter()
            .filter(|&(_, (v, _))| v != 0.0)
            .map(|((i, j), (v, _))| (i, j, v))
            .collect();
        off.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let m = SddMatrix { n, diag, off };
        m.check_dominance()?;
        Ok(m)
    }

    fn check_dominance(&self) -> Result<()> {
        let mut sums = vec![0.0; self.n];
        for &(i, j, v) in &self.off {
            sums[i] += v.abs();
            sums[j] += v.abs();
        }
        for i in 0..self.n {
            if !self.diag[i].is_finite() {
                return Err(Error::NonFiniteEntry { row: i });
            }
            let scale = self.diag[i].abs().max(sums[i]).max(1.0);
            if self.diag[i] < sums[i] - SYM_TOL * scale {
                return Err(Error::NotDominant {
                    row: i,
                    diag: self.diag[i],
                    offdiag_sum: sums[i],
                });
            }
        }
        Ok(())
    }

    /// Laplacian of a graph as an `SddMatrix`.
    pub fn from_graph(g: &WeightedGraph) -> Self {
        let mut diag = vec![0.0; g.n()];
        let mut off = Vec::with_capacity(g.m());
        for e in g.edges() {
            diag[e.u] += e.w;
            diag[e.v] += e.w;
            off.push((e.u, e.v, -e.w));
        }
        SddMatrix {
            n: g.n(),
            diag,
            off,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries, one per unordered pair, `i < j`.
    pub fn off_diagonals(&self) -> &[(usize, usize, f64)] {
        &self.off
    }

    /// Number of stored nonzero entries counting both triangles.
    pub fn nnz(&self) -> usize {
        self.diag.iter().filter(|&&d| d != 0.0).count() + 2 * self.off.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, xi)| d * xi).collect();
        for &(i, j, v) in &self.off {
            y[i] += v * x[j];
            y[j] += v * x[i];
        }
        Ok(y)
    }

    /// Per-row excess `d_i = A_ii - sum_{j != i} |A_ij|`, clamped at zero.
    pub fn row_excess(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for &(i, j, v) in &self.off {
            sums[i] += v.abs();
            sums[j] += v.abs();
        }
        self.diag
            .iter()
            .zip(&sums)
            .map(|(d, s)| (d - s).max(0.0))
            .collect()
    }

    /// True when the matrix is already a Laplacian: non-positive
    /// off-diagonals and zero row excess (within tolerance).
    pub fn is_laplacian(&self) -> bool {
        if self.off.iter().any(|&(_, _, v)| v > 0.0) {
            return false;
        }
        let mut sums = vec![0.0; self.n];
        for &(i, j, v) in &self.off {
            sums[i] += v.abs();
            sums[j] += v.abs();
        }
        self.diag
            .iter()
            .zip(&sums)
            .all(|(d, s)| (d - s).abs() <= SYM_TOL * d.abs().max(*s).max(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionKind {
    Identity,
    DoubleCover,
}

/// Correspondence between an SDD system and its Laplacian reduction.
#[derive(Debug, Clone)]
pub struct ReductionMap {
    kind: ReductionKind,
    original_n: usize,
}

impl ReductionMap {
    pub fn kind(&self) -> ReductionKind {
        self.kind
    }

    pub fn original_n(&self) -> usize {
        self.original_n
    }

    /// Index of original vertex `i` in the reduced graph.
    pub fn forward(&self, i: usize) -> usize {
        i
    }

    /// Index of the double-cover twin of original vertex `i`, if any.
    pub fn twin(&self, i: usize) -> Option<usize> {
        match self.kind {
            ReductionKind::Identity => None,
            ReductionKind::DoubleCover => Some(self.original_n + i),
        }
    }

    /// Original vertex behind reduced vertex `v`.
    pub fn backward(&self, v: usize) -> usize {
        v % self.original_n
    }

    /// Right-hand side for the reduced system.
    pub fn map_rhs(&self, b: &[f64]) -> Vec<f64> {
        match self.kind {
            ReductionKind::Identity => b.to_vec(),
            ReductionKind::DoubleCover => {
                let mut out = Vec::with_capacity(2 * b.len());
                out.extend_from_slice(b);
                out.extend(b.iter().map(|v| -v));
                out
            }
        }
    }

    /// Solution of the original system from the reduced one.
    pub fn back_map(&self, xhat: &[f64]) -> Vec<f64> {
        match self.kind {
            ReductionKind::Identity => xhat.to_vec(),
            ReductionKind::DoubleCover => {
                let n = self.original_n;
                (0..n).map(|i| 0.5 * (xhat[i] - xhat[n + i])).collect()
            }
        }
    }
}

/// Reduces an SDD system `A x = b` to a Laplacian system.
///
/// If `a` is already a Laplacian the graph is returned directly. Otherwise
/// the double cover is built on 2n vertices: a negative off-diagonal A_ij
/// contributes edges (i, j) and (i', j') of weight |A_ij|, a positive
/// off-diagonal contributes (i, j') and (j, i') of weight A_ij, and row
/// excess d_i contributes (i, i') of weight d_i / 2 so that the reduced
/// solution maps back exactly.
pub fn sdd_to_laplacian(
    a: &SddMatrix,
    b: &[f64],
) -> Result<(WeightedGraph, Vec<f64>, ReductionMap)> {
    if b.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            actual: b.len(),
        });
    }
    let n = a.n();
    if a.is_laplacian() {
        let edges = a
            .off_diagonals()
            .iter()
            .filter(|&&(_, _, v)| v < 0.0)
            .map(|&(i, j, v)| (i, j, -v));
        let g = WeightedGraph::new(n, edges)?;
        let map = ReductionMap {
            kind: ReductionKind::Identity,
            original_n: n,
        };
        let rhs = map.map_rhs(b);
        return Ok((g, rhs, map));
    }

    let excess = a.row_excess();
    let mut edges = Vec::with_capacity(4 * a.off_diagonals().len() + n);
    for &(i, j, v) in a.off_diagonals() {
        if v < 0.0 {
            edges.push((i, j, -v));
            edges.push((n + i, n + j, -v));
        } else {
            edges.push((i, n + j, v));
            edges.push((j, n + i, v));
        }
    }
    for (i, &d) in excess.iter().enumerate() {
        let scale = a.diag()[i].abs().max(1.0);
        if d > SYM_TOL * scale {
            edges.push((i, n + i, d / 2.0));
        }
    }
    let g = WeightedGraph::new(2 * n, edges)?;
    let map = ReductionMap {
        kind: ReductionKind::DoubleCover,
        original_n: n,
    };
    let rhs = map.map_rhs(b);
    Ok((g, rhs, map))
}

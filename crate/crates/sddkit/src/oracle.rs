//! Dense brute-force reference implementations.
//!
//! Everything here is O(n^3) or worse and guarded by a size limit (default
//! 400 vertices, overridable through `SDDKIT_ORACLE_LIMIT`). These routines
//! are the ground truth the fast path is tested against: Moore-Penrose
//! pseudo-inverses via symmetric eigendecomposition, effective resistances,
//! the edge-space projection matrix, and generalized eigenvalue bounds for
//! spectral sandwiches.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Symmetric eigendecomposition with a correctness check. nalgebra's QL
/// iteration can silently lose accuracy on highly degenerate spectra
/// (e.g. circulant Laplacians, whose eigenvalues all come in pairs); when
/// the residual `A V - V D` is out of tolerance, fall back to cyclic
/// Jacobi rotations, which converge on degenerate matrices.
fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(a.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues);
    let residual = (a * &eig.eigenvectors - &eig.eigenvectors * d).norm();
    if residual <= 1e-10 * a.norm().max(1.0) {
        return (eig.eigenvalues, eig.eigenvectors);
    }
    jacobi_eigen(a)
}

fn jacobi_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..50 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (m.diagonal(), v)
}

pub const DEFAULT_ORACLE_LIMIT: usize = 400;

/// Dense-oracle size cap: `SDDKIT_ORACLE_LIMIT` if set, else 400.
pub fn oracle_limit() -> usize {
    std::env::var("SDDKIT_ORACLE_LIMIT")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_ORACLE_LIMIT)
}

fn check_limit(n: usize) -> Result<()> {
    let limit = oracle_limit();
    if n > limit {
        return Err(Error::OracleLimit { n, limit });
    }
    Ok(())
}

/// Row-major dense matrix. Only what the oracle needs.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DenseMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            y[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        y
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Spectral norm of a symmetric matrix (largest |eigenvalue|).
    pub fn sym_norm2(&self) -> f64 {
        self.sym_eigenvalues()
            .iter()
            .fold(0.0f64, |acc, &l| acc.max(l.abs()))
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        assert_eq!(self.rows, self.cols);
        let (values, _) = sym_eigen(&self.to_nalgebra());
        let mut ev: Vec<f64> = values.iter().copied().collect();
        ev.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<f64>) -> DenseMatrix {
        DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense Laplacian assembly.
pub fn laplacian_dense(g: &WeightedGraph) -> DenseMatrix {
    let mut l = DenseMatrix::zeros(g.n(), g.n());
    for e in g.edges() {
        l[(e.u, e.u)] += e.w;
        l[(e.v, e.v)] += e.w;
        l[(e.u, e.v)] -= e.w;
        l[(e.v, e.u)] -= e.w;
    }
    l
}

/// Moore-Penrose pseudo-inverse of the Laplacian via symmetric
/// eigendecomposition. Eigenvalues below `1e-10 * lambda_max` are treated
/// as null space.
pub fn dense_pseudoinverse(g: &WeightedGraph) -> Result<DenseMatrix> {
    check_limit(g.n())?;
    Ok(dense_pseudoinverse_unbounded(g))
}

/// Pseudo-inverse without the oracle size cap, for the chain's terminal
/// factorization (terminal graphs are tiny by construction).
pub(crate) fn dense_pseudoinverse_unbounded(g: &WeightedGraph) -> DenseMatrix {
    let l = laplacian_dense(g).to_nalgebra();
    let (values, vectors) = sym_eigen(&l);
    let lmax = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cutoff = 1e-10 * lmax.max(f64::MIN_POSITIVE);
    let n = g.n();
    let mut pinv = DMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        if lambda.abs() <= cutoff {
            continue;
        }
        let u = vectors.column(k);
        let scale = 1.0 / lambda;
        for i in 0..n {
            for j in 0..n {
                pinv[(i, j)] += scale * u[i] * u[j];
            }
        }
    }
    DenseMatrix::from_nalgebra(&pinv)
}

/// Solves `L x = b` in the pseudo-inverse sense: projects `b` onto the
/// mean-zero subspace and applies the dense pseudo-inverse.
pub fn pinv_solve(pinv: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let mut b = b.to_vec();
    crate::graph::project_mean(&mut b);
    pinv.matvec(&b)
}

/// Effective resistance of every edge: `R_e = b_e^T L^+ b_e`.
pub fn effective_resistances(g: &WeightedGraph) -> Result<Vec<f64>> {
    let pinv = dense_pseudoinverse(g)?;
    Ok(g.edges()
        .iter()
        .map(|e| pinv[(e.u, e.u)] + pinv[(e.v, e.v)] - 2.0 * pinv[(e.u, e.v)])
        .collect())
}

/// Signed incidence matrix with head = min(u, v): row e has -1 at the head
/// and +1 at the tail.
pub fn incidence_matrix(g: &WeightedGraph) -> DenseMatrix {
    let mut b = DenseMatrix::zeros(g.m(), g.n());
    for (id, e) in g.edges().iter().enumerate() {
        b[(id, e.u)] = -1.0;
        b[(id, e.v)] = 1.0;
    }
    b
}

/// The m x m projection matrix `Pi = W^{1/2} B L^+ B^T W^{1/2}`.
///
/// `Pi` is a rank n-1 orthogonal projection; its diagonal carries the
/// leverage scores `w_e R_e` and its trace is n-1.
pub fn projection_matrix(g: &WeightedGraph) -> Result<DenseMatrix> {
    check_limit(g.n())?;
    check_limit(g.m())?;
    let pinv = dense_pseudoinverse(g)?;
    let b = incidence_matrix(g);
    let sqrt_w: Vec<f64> = g.edges().iter().map(|e| e.w.sqrt()).collect();
    // rows of W^{1/2} B
    let wb = DenseMatrix::from_fn(g.m(), g.n(), |e, v| sqrt_w[e] * b[(e, v)]);
    let t = wb.matmul(&pinv);
    Ok(t.matmul(&wb.transpose()))
}

/// Orthonormal basis of the mean-zero subspace (Helmert columns), n x (n-1).
fn mean_zero_basis(n: usize) -> DenseMatrix {
    let mut q = DenseMatrix::zeros(n, n - 1);
    for j in 1..n {
        let norm = ((j * (j + 1)) as f64).sqrt();
        for i in 0..j {
            q[(i, j - 1)] = 1.0 / norm;
        }
        q[(j, j - 1)] = -(j as f64) / norm;
    }
    q
}

#[derive(Debug, Clone, Copy)]
pub struct SandwichReport {
    pub ok: bool,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
}

/// Extreme generalized eigenvalues of the pencil `(L_g, L_h)` restricted to
/// the mean-zero subspace, with the containment test
/// `lower - 1e-9 <= lambda_lo` and `lambda_hi <= upper + 1e-9`.
///
/// `h` must be connected so the projected `L_h` is positive definite.
pub fn sandwich_check(
    g: &WeightedGraph,
    h: &WeightedGraph,
    lower: f64,
    upper: f64,
) -> Result<SandwichReport> {
    if g.n() != h.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            actual: h.n(),
        });
    }
    check_limit(g.n())?;
    g.require_connected()?;
    h.require_connected()?;
    let (lo, hi) = generalized_extremes(g, h)?;
    Ok(SandwichReport {
        ok: lower - 1e-9 <= lo && hi <= upper + 1e-9,
        lambda_lo: lo,
        lambda_hi: hi,
    })
}

/// Generalized condition number of the pair, `lambda_hi / lambda_lo`.
pub fn condition_number(g: &WeightedGraph, h: &WeightedGraph) -> Result<f64> {
    let (lo, hi) = generalized_extremes(g, h)?;
    Ok(hi / lo)
}

fn generalized_extremes(g: &WeightedGraph, h: &WeightedGraph) -> Result<(f64, f64)> {
    let n = g.n();
    if n < 2 {
        return Ok((1.0, 1.0));
    }
    let q = mean_zero_basis(n);
    let project = |m: &DenseMatrix| q.transpose().matmul(&m.matmul(&q));
    let ag = project(&laplacian_dense(g)).to_nalgebra();
    let ah = project(&laplacian_dense(h)).to_nalgebra();
    let chol: Cholesky<f64, Dyn> = Cholesky::new(ah).ok_or_else(|| {
        Error::param("h", "projected Laplacian is not positive definite (graph disconnected?)")
    })?;
    let l = chol.l();
    // M = L^{-1} Ag L^{-T}, symmetric with the pencil's eigenvalues
    let x = l
        .solve_lower_triangular(&ag)
        .ok_or_else(|| Error::param("h", "singular Cholesky factor"))?;
    let m = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::param("h", "singular Cholesky factor"))?;
    let sym = (&m + m.transpose()) * 0.5;
    let (ev, _) = sym_eigen(&sym);
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cycle, path, random, WeightedGraph};

    fn triangle() -> WeightedGraph {
        WeightedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn pseudoinverse_of_single_edge() {
        // L = [[1,-1],[-1,1]] has eigenvalues {0, 2}; the nonzero one inverts
        // to 1/2 on the eigenvector (1,-1)/sqrt(2), giving entries +-1/4.
        let g = path(2).unwrap();
        let pinv = dense_pseudoinverse(&g).unwrap();
        assert!((pinv[(0, 0)] - 0.25).abs() < 1e-12);
        assert!((pinv[(0, 1)] + 0.25).abs() < 1e-12);
        assert!((pinv[(1, 1)] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn pseudoinverse_identities() {
        let g = random(30, 70, 11).unwrap();
        let l = laplacian_dense(&g);
        let pinv = dense_pseudoinverse(&g).unwrap();
        // L L+ L = L
        let llpl = l.matmul(&pinv).matmul(&l);
        let err = llpl.sub(&l).sym_norm2();
        assert!(err < 1e-8, "||L L+ L - L|| = {err}");
        // L+ 1 = 0
        let ones = vec![1.0; g.n()];
        assert!(pinv.matvec(&ones).iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn pseudoinverse_triangle_projector() {
        // L+ L = I - J/3 for the unit triangle
        let g = triangle();
        let l = laplacian_dense(&g);
        let pinv = dense_pseudoinverse(&g).unwrap();
        let prod = pinv.matmul(&l);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 - 1.0 / 3.0 } else { -1.0 / 3.0 };
                assert!((prod[(i, j)] - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn effective_resistance_values() {
        let g = WeightedGraph::new(2, [(0, 1, 4.0)]).unwrap();
        let r = effective_resistances(&g).unwrap();
        assert!((r[0] - 0.25).abs() < 1e-12);

        // triangle: two unit resistors in series parallel to one, 2/3 each
        let t = triangle();
        let r = effective_resistances(&t).unwrap();
        for &re in &r {
            assert!((re - 2.0 / 3.0).abs() < 1e-10);
        }
        let total: f64 = t
            .edges()
            .iter()
            .zip(&r)
            .map(|(e, re)| e.w * re)
            .sum();
        assert!((total - 2.0).abs() < 1e-10);

        // cycle(n): n-1 resistors in series parallel to one
        let c = cycle(8).unwrap();
        let r = effective_resistances(&c).unwrap();
        for &re in &r {
            assert!((re - 7.0 / 8.0).abs() < 1e-10);
        }
    }

    #[test]
    fn projection_matrix_on_tree_is_identity() {
        let g = path(6).unwrap();
        let pi = projection_matrix(&g).unwrap();
        for i in 0..g.m() {
            for j in 0..g.m() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((pi[(i, j)] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn projection_matrix_identities() {
        let g = triangle();
        let pi = projection_matrix(&g).unwrap();
        for i in 0..3 {
            assert!((pi[(i, i)] - 2.0 / 3.0).abs() < 1e-9);
        }
        let h = random(20, 45, 5).unwrap();
        let pi = projection_matrix(&h).unwrap();
        assert!(pi.matmul(&pi).sub(&pi).sym_norm2() < 1e-8);
        assert!((pi.trace() - (h.n() as f64 - 1.0)).abs() < 1e-8);
        for lambda in pi.sym_eigenvalues() {
            assert!(lambda.abs() < 1e-8 || (lambda - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn sandwich_identical_and_scaled() {
        let g = random(25, 60, 2).unwrap();
        let same = sandwich_check(&g, &g, 1.0, 1.0).unwrap();
        assert!(same.ok);
        assert!((same.lambda_lo - 1.0).abs() < 1e-9);
        assert!((same.lambda_hi - 1.0).abs() < 1e-9);

        let h = g.scaled(2.0);
        let half = sandwich_check(&g, &h, 0.5, 0.5).unwrap();
        assert!(half.ok);
        assert!((half.lambda_lo - 0.5).abs() < 1e-9);
        assert!((half.lambda_hi - 0.5).abs() < 1e-9);
    }

    #[test]
    fn cycle_vs_path_condition_number_grows_linearly() {
        for n in [8usize, 16, 32] {
            let c = cycle(n).unwrap();
            let p = WeightedGraph::new(n, (1..n).map(|i| (i - 1, i, 1.0))).unwrap();
            let rep = sandwich_check(&c, &p, 0.0, f64::INFINITY).unwrap();
            let kappa = rep.lambda_hi / rep.lambda_lo;
            assert!(
                kappa >= n as f64 / 4.0,
                "kappa(cycle({n}), path) = {kappa}"
            );
        }
    }

    #[test]
    fn oracle_outputs_are_edge_order_invariant() {
        let edges = vec![(0, 1, 1.5), (1, 2, 0.5), (2, 3, 2.0), (0, 3, 1.0), (1, 3, 0.7)];
        let g = WeightedGraph::new(4, edges.clone()).unwrap();
        let mut shuffled = edges;
        shuffled.reverse();
        shuffled.swap(0, 2);
        let h = WeightedGraph::new(4, shuffled).unwrap();
        assert_eq!(g, h);
        assert_eq!(
            effective_resistances(&g).unwrap(),
            effective_resistances(&h).unwrap()
        );
    }

    #[test]
    fn sandwich_check_rejects_mismatched_and_disconnected() {
        let g = path(4).unwrap();
        let h = path(5).unwrap();
        assert!(matches!(
            sandwich_check(&g, &h, 1.0, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        let disc = WeightedGraph::new(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(sandwich_check(&g, &disc, 1.0, 1.0).is_err());
    }

    #[test]
    fn oracle_limit_is_enforced() {
        std::env::remove_var("SDDKIT_ORACLE_LIMIT");
        let g = path(401).unwrap();
        assert!(matches!(
            dense_pseudoinverse(&g),
            Err(Error::OracleLimit { .. })
        ));
    }
}

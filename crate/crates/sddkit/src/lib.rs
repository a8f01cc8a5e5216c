//! Solver toolkit for symmetric diagonally dominant (SDD) linear systems.
//!
//! The pipeline combines three combinatorial ingredients into a recursive
//! preconditioned solver:
//!
//! 1. [`lowstretch`] builds a spanning tree of controlled total stretch and
//!    computes the exact stretch of every edge with an offline LCA pass.
//! 2. [`sparsify`] oversamples edges proportionally to their stretch over a
//!    scaled tree, producing an incremental sparsifier: a graph with the tree
//!    plus a small number of sampled off-tree edges.
//! 3. [`elimination`] removes degree-1 and degree-2 vertices exactly via a
//!    recorded partial Cholesky factor with O(n) substitution.
//!
//! [`chain`] alternates sparsification and elimination into a hierarchy of
//! progressively smaller graphs, and [`solver`] runs preconditioned Chebyshev
//! iteration recursively over that hierarchy. General SDD matrices are reduced
//! to graph Laplacians by a double-cover construction in [`sdd`].
//!
//! Everything spectral is cross-checkable at small sizes against the dense
//! brute-force routines in [`oracle`]: Moore-Penrose pseudo-inverses,
//! effective resistances, the edge-space projection matrix, and generalized
//! eigenvalue bounds.
//!
//! ```
//! use sddkit::graph::grid2d;
//! use sddkit::solver::{solve_laplacian, SolveConfig};
//!
//! let g = grid2d(20, 20)?;
//! let mut b = vec![0.0; g.n()];
//! b[0] = 1.0;
//! b[g.n() - 1] = -1.0;
//! let (x, report) = solve_laplacian(&g, &b, 1e-8, 0.1, &SolveConfig::default())?;
//! assert!(report.converged);
//! assert_eq!(x.len(), g.n());
//! # Ok::<(), sddkit::Error>(())
//! ```

pub mod chain;
pub mod elimination;
pub mod error;
pub mod graph;
pub mod io;
pub mod lowstretch;
pub mod oracle;
pub mod rng;
pub mod sdd;
pub mod solver;
pub mod sparsify;

#[cfg(test)]
mod test_support;

pub use error::{Error, Result};
pub use graph::WeightedGraph;
pub use rng::RngState;
pub use sdd::{sdd_to_laplacian, ReductionMap, SddMatrix};

//! Helpers shared by the integration suites.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sddkit::sdd::SddMatrix;
use sddkit::WeightedGraph;

pub fn rel_err(x: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = x
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// Torus grid: like grid2d but with wraparound rows and columns.
pub fn torus(rows: usize, cols: usize) -> WeightedGraph {
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            edges.push((id(r, c), id(r, (c + 1) % cols), 1.0));
            edges.push((id(r, c), id((r + 1) % rows, c), 1.0));
        }
    }
    WeightedGraph::new(rows * cols, edges).unwrap()
}

/// Random SDD matrix with connected support and a random right-hand side.
/// Row 0 always gets strictly positive excess, so the matrix is
/// nonsingular.
pub fn random_sdd(n: usize, seed: u64, mixed_signs: bool) -> (SddMatrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    let mut present = std::collections::HashSet::new();
    let mut offsum = vec![0.0; n];
    let push = |entries: &mut Vec<(usize, usize, f64)>,
                offsum: &mut Vec<f64>,
                rng: &mut ChaCha8Rng,
                i: usize,
                j: usize| {
        let mag = rng.gen_range(0.5..2.0);
        let v = if mixed_signs && rng.gen_bool(0.5) { mag } else { -mag };
        entries.push((i, j, v));
        offsum[i] += mag;
        offsum[j] += mag;
    };
    for j in 1..n {
        let i = rng.gen_range(0..j);
        present.insert((i, j));
        push(&mut entries, &mut offsum, &mut rng, i, j);
    }
    for _ in 0..n {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            continue;
        }
        let key = (i.min(j), i.max(j));
        if present.insert(key) {
            push(&mut entries, &mut offsum, &mut rng, key.0, key.1);
        }
    }
    for i in 0..n {
        let excess = if i == 0 {
            1.0
        } else if rng.gen_bool(0.3) {
            rng.gen_range(0.0..1.0)
        } else {
            0.0
        };
        entries.push((i, i, offsum[i] + excess));
    }
    let a = SddMatrix::from_entries(n, entries).unwrap();
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (a, b)
}

/// Dense LU solve, the independent reference for nonsingular SDD systems.
pub fn dense_solve(a: &SddMatrix, b: &[f64]) -> Vec<f64> {
    let n = a.n();
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = a.diag()[i];
    }
    for &(i, j, v) in a.off_diagonals() {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = m.lu().solve(&rhs).expect("test matrices are nonsingular");
    x.iter().copied().collect()
}

/// Deterministic mean-zero pseudo-random vector.
pub fn seeded_rhs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    sddkit::graph::project_mean(&mut b);
    b
}

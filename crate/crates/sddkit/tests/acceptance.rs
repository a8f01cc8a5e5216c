//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured values (run with `-- --nocapture` to see them).

mod common;

use std::sync::Mutex;
use std::time::Instant;

/// The compute-heavy criteria serialize among themselves so the two
/// wall-clock measurements (C7, C8) stay free of CPU contention.
static HEAVY: Mutex<()> = Mutex::new(());

fn heavy_guard() -> std::sync::MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

use common::{dense_solve, random_sdd, rel_err, seeded_rhs, torus};
use sddkit::chain::{build_chain, ChainConfig};
use sddkit::elimination::greedy_elimination;
use sddkit::graph::{self, complete, grid2d, project_mean, random, WeightedGraph};
use sddkit::lowstretch;
use sddkit::oracle;
use sddkit::solver::{self, solve, solve_laplacian, ChebyshevParams, SolveConfig};
use sddkit::sparsify::{incremental_sparsify, oversample_check, SparsifyOptions};
use sddkit::RngState;

fn report(name: &str, detail: &str, started: Instant, budget_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("{name} PASS ({detail}; {elapsed:.1}s of {budget_s:.0}s budget)");
    assert!(
        elapsed < budget_s,
        "{name} exceeded its runtime budget: {elapsed:.1}s >= {budget_s}s"
    );
}

/// 25 random connected graphs, n <= 100.
fn corpus() -> Vec<WeightedGraph> {
    (0..25u64)
        .map(|i| {
            let n = 8 + (i as usize * 89) % 93;
            let extra = (i as usize * 13) % (n / 2 + 2);
            let m = (n - 1 + extra).min(n * (n - 1) / 2).min(250);
            random(n, m, 1000 + i).unwrap()
        })
        .collect()
}

#[test]
fn c01_projection_identities() {
    let started = Instant::now();
    let mut worst_idem = 0.0f64;
    let mut worst_trace = 0.0f64;
    let mut worst_diag = 0.0f64;
    for g in corpus() {
        let pi = oracle::projection_matrix(&g).unwrap();
        let idem = pi.matmul(&pi).sub(&pi).sym_norm2();
        let trace_err = (pi.trace() - (g.n() as f64 - 1.0)).abs();
        let resist = oracle::effective_resistances(&g).unwrap();
        let diag_err = g
            .edges()
            .iter()
            .enumerate()
            .map(|(id, e)| (pi[(id, id)] - e.w * resist[id]).abs())
            .fold(0.0f64, f64::max);
        assert!(idem <= 1e-8, "||Pi^2 - Pi|| = {idem:.3e}");
        assert!(trace_err <= 1e-8, "trace error {trace_err:.3e}");
        assert!(diag_err <= 1e-8, "diag error {diag_err:.3e}");
        worst_idem = worst_idem.max(idem);
        worst_trace = worst_trace.max(trace_err);
        worst_diag = worst_diag.max(diag_err);
    }
    report(
        "C1",
        &format!(
            "25 graphs; worst ||Pi^2-Pi|| {worst_idem:.1e}, trace err {worst_trace:.1e}, \
             diag err {worst_diag:.1e}"
        ),
        started,
        10.0,
    );
}

#[test]
fn c02_resistance_identity() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for g in corpus() {
        let resist = oracle::effective_resistances(&g).unwrap();
        let total: f64 = g
            .edges()
            .iter()
            .zip(&resist)
            .map(|(e, r)| e.w * r)
            .sum();
        let err = (total - (g.n() as f64 - 1.0)).abs();
        assert!(err <= 1e-8, "sum w_e R_e err {err:.3e} on n={}", g.n());
        worst = worst.max(err);
    }
    report("C2", &format!("25 graphs; worst error {worst:.1e}"), started, 5.0);
}

#[test]
fn c03_oversampling_theorem() {
    let started = Instant::now();
    let families: Vec<(&str, WeightedGraph)> = vec![
        ("complete(50)", complete(50).unwrap()),
        ("torus(5,10)", torus(5, 10)),
        ("random(50,300)", random(50, 300, 11).unwrap()),
        ("random(50,200)", random(50, 200, 15).unwrap()),
        ("random(50,150)", random(50, 150, 12).unwrap()),
    ];
    let mut detail = Vec::new();
    for (name, g) in &families {
        let resist = oracle::effective_resistances(g).unwrap();
        let p_prime: Vec<f64> = g
            .edges()
            .iter()
            .zip(&resist)
            .map(|(e, r)| e.w * r)
            .collect();
        let frac = oversample_check(g, &p_prime, 0.1, 100, &RngState::new(271)).unwrap();
        assert!(
            frac >= 0.9,
            "{name}: sandwich held in only {:.0} of 100 trials",
            frac * 100.0
        );
        detail.push(format!("{name} {:.0}%", frac * 100.0));
    }
    report("C3", &detail.join(", "), started, 120.0);
}

#[test]
fn c04_incremental_sparsifier_quality() {
    let _guard = heavy_guard();
    let started = Instant::now();
    let cases: Vec<(&str, WeightedGraph)> = vec![
        ("grid2d(12,12)", grid2d(12, 12).unwrap()),
        ("random(150,600)", random(150, 600, 21).unwrap()),
    ];
    let mut detail = Vec::new();
    for (name, g) in &cases {
        for kappa in [8.0, 20.0] {
            let mut sandwich_ok = 0usize;
            let mut chernoff_ok = 0usize;
            for seed in 0..100u64 {
                let mut rng = RngState::new(40_000 + seed);
                let (h, stats) =
                    incremental_sparsify(g, kappa, 0.1, &mut rng, &SparsifyOptions::default())
                        .unwrap();
                let measured = oracle::condition_number(&h, g).unwrap();
                if measured <= 3.0 * kappa {
                    sandwich_ok += 1;
                }
                let expected = stats.q as f64 * stats.t_prime / stats.t;
                if (stats.non_tree_picks as f64) <= 3.0 * expected {
                    chernoff_ok += 1;
                }
            }
            assert!(
                sandwich_ok >= 90,
                "{name} kappa={kappa}: kappa(G,H) <= 3k in only {sandwich_ok}/100 seeds"
            );
            assert!(
                chernoff_ok >= 99,
                "{name} kappa={kappa}: non-tree count bound in only {chernoff_ok}/100 seeds"
            );
            detail.push(format!("{name} k={kappa}: {sandwich_ok}/{chernoff_ok}"));
        }
    }
    report("C4", &detail.join(", "), started, 180.0);
}

#[test]
fn c05_elimination_exactness() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..50u64 {
        let n = 20 + (i as usize * 31) % 181;
        let extra = (i as usize * 7) % (n / 2 + 2);
        let m = (n - 1 + extra).min(n * (n - 1) / 2);
        let g = random(n, m, 2000 + i).unwrap();
        let (reduced, factor) = greedy_elimination(&g).unwrap();

        let j = g.m() + 1 - g.n();
        if j >= 2 {
            assert!(reduced.n() <= 2 * j - 2, "n={n}: {} > 2j-2", reduced.n());
            assert!(reduced.m() <= 3 * j - 3, "n={n}: {} > 3j-3", reduced.m());
        }

        let mut c = seeded_rhs(g.n(), 3000 + i);
        project_mean(&mut c);
        let (c_top, c_bottom) = factor.forward(&c).unwrap();
        let x_bottom = if reduced.n() > 0 {
            let pinv = oracle::dense_pseudoinverse(&reduced).unwrap();
            oracle::pinv_solve(&pinv, &c_bottom)
        } else {
            vec![]
        };
        let mut x = factor.backward(&c_top, &x_bottom).unwrap();
        project_mean(&mut x);
        let pinv = oracle::dense_pseudoinverse(&g).unwrap();
        let want = oracle::pinv_solve(&pinv, &c);
        let err = rel_err(&x, &want);
        assert!(err <= 1e-10, "seed {i}: round-trip error {err:.3e}");
        worst = worst.max(err);
    }
    report("C5", &format!("50 graphs; worst round-trip {worst:.1e}"), started, 30.0);
}

#[test]
fn c06_chebyshev_bound() {
    let started = Instant::now();
    let n = 50;
    let g = graph::cycle(n).unwrap();
    let h = WeightedGraph::new(n, (1..n).map(|i| (i - 1, i, 1.0))).unwrap();
    let pair = oracle::sandwich_check(&g, &h, 0.0, f64::INFINITY).unwrap();
    let (lo, hi) = (pair.lambda_lo, pair.lambda_hi);
    let q = {
        let root = (hi / lo).sqrt();
        (root - 1.0) / (root + 1.0)
    };
    let b = seeded_rhs(n, 77);
    let pinv_g = oracle::dense_pseudoinverse(&g).unwrap();
    let x_star = oracle::pinv_solve(&pinv_g, &b);
    let anorm = |v: &[f64]| g.quadratic_form(v).max(0.0).sqrt();
    let e0 = anorm(&x_star);
    let pinv_h = oracle::dense_pseudoinverse(&h).unwrap();

    let params = ChebyshevParams::new(lo, hi, n).unwrap();
    let mut errors = Vec::new();
    let _ = solver::p_chebyshev_monitored(
        |v| g.laplacian_apply(v),
        &b,
        &params,
        |r| Ok(oracle::pinv_solve(&pinv_h, r)),
        |_, x, _| {
            let diff: Vec<f64> = x.iter().zip(&x_star).map(|(a, b)| a - b).collect();
            errors.push(anorm(&diff));
            true
        },
    )
    .unwrap();
    let mut worst_margin = f64::INFINITY;
    for (i, err) in errors.iter().enumerate() {
        let t = i + 1;
        let bound = 2.0 * q.powi(t as i32) * e0;
        assert!(*err <= bound * (1.0 + 1e-9), "t={t}: {err:.3e} > {bound:.3e}");
        worst_margin = worst_margin.min(bound / err.max(1e-300));
    }

    // exact preconditioner: one step to machine precision
    let exact = ChebyshevParams::new(1.0, 1.0, 1).unwrap();
    let x1 = solver::p_chebyshev(
        |v| g.laplacian_apply(v),
        &b,
        &exact,
        |r| Ok(oracle::pinv_solve(&pinv_g, r)),
    )
    .unwrap();
    let one_step = rel_err(&x1, &x_star);
    assert!(one_step <= 1e-12, "exact preconditioner error {one_step:.3e}");

    report(
        "C6",
        &format!(
            "bound held for t=1..{n} (tightest margin {worst_margin:.2}x); \
             exact-preconditioner error {one_step:.1e}"
        ),
        started,
        10.0,
    );
}

#[test]
fn c07_end_to_end_accuracy() {
    let _guard = heavy_guard();
    let started = Instant::now();

    // oracle-checkable case: true A-norm error
    let g = grid2d(20, 20).unwrap();
    let b = seeded_rhs(g.n(), 4242);
    let cfg = SolveConfig {
        seed: 7,
        ..SolveConfig::default()
    };
    let (_, rep) = solve_laplacian(&g, &b, 1e-8, 0.1, &cfg).unwrap();
    assert!(rep.converged, "grid2d(20,20) did not converge");
    let anorm = rep.anorm_error.expect("n=400 is oracle-checkable");
    assert!(anorm <= 1e-8, "A-norm error {anorm:.3e} > 1e-8");

    // larger case: residual target and wall clock
    let big = grid2d(100, 100).unwrap();
    let b_big = seeded_rhs(big.n(), 4243);
    let big_cfg = SolveConfig {
        seed: 7,
        oracle_limit: Some(0),
        ..SolveConfig::default()
    };
    let solve_started = Instant::now();
    let (_, rep_big) = solve_laplacian(&big, &b_big, 1e-6, 0.1, &big_cfg).unwrap();
    let wall = solve_started.elapsed().as_secs_f64();
    assert!(
        rep_big.relative_residual <= 1e-6,
        "grid2d(100,100) residual {:.3e}",
        rep_big.relative_residual
    );
    assert!(wall < 30.0, "grid2d(100,100) took {wall:.1}s");

    report(
        "C7",
        &format!(
            "grid2d(20,20) A-norm error {anorm:.1e}; grid2d(100,100) residual {:.1e} in {wall:.1}s",
            rep_big.relative_residual
        ),
        started,
        60.0,
    );
}

#[test]
fn c08_scaling_probe() {
    let _guard = heavy_guard();
    let started = Instant::now();
    // grid edge counts near 2e3, 2e4, 2e5, at one fixed practical kappa
    let sizes = [33usize, 101, 317];
    let cfg = SolveConfig {
        seed: 5,
        oracle_limit: Some(0),
        chain: ChainConfig {
            kappa: 40.0,
            ..ChainConfig::default()
        },
        ..SolveConfig::default()
    };
    let mut pts = Vec::new();
    let mut detail = Vec::new();
    for k in sizes {
        let g = grid2d(k, k).unwrap();
        let b = seeded_rhs(g.n(), 999);
        // best of two runs damps timer noise
        let mut best = f64::INFINITY;
        let mut iterations = 0;
        for _ in 0..2 {
            let (_, rep) = solve_laplacian(&g, &b, 1e-6, 0.1, &cfg).unwrap();
            assert!(
                rep.relative_residual <= 1e-6,
                "grid {k}: residual {:.2e}",
                rep.relative_residual
            );
            best = best.min(rep.wallclock_ms.solve_ms);
            iterations = rep.iterations;
        }
        detail.push(format!("m={} {:.0}ms/{}it", g.m(), best, iterations));
        pts.push(((g.m() as f64).ln(), best.max(0.1).ln()));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if slope > 1.3 {
        println!("C8 WARNING: log-log slope {slope:.3} above the 1.3 soft threshold");
    }
    assert!(slope <= 1.4, "solve-time scaling slope {slope:.3} > 1.4");
    report(
        "C8",
        &format!("slope {slope:.2} ({})", detail.join(", ")),
        started,
        300.0,
    );
}

#[test]
fn c09_chain_success_probability() {
    let _guard = heavy_guard();
    let started = Instant::now();
    let g = grid2d(30, 30).unwrap();
    let cfg = ChainConfig::default();
    let mut clean = 0usize;
    for seed in 0..100u64 {
        let chain = build_chain(&g, 0.25, &cfg, &RngState::new(7000 + seed)).unwrap();
        if chain.total_escalations() == 0 {
            clean += 1;
        }
    }
    assert!(clean >= 75, "only {clean}/100 builds avoided escalation");
    report("C9", &format!("{clean}/100 builds without escalation"), started, 300.0);
}

#[test]
fn c10_double_cover_round_trip() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..50u64 {
        let n = 10 + (i as usize * 17) % 41;
        let (a, b) = random_sdd(n, 5000 + i, true);
        assert!(
            a.off_diagonals().iter().any(|&(_, _, v)| v > 0.0),
            "seed {i}: no positive off-diagonals"
        );
        let want = dense_solve(&a, &b);
        let cfg = SolveConfig {
            seed: 6000 + i,
            ..SolveConfig::default()
        };
        let (x, rep) = solve(&a, &b, 1e-9, 0.1, &cfg).unwrap();
        assert!(rep.converged, "seed {i} did not converge");
        let err = rel_err(&x, &want);
        assert!(err <= 1e-8, "seed {i}: solve vs dense error {err:.3e}");
        worst = worst.max(err);
    }
    report("C10", &format!("50 systems; worst error {worst:.1e}"), started, 30.0);
}

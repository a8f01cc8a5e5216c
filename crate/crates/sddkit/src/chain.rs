//! Preconditioner chains: alternating sparsification and elimination.
//!
//! Starting from `A_1 = A`, each level builds `B_i` by incremental
//! sparsification of `A_i` and `A_{i+1}` by greedy elimination of `B_i`,
//! until the edge count falls under the direct-solve threshold; the
//! terminal graph is factorized densely (pseudo-inverse on the mean-zero
//! subspace). A level is accepted when the edge reduction satisfies
//! `m_i / m_{i+1} >= c_r * sqrt(3 kappa_i)`; failures retry with fresh
//! randomness and eventually escalate `kappa`.

use serde::Serialize;

use crate::elimination::{greedy_elimination, EliminationFactor};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::oracle::{self, DenseMatrix};
use crate::rng::RngState;
use crate::sparsify::{incremental_sparsify, SampleMode, SparsifyOptions, DEFAULT_CS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaMode {
    /// `kappa_i = c_kappa * (log2 n_i)^4 * max(1, ln(1/p))`, clamped below
    /// the level's edge count.
    Theory,
    /// Fixed `kappa` from the configuration.
    Practical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleBudget {
    /// Draw the full theoretical sample count.
    SpecFormula,
    /// Cap expected non-tree picks so the accepted reduction ratio clears
    /// `c_r * sqrt(3 kappa)` with margin. Default; at practical sizes the
    /// theoretical count saturates every edge and no reduction happens.
    Auto,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainConfig {
    pub kappa: f64,
    pub kappa_mode: KappaMode,
    pub c_kappa: f64,
    pub c_r: f64,
    pub c_s: f64,
    pub direct_threshold: usize,
    pub max_retries: usize,
    pub max_escalations: usize,
    pub kappa_growth: f64,
    pub sample_budget: SampleBudget,
    /// Safety factor between the sampling budget and the reduction target.
    pub budget_margin: f64,
    pub sample_mode: SampleMode,
    /// Safety factor on the estimated spectral upper bound of each level's
    /// preconditioned operator.
    pub window_margin: f64,
    /// Spike guard passed to budgeted sampling (see
    /// [`crate::sparsify::SparsifyOptions::spike_guard`]).
    pub spike_guard: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            kappa: 20.0,
            kappa_mode: KappaMode::Practical,
            c_kappa: 1.0,
            c_r: 1.0,
            c_s: DEFAULT_CS,
            direct_threshold: 64,
            max_retries: 3,
            max_escalations: 4,
            kappa_growth: 2.0,
            sample_budget: SampleBudget::Auto,
            budget_margin: 1.3,
            sample_mode: SampleMode::KeepTree,
            window_margin: 1.25,
            spike_guard: 4.0,
        }
    }
}

impl ChainConfig {
    fn validate(&self) -> Result<()> {
        if self.kappa < 1.0 || !self.kappa.is_finite() {
            return Err(Error::param("kappa", "must be >= 1"));
        }
        if self.direct_threshold == 0 {
            return Err(Error::param("direct_threshold", "must be >= 1"));
        }
        if self.kappa_growth <= 1.0 {
            return Err(Error::param("kappa_growth", "must exceed 1"));
        }
        if self.budget_margin < 1.0 {
            return Err(Error::param("budget_margin", "must be >= 1"));
        }
        if self.c_r <= 0.0 {
            return Err(Error::param("c_r", "must be positive"));
        }
        Ok(())
    }

    fn level_kappa(&self, n_i: usize, m_i: usize, p: f64) -> f64 {
        let want = match self.kappa_mode {
            KappaMode::Practical => self.kappa,
            KappaMode::Theory => {
                let log_n = (n_i.max(2) as f64).log2();
                self.c_kappa * log_n.powi(4) * (1.0f64 / p).ln().max(1.0)
            }
        };
        // the sparsifier requires kappa < m
        want.min(m_i as f64 - 1.0).max(1.0)
    }
}

/// Per-level build statistics, serialized into solve reports.
#[derive(Debug, Clone, Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub n: usize,
    pub m: usize,
    pub kappa: f64,
    pub xi: f64,
    pub seed: u64,
    /// Theoretical draw count of the sampling step.
    pub q: u64,
    /// Draws actually taken.
    pub q_drawn: u64,
    pub t: f64,
    pub t_prime: f64,
    pub non_tree_picks: u64,
    pub distinct_non_tree: usize,
    pub tree_total_stretch: f64,
    pub b_edges: usize,
    pub next_n: usize,
    pub next_m: usize,
    pub ratio: f64,
    pub required_ratio: f64,
    pub retries: usize,
    pub escalations: usize,
    pub spectrum_factor: f64,
    pub floor_factor: f64,
}

/// One level of the chain: `A_i`, its sparsifier `B_i`, and the recorded
/// elimination factor with `factor(B_i) = A_{i+1}`.
#[derive(Debug, Clone)]
pub struct ChainLevel {
    pub a: WeightedGraph,
    pub b: WeightedGraph,
    pub factor: EliminationFactor,
    pub kappa: f64,
    /// Measured excess of the preconditioned spectrum's top over the
    /// theorem's window (1 when sampling is uncapped).
    pub spectrum_factor: f64,
    /// Measured shortfall of the preconditioned spectrum's bottom below
    /// the theorem's window (1 when sampling is uncapped).
    pub floor_factor: f64,
    pub stats: LevelStats,
}

impl ChainLevel {
    /// Spectral bound for the pair: `A_i ⪯ B_i ⪯ 3 kappa A_i`.
    pub fn kappa_bound(&self) -> f64 {
        3.0 * self.kappa
    }

    /// Effective condition bound driving the Chebyshev window's top and
    /// the inner iteration count at this level.
    pub fn effective_bound(&self) -> f64 {
        self.kappa_bound() * self.spectrum_factor
    }

    /// Effective condition number of the calibrated window, governing the
    /// convergence rate and the outer iteration cap.
    pub fn effective_kappa(&self) -> f64 {
        self.effective_bound() / self.floor_factor
    }
}


/// Terminal direct solver: dense pseudo-inverse of the last graph.
#[derive(Debug, Clone)]
pub struct Terminal {
    graph: WeightedGraph,
    pinv: DenseMatrix,
}

impl Terminal {
    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    /// Exact solve on the mean-zero subspace.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        oracle::pinv_solve(&self.pinv, b)
    }
}

#[derive(Debug, Clone)]
pub struct PreconditionerChain {
    pub levels: Vec<ChainLevel>,
    pub terminal: Terminal,
    pub c_r: f64,
    pub failure_probability: f64,
    pub seed: u64,
}

impl PreconditionerChain {
    /// Number of graphs in the chain, counting the terminal.
    pub fn depth(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn level_stats(&self) -> Vec<&LevelStats> {
        self.levels.iter().map(|l| &l.stats).collect()
    }

    /// Total retry events over all levels.
    pub fn total_retries(&self) -> usize {
        self.levels.iter().map(|l| l.stats.retries).sum()
    }

    /// Total kappa escalations over all levels.
    pub fn total_escalations(&self) -> usize {
        self.levels.iter().map(|l| l.stats.escalations).sum()
    }
}

/// Builds a preconditioner chain for a connected graph with whole-chain
/// failure probability `p`.
pub fn build_chain(
    a: &WeightedGraph,
    p: f64,
    cfg: &ChainConfig,
    rng: &RngState,
) -> Result<PreconditionerChain> {
    cfg.validate()?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", format!("{p} must lie in (0, 1)")));
    }
    a.require_connected()?;

    let n0 = a.n();
    let log_n = (n0.max(2) as f64).log2().max(1.0);
    let log_log_n = log_n.log2().max(1.0);

    let mut levels: Vec<ChainLevel> = Vec::new();
    let mut current = a.clone();
    while current.m() > cfg.direct_threshold {
        let level_idx = levels.len();
        let n_i = current.n();
        let m_i = current.m();
        // failure budget split over levels, as in the chain analysis:
        // p/(2 log n) while the level is large, p/(2 log log n) after
        let branch = if m_i as f64 > log_n { log_n } else { log_log_n };
        let xi = (p / (2.0 * branch)).max(2.0 / n_i as f64).min(0.5);

        let mut kappa = cfg.level_kappa(n_i, m_i, p);
        let mut retries = 0usize;
        let mut escalations = 0usize;
        let (b, next, factor, stats) = 'search: loop {
            for attempt in 0..cfg.max_retries.max(1) {
                let required_ratio = cfg.c_r * (3.0 * kappa).sqrt();
                let budget = match cfg.sample_budget {
                    SampleBudget::SpecFormula => None,
                    SampleBudget::Auto => Some(
                        (m_i as f64 / (3.0 * required_ratio.max(1.0) * cfg.budget_margin))
                            .max(4.0),
                    ),
                };
                let opts = SparsifyOptions {
                    mode: cfg.sample_mode,
                    c_s: cfg.c_s,
                    non_tree_budget: budget,
                    spike_guard: budget.is_some().then_some(cfg.spike_guard),
                };
                let mut level_rng =
                    rng.derive(&[level_idx as u64, escalations as u64, attempt as u64]);
                let (b, sstats) = incremental_sparsify(&current, kappa, xi, &mut level_rng, &opts)?;
                debug_assert!(b.is_connected() || cfg.sample_mode == SampleMode::Literal);
                let (next, factor) = greedy_elimination(&b)?;
                let ratio = if next.m() == 0 {
                    f64::INFINITY
                } else {
                    m_i as f64 / next.m() as f64
                };
                if ratio >= required_ratio && next.m() < m_i {
                    let stats = LevelStats {
                        level: level_idx,
                        n: n_i,
                        m: m_i,
                        kappa,
                        xi,
                        seed: sstats.seed,
                        q: sstats.q,
                        q_drawn: sstats.q_drawn,
                        t: sstats.t,
                        t_prime: sstats.t_prime,
                        non_tree_picks: sstats.non_tree_picks,
                        distinct_non_tree: sstats.distinct_non_tree,
                        tree_total_stretch: sstats.tree_total_stretch,
                        b_edges: b.m(),
                        next_n: next.n(),
                        next_m: next.m(),
                        ratio,
                        required_ratio,
                        retries,
                        escalations,
                        spectrum_factor: 1.0,
                        floor_factor: 1.0,
                    };
                    break 'search (b, next, factor, stats);
                }
                retries += 1;
                log::debug!(
                    "chain level {level_idx}: ratio {ratio:.2} < {required_ratio:.2} \
                     (attempt {attempt}, kappa {kappa})"
                );
            }
            escalations += 1;
            if escalations > cfg.max_escalations {
                return Err(Error::RetryBudgetExhausted {
                    level: level_idx,
                    attempts: retries,
                });
            }
            kappa = (kappa * cfg.kappa_growth).min(m_i as f64 - 1.0).max(1.0);
        };
        levels.push(ChainLevel {
            a: current,
            b,
            factor,
            kappa: stats.kappa,
            spectrum_factor: stats.spectrum_factor,
            floor_factor: stats.floor_factor,
            stats,
        });
        current = next;
    }

    let pinv = oracle::dense_pseudoinverse_unbounded(&current);
    let mut chain = PreconditionerChain {
        levels,
        terminal: Terminal {
            graph: current,
            pinv,
        },
        c_r: cfg.c_r,
        failure_probability: p,
        seed: rng.seed(),
    };
    // With capped sampling the two-sided sandwich is no longer a theorem;
    // measure the top of each level's preconditioned spectrum so the
    // Chebyshev window stays valid. Uncapped sampling keeps the paper's
    // fixed window.
    if cfg.sample_budget == SampleBudget::Auto {
        crate::solver::calibrate_windows(&mut chain, cfg.window_margin, rng)?;
    }
    Ok(chain)
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelCheck {
    pub level: usize,
    pub ratio: f64,
    pub required_ratio: f64,
    pub ratio_ok: bool,
    pub factor_ok: bool,
    /// Generalized eigenvalue extremes of `(B_i, A_i)` when the level is
    /// small enough for the dense oracle.
    pub sandwich: Option<(bool, f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainValidation {
    pub levels: Vec<LevelCheck>,
    pub terminal_edges: usize,
    pub edge_counts_strictly_decrease: bool,
    pub ok: bool,
}

/// Re-checks a built chain: reduction ratios, factor consistency (the
/// recorded factor reproduces the next level), and for oracle-sized levels
/// the spectral sandwich `A_i ⪯ B_i ⪯ 3 kappa_i A_i`.
pub fn validate_chain(chain: &PreconditionerChain, oracle_limit: usize) -> ChainValidation {
    let mut checks = Vec::new();
    let mut all_ok = true;
    let mut decreasing = true;
    for (i, level) in chain.levels.iter().enumerate() {
        let next_m = chain
            .levels
            .get(i + 1)
            .map(|l| l.a.m())
            .unwrap_or(chain.terminal.graph.m());
        if next_m >= level.a.m() {
            decreasing = false;
        }
        let ratio = if next_m == 0 {
            f64::INFINITY
        } else {
            level.a.m() as f64 / next_m as f64
        };
        let required_ratio = chain.c_r * level.kappa_bound().sqrt();
        let ratio_ok = ratio >= required_ratio;

        let factor_ok = match greedy_elimination(&level.b) {
            Ok((reduced, factor)) => {
                let next = chain
                    .levels
                    .get(i + 1)
                    .map(|l| &l.a)
                    .unwrap_or(&chain.terminal.graph);
                reduced == *next && factor.steps() == level.factor.steps()
            }
            Err(_) => false,
        };

        let sandwich = if level.a.n() <= oracle_limit {
            match oracle::sandwich_check(&level.b, &level.a, 1.0, level.kappa_bound()) {
                Ok(rep) => Some((rep.ok, rep.lambda_lo, rep.lambda_hi)),
                Err(_) => Some((false, f64::NAN, f64::NAN)),
            }
        } else {
            None
        };

        let level_ok =
            ratio_ok && factor_ok && sandwich.map_or(true, |(ok, _, _)| ok);
        all_ok &= level_ok;
        checks.push(LevelCheck {
            level: i,
            ratio,
            required_ratio,
            ratio_ok,
            factor_ok,
            sandwich,
        });
    }
    all_ok &= decreasing;
    ChainValidation {
        levels: checks,
        terminal_edges: chain.terminal.graph.m(),
        edge_counts_strictly_decrease: decreasing,
        ok: all_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{grid2d, path, random};

    #[test]
    fn tree_input_gives_depth_one_chain() {
        let g = path(1000).unwrap();
        let chain = build_chain(&g, 0.1, &ChainConfig::default(), &RngState::new(1)).unwrap();
        assert_eq!(chain.levels.len(), 1);
        assert_eq!(chain.terminal.graph().n(), 1);
        assert_eq!(chain.terminal.graph().m(), 0);
        // B_1 = 2 kappa A_1 for a tree: all edges kept, scaled
        let level = &chain.levels[0];
        let scale = 2.0 * level.kappa;
        for (be, ae) in level.b.edges().iter().zip(level.a.edges()) {
            assert!((be.w - scale * ae.w).abs() < 1e-12);
        }
    }

    #[test]
    fn small_input_is_terminal_only() {
        let g = grid2d(3, 3).unwrap();
        let chain = build_chain(&g, 0.2, &ChainConfig::default(), &RngState::new(2)).unwrap();
        assert!(chain.levels.is_empty());
        assert_eq!(chain.terminal.graph().m(), g.m());
        // terminal solve is an exact pseudo-inverse solve
        let mut b = vec![0.0; g.n()];
        b[0] = 1.0;
        b[8] = -1.0;
        let x = chain.terminal.solve(&b);
        let r = g.laplacian_apply(&x).unwrap();
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-10);
        }
    }

    #[test]
    fn grid_chain_reduces_and_validates() {
        let g = grid2d(20, 20).unwrap();
        let chain = build_chain(&g, 0.1, &ChainConfig::default(), &RngState::new(3)).unwrap();
        assert!(!chain.levels.is_empty());
        let report = validate_chain(&chain, 0); // skip the dense sandwich here
        assert!(report.edge_counts_strictly_decrease);
        for check in &report.levels {
            assert!(check.ratio_ok, "level {}: {:?}", check.level, check);
            assert!(check.factor_ok, "level {}: factor", check.level);
        }
        assert!(chain.terminal.graph().m() <= 64);
    }

    #[test]
    fn grid40_levels_all_clear_the_reduction_ratio() {
        let g = grid2d(40, 40).unwrap();
        let cfg = ChainConfig::default();
        let chain = build_chain(&g, 0.1, &cfg, &RngState::new(17)).unwrap();
        let required = cfg.c_r * (3.0 * cfg.kappa).sqrt();
        for check in validate_chain(&chain, 0).levels {
            assert!(
                check.ratio >= required,
                "level {}: ratio {:.2} < {required:.2}",
                check.level,
                check.ratio
            );
        }
    }

    #[test]
    fn chain_is_deterministic_per_seed() {
        let g = random(150, 500, 6).unwrap();
        let a = build_chain(&g, 0.1, &ChainConfig::default(), &RngState::new(9)).unwrap();
        let b = build_chain(&g, 0.1, &ChainConfig::default(), &RngState::new(9)).unwrap();
        assert_eq!(a.levels.len(), b.levels.len());
        for (la, lb) in a.levels.iter().zip(&b.levels) {
            assert_eq!(la.b, lb.b);
            assert_eq!(la.stats.seed, lb.stats.seed);
        }
    }

    #[test]
    fn construction_work_is_dominated_by_level_one() {
        // sum of level edge counts stays within twice the first level
        let g = grid2d(25, 25).unwrap();
        let chain = build_chain(&g, 0.1, &ChainConfig::default(), &RngState::new(4)).unwrap();
        let total: usize = chain.levels.iter().map(|l| l.a.m()).sum::<usize>()
            + chain.terminal.graph().m();
        let first = chain.levels[0].a.m();
        let required = chain.c_r * (3.0 * chain.levels[0].kappa).sqrt();
        if required >= 2.0 {
            assert!(
                total <= 2 * first,
                "sum of m_i = {total} > 2 m_1 = {}",
                2 * first
            );
        }
    }

    #[test]
    fn hand_built_violation_fails_the_sandwich() {
        // B = A/2 violates A ⪯ B; the check reports lambda_lo = 0.5
        let g = grid2d(4, 4).unwrap();
        let chain = build_chain(&g, 0.1, &ChainConfig::default(), &RngState::new(5)).unwrap();
        assert!(chain.levels.is_empty(), "4x4 grid is terminal-sized");
        let (_, factor) = greedy_elimination(&g).unwrap();
        let fake = PreconditionerChain {
            levels: vec![ChainLevel {
                a: g.clone(),
                b: g.scaled(0.5),
                factor,
                kappa: 8.0,
                spectrum_factor: 1.0,
                floor_factor: 1.0,
                stats: LevelStats {
                    level: 0,
                    n: g.n(),
                    m: g.m(),
                    kappa: 8.0,
                    xi: 0.1,
                    seed: 0,
                    q: 0,
                    q_drawn: 0,
                    t: 0.0,
                    t_prime: 0.0,
                    non_tree_picks: 0,
                    distinct_non_tree: 0,
                    tree_total_stretch: 0.0,
                    b_edges: g.m(),
                    next_n: 0,
                    next_m: 0,
                    ratio: f64::INFINITY,
                    required_ratio: 0.0,
                    retries: 0,
                    escalations: 0,
                    spectrum_factor: 1.0,
                    floor_factor: 1.0,
                },
            }],
            terminal: Terminal {
                graph: g.clone(),
                pinv: oracle::dense_pseudoinverse_unbounded(&g),
            },
            c_r: 1.0,
            failure_probability: 0.1,
            seed: 0,
        };
        let report = validate_chain(&fake, 400);
        let (ok, lo, _) = report.levels[0].sandwich.unwrap();
        assert!(!ok);
        assert!((lo - 0.5).abs() < 1e-9);
        assert!(!report.ok);
    }

    #[test]
    fn saturated_sampling_exhausts_the_retry_budget() {
        // the full theoretical draw count keeps every edge at this size,
        // so no reduction ratio can be met and the level gives up
        let g = grid2d(12, 12).unwrap();
        let cfg = ChainConfig {
            sample_budget: SampleBudget::SpecFormula,
            max_retries: 1,
            max_escalations: 1,
            ..ChainConfig::default()
        };
        assert!(matches!(
            build_chain(&g, 0.1, &cfg, &RngState::new(0)),
            Err(Error::RetryBudgetExhausted { level: 0, .. })
        ));
    }

    #[test]
    fn theory_mode_clamps_kappa_below_the_edge_count() {
        let g = grid2d(15, 15).unwrap();
        let cfg = ChainConfig {
            kappa_mode: KappaMode::Theory,
            ..ChainConfig::default()
        };
        let chain = build_chain(&g, 0.1, &cfg, &RngState::new(1)).unwrap();
        for level in &chain.levels {
            // log2(225)^4 * ln(10) far exceeds m, so the clamp must bite
            assert!(level.kappa < level.stats.m as f64);
            assert!(level.kappa >= 1.0);
        }
        assert!(chain.terminal.graph().m() <= cfg.direct_threshold);
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = grid2d(10, 10).unwrap();
        assert!(build_chain(&g, 0.0, &ChainConfig::default(), &RngState::new(0)).is_err());
        assert!(build_chain(&g, 1.0, &ChainConfig::default(), &RngState::new(0)).is_err());
        let bad = ChainConfig {
            kappa: 0.5,
            ..ChainConfig::default()
        };
        assert!(build_chain(&g, 0.1, &bad, &RngState::new(0)).is_err());
    }
}

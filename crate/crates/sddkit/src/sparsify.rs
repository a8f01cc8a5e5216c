//! Oversampling sparsification over scaled low-stretch trees.
//!
//! [`sample`] draws edges with replacement from probabilities proportional
//! to caller-supplied weights `p'` and accumulates `w_e / (q p_e)` per pick,
//! so the output Laplacian equals the input in expectation. When every
//! `p'_e` dominates the edge's leverage `w_e R_e`, the two-sided bound
//! `G ⪯ 2G' ⪯ 3G` holds with probability `1 - ξ`.
//!
//! [`incremental_sparsify`] scales a low-stretch tree by `κ`, which divides
//! every non-tree stretch by `κ`, and samples against those reduced
//! leverages; the scaled tree keeps the graph connected while the sampled
//! non-tree edges carry the spectral content.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::lowstretch::{self, TreeMethod};
use crate::oracle;
pub use crate::rng::RngState;

/// Sample-size bookkeeping for one call to [`sample`].
#[derive(Debug, Clone, Serialize)]
pub struct SampleSpec {
    /// Total probability mass `t = Σ p'_e`.
    pub t: f64,
    /// Theoretical draw count `⌈C_s · t · ln t · ln(1/ξ)⌉`, at least 1.
    pub q: u64,
    pub xi: f64,
    pub c_s: f64,
}

impl SampleSpec {
    pub fn new(p_prime: &[f64], xi: f64, c_s: f64) -> Result<SampleSpec> {
        if !(xi > 0.0 && xi < 1.0) {
            return Err(Error::param("xi", format!("{xi} must lie in (0, 1)")));
        }
        if !(c_s.is_finite() && c_s > 0.0) {
            return Err(Error::param("c_s", format!("{c_s} must be positive")));
        }
        if p_prime.is_empty() {
            return Err(Error::param("p_prime", "no edges to sample"));
        }
        for (e, &p) in p_prime.iter().enumerate() {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::param(
                    "p_prime",
                    format!("entry {e} is {p}; all sampling weights must be positive"),
                ));
            }
        }
        let t: f64 = p_prime.iter().sum();
        let q = (c_s * t * t.ln() * (1.0 / xi).ln()).ceil().max(1.0);
        Ok(SampleSpec {
            t,
            q: q as u64,
            xi,
            c_s,
        })
    }

    /// Normalized pick probabilities `p_e = p'_e / t`.
    pub fn normalized(&self, p_prime: &[f64]) -> Vec<f64> {
        p_prime.iter().map(|&p| p / self.t).collect()
    }
}

pub const DEFAULT_CS: f64 = 4.0;

/// Accumulated weight of an edge picked `picks` times out of `q` draws:
/// each pick contributes `w / (q p)`.
pub(crate) fn picked_weight(w: f64, picks: u64, q: u64, p: f64) -> f64 {
    picks as f64 * w / (q as f64 * p)
}

/// Draws `q` edges with replacement from the distribution `p'_e / t` and
/// returns the reweighted union: each pick of edge e contributes
/// `w_e / (q p_e)`, repeated picks accumulate.
pub fn sample(
    g: &WeightedGraph,
    p_prime: &[f64],
    xi: f64,
    rng: &mut RngState,
) -> Result<WeightedGraph> {
    let (graph, _) = sample_with_options(g, p_prime, xi, rng, DEFAULT_CS, None, None, None)?;
    Ok(graph)
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleStats {
    pub spec: SampleSpec,
    /// Draws actually taken (equals `spec.q` unless a budget cap applies).
    pub q_drawn: u64,
    /// Draws that landed on tracked edges.
    pub tracked_picks: u64,
    /// Distinct tracked edges in the output.
    pub distinct_tracked: usize,
}

/// Full-control sampling core. `kept`, when given, marks edges that are
/// included deterministically at their input weight; draws landing on them
/// are discarded (their mass is already accounted for exactly).
/// `track` marks the edge class whose picks are counted in the stats
/// (defaults to the non-kept edges). `budget` caps the number of draws
/// below `spec.q`.
pub(crate) fn sample_with_options(
    g: &WeightedGraph,
    p_prime: &[f64],
    xi: f64,
    rng: &mut RngState,
    c_s: f64,
    kept: Option<&[bool]>,
    track: Option<&[bool]>,
    budget: Option<u64>,
) -> Result<(WeightedGraph, SampleStats)> {
    if p_prime.len() != g.m() {
        return Err(Error::DimensionMismatch {
            expected: g.m(),
            actual: p_prime.len(),
        });
    }
    let spec = SampleSpec::new(p_prime, xi, c_s)?;
    let q_drawn = budget.map_or(spec.q, |b| b.min(spec.q)).max(1);
    let p = spec.normalized(p_prime);

    // cumulative intervals on [0, 1]; a draw binary-searches its interval
    let mut cum = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &pe in &p {
        acc += pe;
        cum.push(acc);
    }
    let last = cum.len() - 1;
    cum[last] = 1.0;

    let mut counts = vec![0u64; g.m()];
    let mut tracked_picks = 0u64;
    let keep_flag = |e: usize| kept.map_or(false, |k| k[e]);
    let track_flag = |e: usize| track.map_or_else(|| !keep_flag(e), |t| t[e]);
    // nothing left to sample when every edge is deterministically kept
    let any_sampleable = (0..g.m()).any(|e| !keep_flag(e));
    if any_sampleable {
        for _ in 0..q_drawn {
            let u = rng.next_f64();
            let idx = cum.partition_point(|&c| c <= u).min(last);
            if track_flag(idx) {
                tracked_picks += 1;
            }
            if keep_flag(idx) {
                continue;
            }
            counts[idx] += 1;
        }
    }

    let mut edges = Vec::new();
    let mut distinct_tracked = 0usize;
    for (eid, e) in g.edges().iter().enumerate() {
        if keep_flag(eid) {
            edges.push((e.u, e.v, e.w));
        } else if counts[eid] > 0 {
            if track_flag(eid) {
                distinct_tracked += 1;
            }
            edges.push((e.u, e.v, picked_weight(e.w, counts[eid], q_drawn, p[eid])));
        }
    }
    let graph = WeightedGraph::new(g.n(), edges)?;
    Ok((
        graph,
        SampleStats {
            spec,
            q_drawn,
            tracked_picks,
            distinct_tracked,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMode {
    /// Sample every edge of the scaled graph, tree edges at `p' = 1`.
    Literal,
    /// Include the scaled tree deterministically; sample only non-tree
    /// edges. Guarantees a connected output.
    KeepTree,
}

#[derive(Debug, Clone)]
pub struct SparsifyOptions {
    pub mode: SampleMode,
    pub c_s: f64,
    /// Cap on expected non-tree picks; `None` means the full theoretical
    /// draw count. Used by the chain builder to steer reduction.
    pub non_tree_budget: Option<f64>,
    /// With a capped budget, raise small sampling probabilities so a
    /// single pick's reweighted edge stays within about
    /// `2 * spike_guard * kappa` times its original weight. Raising
    /// probabilities is always admissible for oversampling; this only
    /// spends part of the pick budget on low-stretch edges.
    pub spike_guard: Option<f64>,
}

impl Default for SparsifyOptions {
    fn default() -> Self {
        SparsifyOptions {
            mode: SampleMode::KeepTree,
            c_s: DEFAULT_CS,
            non_tree_budget: None,
            spike_guard: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SparsifyStats {
    pub mode: SampleMode,
    pub kappa: f64,
    pub xi: f64,
    pub seed: u64,
    /// Which input edges formed the spanning tree.
    #[serde(skip)]
    pub tree_mask: Vec<bool>,
    /// Total sampling mass `t = (n-1) + t'`.
    pub t: f64,
    /// Non-tree sampling mass `t' = Σ_{e∉T} stretch(e)/κ`.
    pub t_prime: f64,
    /// Theoretical draw count from the sample-size formula.
    pub q: u64,
    /// Draws actually taken.
    pub q_drawn: u64,
    /// Draws that landed on non-tree edges.
    pub non_tree_picks: u64,
    /// Distinct non-tree edges present in the output.
    pub distinct_non_tree: usize,
    pub tree_total_stretch: f64,
    pub tree_method: TreeMethod,
    pub output_edges: usize,
}

/// Builds an incremental sparsifier of `g`: a low-stretch tree scaled by
/// `kappa` plus sampled non-tree edges, all weights doubled on return.
///
/// Requires `1 <= kappa < m`, `xi ∈ (0, 1)` with `xi >= 1/n`, and a
/// connected input. The sampler receives `xi / 2`.
pub fn incremental_sparsify(
    g: &WeightedGraph,
    kappa: f64,
    xi: f64,
    rng: &mut RngState,
    opts: &SparsifyOptions,
) -> Result<(WeightedGraph, SparsifyStats)> {
    g.require_connected()?;
    let m = g.m() as f64;
    if !(kappa.is_finite() && (1.0..m).contains(&kappa)) {
        return Err(Error::param(
            "kappa",
            format!("{kappa} must satisfy 1 <= kappa < m = {m}"),
        ));
    }
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::param("xi", format!("{xi} must lie in (0, 1)")));
    }
    if xi * (g.n() as f64) < 1.0 {
        return Err(Error::param(
            "xi",
            format!("{xi} is below 1/n = {}; the failure bound needs xi = Ω(1/n)", 1.0 / g.n() as f64),
        ));
    }

    let (tree, info) = lowstretch::low_stretch_tree_with_info(g)?;
    let table = lowstretch::compute_stretch(g, &tree)?;
    let mut p_prime = lowstretch::scaled_probabilities(&table, kappa)?;
    let tree_mask = tree.edge_mask(g);
    let scaled = g.with_scaled_edges(&tree_mask, kappa);

    let non_tree_mass = |p: &[f64]| -> f64 {
        p.iter()
            .zip(&tree_mask)
            .filter(|(_, &t)| !t)
            .map(|(&v, _)| v)
            .sum()
    };

    if let (Some(c_spike), Some(picks)) = (opts.spike_guard, opts.non_tree_budget) {
        let n_nt = tree_mask.iter().filter(|&&t| !t).count() as f64;
        let t_raw = non_tree_mass(&p_prime);
        let denom = picks * c_spike * kappa / 2.0 - n_nt;
        if denom > 1.0 {
            let phi = (t_raw / denom).min(1.0);
            for (p, &is_tree) in p_prime.iter_mut().zip(&tree_mask) {
                if !is_tree && *p < phi {
                    *p = phi;
                }
            }
        }
    }
    let t_prime = non_tree_mass(&p_prime);

    let budget = opts.non_tree_budget.map(|picks| {
        let t = (g.n() as f64 - 1.0) + t_prime;
        if t_prime <= 0.0 {
            1
        } else {
            (picks * t / t_prime).ceil().max(1.0) as u64
        }
    });

    let kept = match opts.mode {
        SampleMode::Literal => None,
        SampleMode::KeepTree => Some(tree_mask.as_slice()),
    };
    let non_tree: Vec<bool> = tree_mask.iter().map(|&t| !t).collect();
    let seed = rng.seed();
    let (h, stats) = sample_with_options(
        &scaled,
        &p_prime,
        xi / 2.0,
        rng,
        opts.c_s,
        kept,
        Some(&non_tree),
        budget,
    )?;
    let doubled = h.scaled(2.0);

    Ok((
        doubled,
        SparsifyStats {
            mode: opts.mode,
            kappa,
            xi,
            seed,
            tree_mask,
            t: stats.spec.t,
            t_prime,
            q: stats.spec.q,
            q_drawn: stats.q_drawn,
            non_tree_picks: stats.tracked_picks,
            distinct_non_tree: stats.distinct_tracked,
            tree_total_stretch: info.total_stretch,
            tree_method: info.method,
            output_edges: h.m(),
        },
    ))
}

/// Empirically verifies the oversampling bound: runs `trials` independent
/// sampling rounds and reports the fraction for which `G ⪯ 2G' ⪯ 3G`
/// holds (generalized eigenvalues within `[1, 3]` up to 1e-9 slack).
///
/// The bound requires `p'_e >= w_e R_e`; for graphs small enough the
/// domination is verified against the dense oracle before sampling.
pub fn oversample_check(
    g: &WeightedGraph,
    p_prime: &[f64],
    xi: f64,
    trials: usize,
    rng: &RngState,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::param("trials", "need at least one trial"));
    }
    if g.n() <= 60 {
        let resistances = oracle::effective_resistances(g)?;
        for ((eid, e), r) in g.edges().iter().enumerate().zip(&resistances) {
            if p_prime[eid] < e.w * r - 1e-9 {
                return Err(Error::param(
                    "p_prime",
                    format!(
                        "entry {eid} is {} but the edge's leverage w_e R_e is {}",
                        p_prime[eid],
                        e.w * r
                    ),
                ));
            }
        }
    }
    let mut passes = 0usize;
    for trial in 0..trials {
        let mut trial_rng = rng.derive(&[0x5eed, trial as u64]);
        let h = sample(g, p_prime, xi, &mut trial_rng)?;
        let doubled = h.scaled(2.0);
        if !doubled.is_connected() {
            continue;
        }
        let report = oracle::sandwich_check(&doubled, g, 1.0, 3.0)?;
        if report.ok {
            passes += 1;
        }
    }
    Ok(passes as f64 / trials as f64)
}

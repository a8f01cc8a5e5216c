//! Command-line interface for the sddkit solver.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use sddkit::chain::{ChainConfig, KappaMode, SampleBudget};
use sddkit::graph::{self, Family, WeightedGraph};
use sddkit::lowstretch;
use sddkit::oracle;
use sddkit::solver::{solve, SolveConfig, SolveReport};
use sddkit::sparsify::{self, SampleMode, SparsifyOptions};
use sddkit::{io, RngState};

#[derive(Parser)]
#[command(
    name = "sddkit",
    about = "Solver for symmetric diagonally dominant linear systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an SDD system from a Matrix Market file.
    Solve(SolveArgs),
    /// Build an incremental sparsifier of a graph.
    Sparsify(SparsifyArgs),
    /// Emit per-edge stretch of a low-stretch spanning tree as JSON.
    Stretch(StretchArgs),
    /// Time chain construction and solves across problem sizes.
    Bench(BenchArgs),
    /// Run dense-oracle identity checks on a graph.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Matrix Market coordinate file (real symmetric).
    #[arg(long)]
    matrix: PathBuf,
    /// Right-hand side: a file of reals, or `random:SEED`.
    #[arg(long, default_value = "random:0")]
    rhs: String,
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    /// Chain failure probability.
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 20.0)]
    kappa: f64,
    /// Sampling mode inside chain levels.
    #[arg(long, value_parser = parse_mode, default_value = "keep-tree")]
    mode: SampleMode,
    /// Oversampling constant C_s.
    #[arg(long, default_value_t = sparsify::DEFAULT_CS)]
    cs: f64,
    /// Reduction constant c_r of the chain acceptance test.
    #[arg(long, default_value_t = 1.0)]
    cr: f64,
    /// Use the literal theoretical sample count in chain levels.
    #[arg(long)]
    strict_q: bool,
    /// Theory-mode kappa policy instead of the fixed practical value.
    #[arg(long)]
    theory_kappa: bool,
    /// Proceed on the largest component if the input is disconnected.
    #[arg(long)]
    largest_component: bool,
    /// Write the full JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SparsifyArgs {
    /// Graph edge-list file (`n m` header, then `u v w` lines).
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    kappa: f64,
    #[arg(long, default_value_t = 0.1)]
    xi: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_mode, default_value = "keep-tree")]
    mode: SampleMode,
    #[arg(long, default_value_t = sparsify::DEFAULT_CS)]
    cs: f64,
    /// Measure the condition number of (G, H) with the dense oracle
    /// (small graphs only).
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    largest_component: bool,
    /// Write the sparsifier edge list here (stdout otherwise, with the
    /// stats block moving to stderr).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StretchArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    largest_component: bool,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Graph family: path, cycle, grid2d, or random.
    #[arg(long, default_value = "grid2d")]
    family: String,
    /// Comma-separated target edge counts, e.g. `2e3,2e4,2e5`.
    #[arg(long)]
    sizes: String,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, default_value_t = 20.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Graph edge-list file; omit to use a generated family member.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value = "grid2d")]
    family: String,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    largest_component: bool,
}

fn parse_mode(s: &str) -> Result<SampleMode, String> {
    match s {
        "literal" => Ok(SampleMode::Literal),
        "keep-tree" => Ok(SampleMode::KeepTree),
        other => Err(format!("unknown mode {other:?}; expected literal|keep-tree")),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn load_graph(path: &PathBuf, use_largest: bool) -> Result<WeightedGraph> {
    let g = io::load_graph_text(path).with_context(|| format!("reading {}", path.display()))?;
    if !g.is_connected() {
        if use_largest {
            let (verts, sub) = g.largest_component();
            log::warn!(
                "input is disconnected; continuing on the largest component ({} of {} vertices)",
                verts.len(),
                g.n()
            );
            return Ok(sub);
        }
        bail!(
            "graph is disconnected (component sizes {:?}); pass --largest-component to split",
            g.component_sizes()
        );
    }
    Ok(g)
}

/// Exit code 2 flags a completed-but-unconverged solve.
fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Sparsify(args) => cmd_sparsify(args),
        Command::Stretch(args) => cmd_stretch(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

#[derive(Serialize)]
struct RunConfig {
    subcommand: &'static str,
    matrix: String,
    rhs: String,
    eps: f64,
    p: f64,
    kappa: f64,
    mode: SampleMode,
    cs: f64,
    cr: f64,
    strict_q: bool,
    theory_kappa: bool,
    seed: u64,
    oracle_limit: usize,
}

#[derive(Serialize)]
struct FullReport {
    config: RunConfig,
    #[serde(flatten)]
    solve: SolveReport,
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let a = io::load_matrix_market(&args.matrix)
        .with_context(|| format!("reading {}", args.matrix.display()))?;
    let seed = resolve_seed(args.seed);
    let b = if let Some(seed_str) = args.rhs.strip_prefix("random:") {
        let rhs_seed: u64 = seed_str.parse().context("parsing random rhs seed")?;
        let mut rng = RngState::new(rhs_seed);
        (0..a.n()).map(|_| rng.next_f64() * 2.0 - 1.0).collect()
    } else {
        io::load_vector(&args.rhs).with_context(|| format!("reading rhs {}", args.rhs))?
    };
    if b.len() != a.n() {
        bail!("rhs length {} does not match matrix dimension {}", b.len(), a.n());
    }

    let cfg = SolveConfig {
        chain: ChainConfig {
            kappa: args.kappa,
            kappa_mode: if args.theory_kappa {
                KappaMode::Theory
            } else {
                KappaMode::Practical
            },
            c_r: args.cr,
            c_s: args.cs,
            sample_mode: args.mode,
            sample_budget: if args.strict_q {
                SampleBudget::SpecFormula
            } else {
                SampleBudget::Auto
            },
            ..ChainConfig::default()
        },
        seed,
        ..SolveConfig::default()
    };
    let (x, report) = solve(&a, &b, args.eps, args.p, &cfg)?;

    let config = RunConfig {
        subcommand: "solve",
        matrix: args.matrix.display().to_string(),
        rhs: args.rhs.clone(),
        eps: args.eps,
        p: args.p,
        kappa: args.kappa,
        mode: args.mode,
        cs: args.cs,
        cr: args.cr,
        strict_q: args.strict_q,
        theory_kappa: args.theory_kappa,
        seed,
        oracle_limit: oracle::oracle_limit(),
    };
    let full = FullReport {
        config,
        solve: report,
    };
    if let Some(path) = &args.report {
        std::fs::write(path, serde_json::to_string_pretty(&full)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let norm_x = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!(
        "n={} m={} iterations={} relative_residual={:.3e} converged={} seed={} |x|={:.6e}",
        full.solve.n,
        full.solve.m,
        full.solve.iterations,
        full.solve.relative_residual,
        full.solve.converged,
        seed,
        norm_x
    );
    Ok(if full.solve.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

#[derive(Serialize)]
struct SparsifyCliStats {
    seed: u64,
    kappa: f64,
    xi: f64,
    cs: f64,
    mode: SampleMode,
    n: usize,
    input_edges: usize,
    output_edges: usize,
    q: u64,
    q_drawn: u64,
    t: f64,
    t_prime: f64,
    non_tree_picks: u64,
    distinct_non_tree: usize,
    tree_total_stretch: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    measured_kappa: Option<f64>,
}

fn cmd_sparsify(args: SparsifyArgs) -> Result<ExitCode> {
    let g = load_graph(&args.graph, args.largest_component)?;
    let seed = resolve_seed(args.seed);
    let opts = SparsifyOptions {
        mode: args.mode,
        c_s: args.cs,
        non_tree_budget: None,
        spike_guard: None,
    };
    let mut rng = RngState::new(seed);
    let (h, stats) = sparsify::incremental_sparsify(&g, args.kappa, args.xi, &mut rng, &opts)?;

    let measured_kappa = if args.verify {
        if g.n() <= oracle::oracle_limit() {
            Some(oracle::condition_number(&h, &g)?)
        } else {
            log::warn!(
                "--verify skipped: n = {} exceeds the oracle limit {}",
                g.n(),
                oracle::oracle_limit()
            );
            None
        }
    } else {
        None
    };

    let cli_stats = SparsifyCliStats {
        seed,
        kappa: args.kappa,
        xi: args.xi,
        cs: args.cs,
        mode: args.mode,
        n: g.n(),
        input_edges: g.m(),
        output_edges: h.m(),
        q: stats.q,
        q_drawn: stats.q_drawn,
        t: stats.t,
        t_prime: stats.t_prime,
        non_tree_picks: stats.non_tree_picks,
        distinct_non_tree: stats.distinct_non_tree,
        tree_total_stretch: stats.tree_total_stretch,
        measured_kappa,
    };
    let stats_json = serde_json::to_string_pretty(&cli_stats)?;
    match &args.out {
        Some(path) => {
            io::store_graph_text(&h, path)?;
            println!("{stats_json}");
        }
        None => {
            print!("{}", io::graph_to_string(&h));
            eprintln!("{stats_json}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_stretch(args: StretchArgs) -> Result<ExitCode> {
    let g = load_graph(&args.graph, args.largest_component)?;
    let (tree, info) = lowstretch::low_stretch_tree_with_info(&g)?;
    let table = lowstretch::compute_stretch(&g, &tree)?;

    #[derive(Serialize)]
    struct EdgeStretch {
        u: usize,
        v: usize,
        w: f64,
        stretch: f64,
        is_tree: bool,
    }
    #[derive(Serialize)]
    struct StretchReport {
        n: usize,
        m: usize,
        method: lowstretch::TreeMethod,
        total_stretch: f64,
        edges: Vec<EdgeStretch>,
    }
    let report = StretchReport {
        n: g.n(),
        m: g.m(),
        method: info.method,
        total_stretch: table.total_stretch(),
        edges: g
            .edges()
            .iter()
            .enumerate()
            .map(|(id, e)| EdgeStretch {
                u: e.u,
                v: e.v,
                w: e.w,
                stretch: table.stretch()[id],
                is_tree: table.is_tree_edge(id),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let mut sizes = Vec::new();
    for tok in s.split(',') {
        let v: f64 = tok.trim().parse().with_context(|| format!("parsing size {tok:?}"))?;
        if !(v.is_finite() && v >= 1.0) {
            bail!("size {tok:?} must be a positive count");
        }
        sizes.push(v as usize);
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        bail!("sizes must be strictly ascending");
    }
    Ok(sizes)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    let family: Family = args.family.parse()?;
    let sizes = parse_sizes(&args.sizes)?;
    let cfg = SolveConfig {
        chain: ChainConfig {
            kappa: args.kappa,
            ..ChainConfig::default()
        },
        seed: args.seed,
        oracle_limit: Some(0), // no dense work in timing runs
        ..SolveConfig::default()
    };
    let mut rows = Vec::new();
    let mut csv = String::from("n,m,build_ms,solve_ms,iterations,relative_residual\n");
    for &target in &sizes {
        let g = graph::generate(family, target, args.seed)?;
        let mut rng = RngState::new(args.seed ^ 0xbe9c);
        let mut b: Vec<f64> = (0..g.n()).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
        graph::project_mean(&mut b);
        let t0 = Instant::now();
        let (_, report) = sddkit::solver::solve_laplacian(&g, &b, args.eps, args.p, &cfg)?;
        let _total = t0.elapsed();
        let build_ms = report.wallclock_ms.chain_ms;
        let solve_ms = report.wallclock_ms.solve_ms;
        csv.push_str(&format!(
            "{},{},{:.3},{:.3},{},{:.3e}\n",
            g.n(),
            g.m(),
            build_ms,
            solve_ms,
            report.iterations,
            report.relative_residual
        ));
        rows.push((g.m() as f64, solve_ms));
    }
    if rows.len() >= 2 {
        let slope = log_log_slope(&rows);
        csv.push_str(&format!("# log-log slope of solve_ms vs m: {slope:.3}\n"));
    }
    match &args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

/// Least-squares slope of ln(time) against ln(m).
fn log_log_slope(rows: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|&(m, ms)| (m.ln(), ms.max(1e-3).ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let g = match &args.graph {
        Some(path) => load_graph(path, args.largest_component)?,
        None => {
            let family: Family = args.family.parse()?;
            graph::generate(family, args.n * 2, args.seed)?
        }
    };
    if g.n() > oracle::oracle_limit() {
        bail!(
            "n = {} exceeds the oracle limit {}; set SDDKIT_ORACLE_LIMIT to raise it",
            g.n(),
            oracle::oracle_limit()
        );
    }
    let resistances = oracle::effective_resistances(&g)?;
    let total: f64 = g
        .edges()
        .iter()
        .zip(&resistances)
        .map(|(e, r)| e.w * r)
        .sum();
    let target = g.n() as f64 - 1.0;
    let resistance_ok = (total - target).abs() <= 1e-8;
    println!(
        "resistance identity: sum w_e R_e = {total:.12} (target {target}) {}",
        if resistance_ok { "ok" } else { "FAIL" }
    );

    let pi = oracle::projection_matrix(&g)?;
    let idem = pi.matmul(&pi).sub(&pi).sym_norm2();
    let trace = pi.trace();
    let mut diag_err = 0.0f64;
    for (id, e) in g.edges().iter().enumerate() {
        diag_err = diag_err.max((pi[(id, id)] - e.w * resistances[id]).abs());
    }
    let projection_ok = idem <= 1e-8 && (trace - target).abs() <= 1e-8 && diag_err <= 1e-8;
    println!(
        "projection identities: ||Pi^2-Pi|| = {idem:.3e}, trace = {trace:.9}, \
         max |Pi(e,e) - w_e R_e| = {diag_err:.3e} {}",
        if projection_ok { "ok" } else { "FAIL" }
    );
    Ok(if resistance_ok && projection_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

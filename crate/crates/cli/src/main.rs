//! `kemeny` — estimate Kemeny's constant of a digraph from the command
//! line.
//!
//! Subcommands: `estimate` (one run, JSON/CSV manifest), `bench` (a table
//! of runs over graphs x algorithms x epsilons x seeds), and `precompute`
//! (spectral cache for reuse across runs).

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kemeny_core::config::{CombineMode, EstimatorConfig};
use kemeny_core::graph::{
    detect_format, graph_stats, load_edge_list, DiameterMode, Digraph, EdgeListFormat, GraphStats,
    GraphStatsOpts,
};
use kemeny_core::spectral::{
    exact_kemeny, second_eigenvalue_modulus, stationary_distribution, LambdaOpts, PowerIterOpts,
    SpectralInfo,
};
use kemeny_core::walk::{ablation_mc, dynamic_mc, improved_mc};
use kemeny_core::{tree::tree_mc, EstimateReport, Error};

use manifest::{
    now_unix, read_cache, validate_cache, write_cache, GraphSummary, RunManifest, SpectralCache,
    SpectralSummary,
};

#[derive(Parser)]
#[command(name = "kemeny", version, about = "Kemeny constant estimation for digraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one estimator on a graph and emit a run manifest.
    Estimate(EstimateArgs),
    /// Run a benchmark table over graphs, algorithms, epsilons and seeds.
    Bench(BenchArgs),
    /// Precompute the stationary distribution, |lambda_2| and graph
    /// statistics into a reusable cache file.
    Precompute(PrecomputeArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Exact,
    ImprovedMc,
    AblationMc,
    DynamicMc,
    TreeMc,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Exact => "exact",
            Algo::ImprovedMc => "improved-mc",
            Algo::AblationMc => "ablation-mc",
            Algo::DynamicMc => "dynamic-mc",
            Algo::TreeMc => "tree-mc",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Combine {
    AsPrinted,
    Corrected,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    Whitespace,
    Csv,
}

#[derive(Args, Clone)]
struct CommonEstimatorArgs {
    /// Error parameter of the sample-size formulas.
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    /// RNG seed (determinism contract: seed + threads + config).
    #[arg(long, env = "KEMENY_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: machine cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override |lambda_2| instead of estimating it.
    #[arg(long)]
    lambda: Option<f64>,
    /// Override the diameter used in sample-size formulas.
    #[arg(long)]
    tau: Option<usize>,
    /// Override the truncation length (required when the tree estimator's
    /// length formula domain is invalid).
    #[arg(long)]
    trunc_len: Option<usize>,
    /// Cap on the truncation length l.
    #[arg(long = "max-l", default_value_t = 100_000)]
    max_l: usize,
    /// Cap on walks per start node.
    #[arg(long = "max-walks", default_value_t = 10_000_000)]
    max_walks: u64,
    /// Cap on sampled spanning trees.
    #[arg(long = "max-trees", default_value_t = 100_000)]
    max_trees: u64,
    /// Force the start-node subset size.
    #[arg(long)]
    subset: Option<usize>,
    /// Tree estimator combination mode.
    #[arg(long, value_enum, default_value_t = Combine::Corrected)]
    combine: Combine,
    /// Use l (not l/2) as the Bernstein sup bound.
    #[arg(long)]
    strict_sup: bool,
    /// Per-node stop threshold epsilon/3 instead of n epsilon/3.
    #[arg(long)]
    conservative_stop: bool,
    /// Fail with exit code 3 when a cap would clamp a resolved parameter.
    #[arg(long)]
    strict_caps: bool,
    /// Stop threshold of the dynamic baseline (default 0.0005 n).
    #[arg(long)]
    dynamic_threshold: Option<f64>,
    /// Walks per node of the dynamic baseline.
    #[arg(long)]
    dynamic_walks: Option<u64>,
    /// Node limit for dense exact computations.
    #[arg(long, default_value_t = 5000)]
    dense_limit: usize,
    /// Power iteration tolerance for precomputed quantities.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Power iteration cap.
    #[arg(long, default_value_t = 200_000)]
    max_iter: usize,
    /// Edge-list flavour (default: sniff the first data line).
    #[arg(long, value_enum)]
    input_format: Option<InputFormat>,
}

impl CommonEstimatorArgs {
    fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            epsilon: self.epsilon,
            seed: self.seed,
            threads: self.threads.unwrap_or_else(kemeny_core::config::default_threads),
            lambda_override: self.lambda,
            tau_override: self.tau,
            d_max_override: None,
            trunc_len_override: self.trunc_len,
            subset_override: self.subset,
            failure_prob_delta: None,
            max_trunc_len: self.max_l,
            max_walks_per_node: self.max_walks,
            max_tree_samples: self.max_trees,
            adaptive_stop: true,
            conservative_stop: self.conservative_stop,
            strict_sup: self.strict_sup,
            combine: match self.combine {
                Combine::AsPrinted => CombineMode::AsPrinted,
                Combine::Corrected => CombineMode::Corrected,
            },
            dynamic_threshold: self.dynamic_threshold,
            dynamic_walks_per_node: self.dynamic_walks,
            strict_caps: self.strict_caps,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    /// Edge-list file.
    graph: PathBuf,
    #[arg(long, value_enum)]
    algo: Algo,
    #[command(flatten)]
    common: CommonEstimatorArgs,
    /// Load precomputed spectral quantities from this cache file.
    #[arg(long)]
    spectral_cache: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Write the manifest here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also compute the exact constant (dense path) for a relative-error
    /// column even for Monte Carlo algorithms.
    #[arg(long)]
    with_exact: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Edge-list files.
    #[arg(required = true)]
    graphs: Vec<PathBuf>,
    /// Algorithms to run.
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = [Algo::ImprovedMc, Algo::TreeMc])]
    algos: Vec<Algo>,
    /// Error parameters to sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.2, 0.15])]
    epsilons: Vec<f64>,
    /// Seeded repetitions per (graph, algorithm, epsilon).
    #[arg(long, default_value_t = 1)]
    repeats: u64,
    #[command(flatten)]
    common: CommonEstimatorArgs,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run table rows in parallel (timings become less clean).
    #[arg(long)]
    parallel_rows: bool,
}

#[derive(Args)]
struct PrecomputeArgs {
    /// Edge-list file.
    graph: PathBuf,
    /// Cache file to write.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 200_000)]
    max_iter: usize,
    #[arg(long, value_enum)]
    input_format: Option<InputFormat>,
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Parse { .. } | Error::EmptyGraph => 1,
        Error::CapExhausted(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::Precompute(args) => cmd_precompute(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn load_graph(path: &Path, explicit: Option<InputFormat>) -> Result<Digraph, Error> {
    let format = match explicit {
        Some(InputFormat::Whitespace) => EdgeListFormat::Whitespace,
        Some(InputFormat::Csv) => EdgeListFormat::Csv,
        None => detect_format(path)?,
    };
    load_edge_list(path, format)
}

fn stats_for(g: &Digraph, tau_override: Option<usize>) -> Result<GraphStats, Error> {
    let opts = GraphStatsOpts::default();
    let mode = if g.node_count() <= opts.exact_limit {
        DiameterMode::Exact
    } else {
        DiameterMode::DoubleSweepEstimate
    };
    let mut stats = graph_stats(g, mode, opts)?;
    if let Some(tau) = tau_override {
        stats.tau = tau;
        stats.tau_is_exact = false;
    }
    Ok(stats)
}

struct Prepared {
    graph: Digraph,
    original_n: usize,
    original_m: usize,
    stats: GraphStats,
}

fn prepare(path: &Path, fmt: Option<InputFormat>, tau: Option<usize>) -> Result<Prepared, Error> {
    let loaded = load_graph(path, fmt)?;
    let (original_n, original_m) = (loaded.node_count(), loaded.edge_count());
    let graph = loaded.largest_scc();
    let stats = stats_for(&graph, tau)?;
    Ok(Prepared {
        graph,
        original_n,
        original_m,
        stats,
    })
}

/// Compute exactly the spectral quantities `algo` needs, honoring cache and
/// overrides.
fn spectral_for(
    algo: Algo,
    g: &Digraph,
    common: &CommonEstimatorArgs,
    cache: Option<&SpectralCache>,
) -> Result<SpectralInfo, Error> {
    let needs_pi = matches!(algo, Algo::TreeMc);
    let needs_lambda = matches!(algo, Algo::ImprovedMc | Algo::AblationMc)
        && common.lambda.is_none();
    if !needs_pi && !needs_lambda {
        return Ok(SpectralInfo::default());
    }
    if let Some(c) = cache {
        let has_pi = c.info.pi.is_some() || !needs_pi;
        let has_lambda = c.info.lambda.is_some() || !needs_lambda;
        if has_pi && has_lambda {
            return Ok(c.info.clone());
        }
    }
    let pi_opts = PowerIterOpts {
        tol: common.tol,
        max_iter: common.max_iter,
        ..PowerIterOpts::default()
    };
    let pi = stationary_distribution(g, pi_opts)?;
    let lambda = if needs_lambda {
        Some(second_eigenvalue_modulus(
            g,
            &pi.values,
            LambdaOpts {
                max_iter: common.max_iter,
                ..LambdaOpts::default()
            },
        )?)
    } else {
        None
    };
    Ok(SpectralInfo {
        pi: Some(pi),
        lambda,
    })
}

fn run_algo(
    algo: Algo,
    g: &Digraph,
    spec: &SpectralInfo,
    stats: &GraphStats,
    cfg: &EstimatorConfig,
    dense_limit: usize,
) -> Result<EstimateReport, Error> {
    match algo {
        Algo::Exact => {
            let start = std::time::Instant::now();
            let k = exact_kemeny(g, dense_limit)?;
            let mut report = EstimateReport::new("exact", cfg.epsilon, cfg.seed, cfg.threads);
            report.estimate = k;
            report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
            Ok(report)
        }
        Algo::ImprovedMc => improved_mc(g, spec, cfg),
        Algo::AblationMc => ablation_mc(g, spec, cfg),
        Algo::DynamicMc => dynamic_mc(g, cfg),
        Algo::TreeMc => tree_mc(g, spec, stats, cfg),
    }
}

fn write_or_print(text: &str, output: Option<&PathBuf>) -> Result<(), Error> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(Error::from),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), Error> {
    let prep = prepare(&args.graph, args.common.input_format, args.common.tau)?;
    let g = &prep.graph;
    let cfg = args.common.estimator_config();
    cfg.validate()?;

    let cache = match &args.spectral_cache {
        Some(path) => {
            let c = read_cache(path)?;
            validate_cache(&c, g)?;
            Some(c)
        }
        None => None,
    };
    let spec = spectral_for(args.algo, g, &args.common, cache.as_ref())?;
    let report = run_algo(args.algo, g, &spec, &prep.stats, &cfg, args.common.dense_limit)
        .map_err(|e| match e {
            Error::FormulaDomain(msg) => {
                Error::FormulaDomain(format!("{msg} (flag: --trunc-len)"))
            }
            other => other,
        })?;

    let exact = if args.algo == Algo::Exact {
        Some(report.estimate)
    } else if args.with_exact {
        Some(exact_kemeny(g, args.common.dense_limit)?)
    } else {
        None
    };
    let relative_error = exact.map(|k| (report.estimate - k).abs() / k);

    let spectral = if args.algo == Algo::Exact {
        None
    } else {
        Some(SpectralSummary {
            lambda: cfg
                .lambda_override
                .or_else(|| spec.lambda.as_ref().map(|l| l.value)),
            lambda_is_override: cfg.lambda_override.is_some(),
            lambda_iterations: spec.lambda.as_ref().map(|l| l.iterations),
            lambda_residual: spec.lambda.as_ref().map(|l| l.residual),
            pi_iterations: spec.pi.as_ref().map(|p| p.iterations),
            pi_residual: spec.pi.as_ref().map(|p| p.residual),
        })
    };

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix: now_unix(),
        input: args.graph.display().to_string(),
        algorithm: report.algorithm.clone(),
        epsilon: cfg.epsilon,
        seed: cfg.seed,
        threads: cfg.threads,
        graph: GraphSummary {
            n: g.node_count(),
            m: g.edge_count(),
            original_n: prep.original_n,
            original_m: prep.original_m,
            d_max: prep.stats.d_max,
            tau: prep.stats.tau,
            tau_is_estimate: !prep.stats.tau_is_exact,
        },
        spectral,
        report,
        exact,
        relative_error,
    };
    let text = match args.format {
        OutputFormat::Json => manifest.to_json(),
        OutputFormat::Csv => manifest.to_csv(),
    };
    write_or_print(&text, args.output.as_ref())
}

#[derive(serde::Serialize)]
struct BenchRow {
    graph: String,
    algorithm: String,
    epsilon: f64,
    seed: u64,
    n: usize,
    m: usize,
    estimate: Option<f64>,
    exact: Option<f64>,
    relative_error: Option<f64>,
    elapsed_ms: Option<f64>,
    total_steps: Option<u64>,
    error: Option<String>,
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Error> {
    struct PreparedGraph {
        path: String,
        prep: Result<(Prepared, Option<f64>, SpectralInfo), Error>,
    }

    // Prepare each graph once: load, LSCC, stats, spectral, exact value.
    let prepared: Vec<PreparedGraph> = args
        .graphs
        .iter()
        .map(|path| {
            let prep = prepare(path, args.common.input_format, args.common.tau).and_then(|p| {
                let needs_lambda = args
                    .algos
                    .iter()
                    .any(|a| matches!(a, Algo::ImprovedMc | Algo::AblationMc))
                    && args.common.lambda.is_none();
                let needs_pi = args.algos.iter().any(|a| matches!(a, Algo::TreeMc));
                let mut spec = SpectralInfo::default();
                if needs_pi || needs_lambda {
                    let pi = stationary_distribution(
                        &p.graph,
                        PowerIterOpts {
                            tol: args.common.tol,
                            max_iter: args.common.max_iter,
                            ..PowerIterOpts::default()
                        },
                    )?;
                    if needs_lambda {
                        spec.lambda = Some(second_eigenvalue_modulus(
                            &p.graph,
                            &pi.values,
                            LambdaOpts::default(),
                        )?);
                    }
                    spec.pi = Some(pi);
                }
                let exact = if p.graph.node_count() <= args.common.dense_limit {
                    Some(exact_kemeny(&p.graph, args.common.dense_limit)?)
                } else {
                    None
                };
                Ok((p, exact, spec))
            });
            PreparedGraph {
                path: path.display().to_string(),
                prep,
            }
        })
        .collect();

    let mut jobs: Vec<(usize, Algo, f64, u64)> = Vec::new();
    for (gi, _) in prepared.iter().enumerate() {
        for &algo in &args.algos {
            for &eps in &args.epsilons {
                for rep in 0..args.repeats {
                    jobs.push((gi, algo, eps, args.common.seed + rep));
                }
            }
        }
    }

    let run_job = |&(gi, algo, eps, seed): &(usize, Algo, f64, u64)| -> BenchRow {
        let graph_name = prepared[gi].path.clone();
        match &prepared[gi].prep {
            Err(e) => BenchRow {
                graph: graph_name,
                algorithm: algo.name().into(),
                epsilon: eps,
                seed,
                n: 0,
                m: 0,
                estimate: None,
                exact: None,
                relative_error: None,
                elapsed_ms: None,
                total_steps: None,
                error: Some(e.to_string()),
            },
            Ok((prep, exact, spec)) => {
                let cfg = EstimatorConfig {
                    epsilon: eps,
                    seed,
                    ..args.common.estimator_config()
                };
                let outcome = run_algo(
                    algo,
                    &prep.graph,
                    spec,
                    &prep.stats,
                    &cfg,
                    args.common.dense_limit,
                );
                match outcome {
                    Ok(report) => BenchRow {
                        graph: graph_name,
                        algorithm: report.algorithm.clone(),
                        epsilon: eps,
                        seed,
                        n: prep.graph.node_count(),
                        m: prep.graph.edge_count(),
                        estimate: Some(report.estimate),
                        exact: *exact,
                        relative_error: exact.map(|k| (report.estimate - k).abs() / k),
                        elapsed_ms: Some(report.elapsed_ms),
                        total_steps: Some(report.total_steps),
                        error: None,
                    },
                    Err(e) => BenchRow {
                        graph: graph_name,
                        algorithm: algo.name().into(),
                        epsilon: eps,
                        seed,
                        n: prep.graph.node_count(),
                        m: prep.graph.edge_count(),
                        estimate: None,
                        exact: *exact,
                        relative_error: None,
                        elapsed_ms: None,
                        total_steps: None,
                        error: Some(e.to_string()),
                    },
                }
            }
        }
    };

    let rows: Vec<BenchRow> = if args.parallel_rows {
        std::thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .iter()
                .map(|job| scope.spawn(move || run_job(job)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("bench row")).collect()
        })
    } else {
        jobs.iter().map(run_job).collect()
    };

    let text = match args.format {
        OutputFormat::Json => serde_json::to_string_pretty(&rows).expect("rows serialize"),
        OutputFormat::Csv => {
            let mut out = String::from(
                "graph,algorithm,epsilon,seed,n,m,estimate,exact,relative_error,elapsed_ms,\
                 total_steps,error\n",
            );
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.graph,
                    r.algorithm,
                    r.epsilon,
                    r.seed,
                    r.n,
                    r.m,
                    r.estimate.map(|v| v.to_string()).unwrap_or_default(),
                    r.exact.map(|v| v.to_string()).unwrap_or_default(),
                    r.relative_error.map(|v| v.to_string()).unwrap_or_default(),
                    r.elapsed_ms.map(|v| v.to_string()).unwrap_or_default(),
                    r.total_steps.map(|v| v.to_string()).unwrap_or_default(),
                    r.error.clone().unwrap_or_default().replace(',', ";"),
                ));
            }
            out
        }
    };
    write_or_print(&text, args.output.as_ref())
}

fn cmd_precompute(args: &PrecomputeArgs) -> Result<(), Error> {
    let prep = prepare(&args.graph, args.input_format, None)?;
    let g = &prep.graph;
    let pi = stationary_distribution(
        g,
        PowerIterOpts {
            tol: args.tol,
            max_iter: args.max_iter,
            ..PowerIterOpts::default()
        },
    )?;
    let lambda = second_eigenvalue_modulus(
        g,
        &pi.values,
        LambdaOpts {
            max_iter: args.max_iter,
            ..LambdaOpts::default()
        },
    )?;
    eprintln!(
        "pi: {} iterations, residual {:.3e}; lambda = {:.12} ({} iterations); n = {}, m = {}",
        pi.iterations,
        pi.residual,
        lambda.value,
        lambda.iterations,
        g.node_count(),
        g.edge_count()
    );
    let cache = SpectralCache {
        n: g.node_count(),
        m: g.edge_count(),
        stats: prep.stats,
        info: SpectralInfo {
            pi: Some(pi),
            lambda: Some(lambda),
        },
    };
    write_cache(&args.output, &cache)
}

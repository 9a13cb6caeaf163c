//! Incoming rooted spanning-tree sampling (Wilson-style loop-erased walks)
//! and the tree-based estimator.
//!
//! One sampled in-tree rooted at `s` yields, for every node `i != s`, the
//! number of visits to `i` before `i` joined the tree. The expectation of
//! that passage count is the `i`-th diagonal entry of `(I - P_-s)^{-1}`, so
//! the per-sample passage total is an unbiased estimate of the submatrix
//! trace. Combined with a truncated-walk estimate of the walk centrality of
//! `s`, this gives the Kemeny constant through
//! `K = trace((I - P_-s)^{-1}) - phi(s)`.

use std::time::Instant;

use rand::RngExt;
use rayon::prelude::*;

use crate::config::{CombineMode, EstimatorConfig};
use crate::error::{Error, Result};
use crate::graph::{Digraph, GraphStats};
use crate::report::{EstimateReport, ResolvedParams};
use crate::rng::{self, tag};
use crate::spectral::SpectralInfo;
use crate::walk::{simulate_node_walks, StopRule};

/// Root choice: argmax of the stationary distribution, ties to the smallest
/// index.
pub fn select_root(pi: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &v) in pi.iter().enumerate() {
        if v > pi[best] {
            best = i;
        }
    }
    best
}

/// One sampled in-tree: `parent[i]` is the out-edge kept for `i`
/// (`parent[s] = s`), `passages[i]` the visits to `i` before it joined.
#[derive(Debug, Clone)]
pub struct InTreeSample {
    pub root: usize,
    pub parent: Vec<usize>,
    pub passages: Vec<u64>,
    /// Random-walk steps taken (absorbing arrivals included).
    pub steps: u64,
}

/// Reusable stamped buffers: a version counter avoids clearing O(n) state
/// for every sample.
struct TreeBufs {
    next: Vec<u32>,
    in_tree: Vec<u32>,
    pass: Vec<u32>,
    pass_epoch: Vec<u32>,
    epoch: u32,
}

impl TreeBufs {
    fn new(n: usize) -> TreeBufs {
        TreeBufs {
            next: vec![0; n],
            in_tree: vec![0; n],
            pass: vec![0; n],
            pass_epoch: vec![0; n],
            epoch: 0,
        }
    }

    fn begin_sample(&mut self) {
        if self.epoch == u32::MAX {
            self.in_tree.iter_mut().for_each(|v| *v = 0);
            self.pass_epoch.iter_mut().for_each(|v| *v = 0);
            self.epoch = 0;
        }
        self.epoch += 1;
    }
}

/// Core sampler (Wilson's algorithm with passage counting). Returns the
/// total passage count and the step count of this sample; per-node passages
/// are left in `bufs.pass` (valid where `pass_epoch == epoch`).
fn sample_tree_into<R: RngExt>(
    g: &Digraph,
    s: usize,
    rng: &mut R,
    bufs: &mut TreeBufs,
) -> (u64, u64) {
    bufs.begin_sample();
    let epoch = bufs.epoch;
    let n = g.node_count();
    bufs.in_tree[s] = epoch;
    let mut total_passages = 0u64;
    let mut steps = 0u64;
    for u in 0..n {
        if bufs.in_tree[u] == epoch {
            continue;
        }
        // Random-walk phase: record tentative successors until the walk
        // hits the current tree.
        let mut i = u;
        while bufs.in_tree[i] != epoch {
            if bufs.pass_epoch[i] != epoch {
                bufs.pass_epoch[i] = epoch;
                bufs.pass[i] = 0;
            }
            bufs.pass[i] += 1;
            total_passages += 1;
            let nbrs = g.out_neighbors(i);
            let nxt = match nbrs.len() {
                1 => nbrs[0],
                len => nbrs[rng.random_range(0..len)],
            };
            bufs.next[i] = nxt;
            i = nxt as usize;
            steps += 1;
        }
        // Loop-erasure phase: the surviving path joins the tree.
        let mut i = u;
        while bufs.in_tree[i] != epoch {
            bufs.in_tree[i] = epoch;
            i = bufs.next[i] as usize;
        }
    }
    (total_passages, steps)
}

/// Sample one in-tree rooted at `s` with fresh buffers.
pub fn sample_in_tree<R: RngExt>(g: &Digraph, s: usize, rng: &mut R) -> InTreeSample {
    let n = g.node_count();
    let mut bufs = TreeBufs::new(n);
    let (_, steps) = sample_tree_into(g, s, rng, &mut bufs);
    let mut parent = vec![0usize; n];
    let mut passages = vec![0u64; n];
    for i in 0..n {
        if i == s {
            parent[i] = s;
        } else {
            parent[i] = bufs.next[i] as usize;
            passages[i] = if bufs.pass_epoch[i] == bufs.epoch {
                bufs.pass[i] as u64
            } else {
                0
            };
        }
    }
    InTreeSample {
        root: s,
        parent,
        passages,
        steps,
    }
}

/// Check that `parent` encodes an incoming spanning tree rooted at `s`:
/// every non-root keeps exactly one out-edge that exists in `g`, and every
/// node reaches `s` without cycles.
pub fn verify_in_tree(g: &Digraph, s: usize, parent: &[usize]) -> bool {
    let n = g.node_count();
    if parent.len() != n || s >= n || parent[s] != s {
        return false;
    }
    for (i, &p) in parent.iter().enumerate() {
        if i == s {
            continue;
        }
        if p >= n || g.out_neighbors(i).binary_search(&(p as u32)).is_err() {
            return false;
        }
    }
    for mut i in 0..n {
        let mut hops = 0usize;
        while i != s {
            i = parent[i];
            hops += 1;
            if hops > n {
                return false;
            }
        }
    }
    true
}

/// Passage statistics over `samples` sampled in-trees.
#[derive(Debug, Clone)]
pub struct TreeSampleStats {
    pub root: usize,
    pub samples: u64,
    /// Per-node passage sums; empty when per-node tracking was disabled.
    pub passage_sum: Vec<u64>,
    pub passage_sq_sum: Vec<u64>,
    /// Sum over samples of the per-sample passage total.
    pub total_passages: u64,
    pub total_steps: u64,
}

impl TreeSampleStats {
    /// Mean passage count of node `i` (0 for the root).
    pub fn mean(&self, i: usize) -> f64 {
        self.passage_sum[i] as f64 / self.samples as f64
    }

    /// Population variance of the passage count of node `i`.
    pub fn variance(&self, i: usize) -> f64 {
        let r = self.samples as f64;
        let mean = self.passage_sum[i] as f64 / r;
        (self.passage_sq_sum[i] as f64 / r - mean * mean).max(0.0)
    }

    /// `sum_i q_bar_i` over non-root nodes: the submatrix-trace estimate.
    pub fn sum_of_means(&self) -> f64 {
        self.total_passages as f64 / self.samples as f64
    }

    /// Mean per-sample walk cost (expected to match the submatrix trace).
    pub fn mean_passages_per_sample(&self) -> f64 {
        self.total_passages as f64 / self.samples as f64
    }
}

fn run_tree_samples(
    g: &Digraph,
    s: usize,
    samples: u64,
    seed: u64,
    threads: usize,
    per_node: bool,
) -> Result<TreeSampleStats> {
    let n = g.node_count();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?;

    let workers = threads.max(1) as u64;
    let chunk = samples.div_ceil(workers);
    struct Partial {
        sum: Vec<u64>,
        sq: Vec<u64>,
        total: u64,
        steps: u64,
    }
    let partials: Vec<Partial> = pool.install(|| {
        (0..workers)
            .into_par_iter()
            .map(|w| {
                let lo = w * chunk;
                let hi = ((w + 1) * chunk).min(samples);
                let mut bufs = TreeBufs::new(n);
                let mut part = Partial {
                    sum: if per_node { vec![0; n] } else { Vec::new() },
                    sq: if per_node { vec![0; n] } else { Vec::new() },
                    total: 0,
                    steps: 0,
                };
                for j in lo..hi {
                    let mut rng = rng::stream(seed, tag::TREE, j, 0);
                    let (passages, steps) = sample_tree_into(g, s, &mut rng, &mut bufs);
                    part.total += passages;
                    part.steps += steps;
                    if per_node {
                        for i in 0..n {
                            if i == s {
                                continue;
                            }
                            let q = if bufs.pass_epoch[i] == bufs.epoch {
                                bufs.pass[i] as u64
                            } else {
                                0
                            };
                            part.sum[i] += q;
                            part.sq[i] += q * q;
                        }
                    }
                }
                part
            })
            .collect()
    });

    let mut stats = TreeSampleStats {
        root: s,
        samples,
        passage_sum: if per_node { vec![0; n] } else { Vec::new() },
        passage_sq_sum: if per_node { vec![0; n] } else { Vec::new() },
        total_passages: 0,
        total_steps: 0,
    };
    for p in partials {
        stats.total_passages += p.total;
        stats.total_steps += p.steps;
        if per_node {
            for i in 0..n {
                stats.passage_sum[i] += p.sum[i];
                stats.passage_sq_sum[i] += p.sq[i];
            }
        }
    }
    Ok(stats)
}

/// Sample `samples` in-trees rooted at `s` and return per-node passage
/// statistics. `sum_of_means` estimates `trace((I - P_-s)^{-1})` without
/// bias.
pub fn tree_trace_estimate(
    g: &Digraph,
    s: usize,
    samples: u64,
    seed: u64,
    threads: usize,
) -> Result<TreeSampleStats> {
    run_tree_samples(g, s, samples, seed, threads, true)
}

/// Truncation length for approximating a diagonal entry of the fundamental
/// matrix to additive accuracy `epsilon/2` without spectral information:
/// `l = ceil(tau ln(n eps / (2 tau d_max^tau)) / ln(1 - n d_max^-tau)) + tau - 1`.
///
/// Valid only when `n d_max^-tau < 1`; callers must override the length
/// otherwise.
pub fn trunc_len_diag(n: usize, epsilon: f64, tau: usize, d_max: usize) -> Result<usize> {
    if tau == 0 || d_max == 0 {
        return Err(Error::FormulaDomain(
            "diagonal truncation length needs tau >= 1 and d_max >= 1".into(),
        ));
    }
    let nf = n as f64;
    let tf = tau as f64;
    let ln_d = (d_max as f64).ln();
    // x = n d_max^{-tau}, computed in log space.
    let log_x = nf.ln() - tf * ln_d;
    if log_x >= 0.0 {
        return Err(Error::FormulaDomain(format!(
            "n * d_max^-tau = {:.4} >= 1 (n = {n}, d_max = {d_max}, tau = {tau}); \
             supply a truncation-length override",
            log_x.exp()
        )));
    }
    let x = log_x.exp();
    let numerator = tf * (nf.ln() + epsilon.ln() - (2.0 * tf).ln() - tf * ln_d);
    let denominator = (-x).ln_1p(); // ln(1 - x) < 0
    let raw = (numerator / denominator).ceil();
    let base = if raw.is_finite() && raw < (usize::MAX / 2) as f64 {
        raw.max(0.0) as usize
    } else {
        usize::MAX / 2
    };
    Ok((base + tau - 1).max(1))
}

/// Theoretical tree sample count
/// `ceil(eps^-2 e^2 tau^2 d_max^(2 tau) ceil(ln^3(4 n^2)))`; returned as a
/// float because it overflows wildly on most graphs and is clamped anyway.
pub fn tree_sample_size_theoretical(n: usize, epsilon: f64, tau: usize, d_max: usize) -> f64 {
    let nf = n as f64;
    let tf = tau as f64;
    let log_cubed = (4.0 * nf * nf).ln().powi(3).ceil();
    let growth = (2.0 * tf * (d_max as f64).ln()).exp();
    (epsilon.powi(-2) * std::f64::consts::E.powi(2) * tf * tf * growth * log_cubed).ceil()
}

/// Outcome of the walk-centrality stage.
#[derive(Debug, Clone)]
pub struct PhiEstimate {
    /// Mean return count of the truncated walks from the root.
    pub mean_returns: f64,
    pub walks: u64,
    pub steps: u64,
    pub early_stopped: bool,
}

/// Estimate the mean return count of `l`-truncated walks from `s` over at
/// most `max_walks` walks, early-stopped once the Bernstein half-width
/// drops below `sqrt(n) epsilon / 2`.
pub fn phi_s_estimate(
    g: &Digraph,
    s: usize,
    l: usize,
    max_walks: u64,
    cfg: &EstimatorConfig,
) -> PhiEstimate {
    let n = g.node_count();
    let sup = if cfg.strict_sup {
        l as f64
    } else {
        l as f64 / 2.0
    };
    let stop = cfg.adaptive_stop.then_some(StopRule {
        threshold: (n as f64).sqrt() * cfg.epsilon / 2.0,
        sup,
        delta: cfg.delta(n),
    });
    let stats = simulate_node_walks(g, s, l, max_walks, stop, cfg.seed, tag::PHI);
    PhiEstimate {
        mean_returns: stats.mean(),
        walks: stats.walks,
        steps: stats.steps,
        early_stopped: stats.early_stopped,
    }
}

/// Tree-sampling estimator of the Kemeny constant.
pub fn tree_mc(
    g: &Digraph,
    spec: &SpectralInfo,
    stats: &GraphStats,
    cfg: &EstimatorConfig,
) -> Result<EstimateReport> {
    cfg.validate()?;
    if g.node_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if !g.all_out_degrees_positive() {
        return Err(Error::NotStronglyConnected(
            "a node has no outgoing edge; estimators expect a strongly connected digraph".into(),
        ));
    }
    let start = Instant::now();
    let n = g.node_count();
    let mut warnings = Vec::new();

    let pi = spec
        .pi
        .as_ref()
        .ok_or_else(|| {
            Error::SpectralPrecondition(
                "stationary distribution required for root selection".into(),
            )
        })?
        .values
        .as_slice();
    let s = select_root(pi);
    let pi_s = pi[s];

    let tau = cfg.tau_override.unwrap_or(stats.tau);
    let tau_is_estimate = cfg.tau_override.is_none() && !stats.tau_is_exact;
    let d_max = cfg.d_max_override.unwrap_or(stats.d_max);

    let r_theory = tree_sample_size_theoretical(n, cfg.epsilon, tau, d_max);
    let r_raw = if r_theory.is_finite() && r_theory < u64::MAX as f64 {
        (r_theory as u64).max(1)
    } else {
        u64::MAX
    };
    let r = if r_raw > cfg.max_tree_samples {
        if cfg.strict_caps {
            return Err(Error::CapExhausted(format!(
                "tree sample count {r_theory:e} exceeds cap {}",
                cfg.max_tree_samples
            )));
        }
        warnings.push(format!(
            "theoretical tree sample count {r_theory:e} clamped to {}",
            cfg.max_tree_samples
        ));
        cfg.max_tree_samples
    } else {
        r_raw
    };

    let tree_stats = run_tree_samples(g, s, r, cfg.seed, cfg.threads, false)?;
    let trace_estimate = tree_stats.sum_of_means();

    let l_raw = match cfg.trunc_len_override {
        Some(l) => l,
        None if n == 1 => 1,
        None => trunc_len_diag(n, cfg.epsilon, tau, d_max)?,
    };
    let l = if l_raw > cfg.max_trunc_len {
        if cfg.strict_caps {
            return Err(Error::CapExhausted(format!(
                "truncation length {l_raw} exceeds cap {}",
                cfg.max_trunc_len
            )));
        }
        warnings.push(format!(
            "truncation length {l_raw} clamped to {}",
            cfg.max_trunc_len
        ));
        cfg.max_trunc_len
    } else {
        l_raw
    };

    let r_prime_raw =
        ((l as f64).powi(2) * (n as f64).ln() / (2.0 * cfg.epsilon.powi(2) * pi_s * pi_s * (n as f64).powi(2)))
            .ceil();
    let r_prime = if r_prime_raw.is_finite() && r_prime_raw < u64::MAX as f64 {
        ((r_prime_raw as u64).max(1)).min(cfg.max_walks_per_node)
    } else {
        cfg.max_walks_per_node
    };

    let phi = phi_s_estimate(g, s, l, r_prime, cfg);

    let as_printed = -(phi.mean_returns + 1.0) / pi_s + trace_estimate;
    let estimate = match cfg.combine {
        CombineMode::AsPrinted => as_printed,
        CombineMode::Corrected => as_printed + (l as f64 + 1.0),
    };

    let mut report = EstimateReport::new("tree-mc", cfg.epsilon, cfg.seed, cfg.threads);
    report.estimate = estimate;
    report.total_steps = tree_stats.total_steps + phi.steps;
    report.params = ResolvedParams {
        root: Some(s),
        tau: Some(tau),
        tau_is_estimate: Some(tau_is_estimate),
        d_max: Some(d_max),
        tree_samples: Some(r),
        tree_samples_theoretical: Some(r_theory),
        phi_trunc_len: Some(l),
        phi_walk_cap: Some(r_prime),
        phi_walks_used: Some(phi.walks),
        combine: Some(
            match cfg.combine {
                CombineMode::AsPrinted => "as-printed",
                CombineMode::Corrected => "corrected",
            }
            .to_string(),
        ),
        ..ResolvedParams::default()
    };
    report.warnings = warnings;
    report.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

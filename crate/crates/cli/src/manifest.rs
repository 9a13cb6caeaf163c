//! Run manifests and the spectral cache file format.

use std::path::Path;

use kemeny_core::graph::{Digraph, GraphStats};
use kemeny_core::spectral::{LambdaEstimate, PiEstimate, SpectralInfo};
use kemeny_core::{EstimateReport, Error, Result};
use serde::Serialize;

/// Graph shape echoed in manifests — sizes refer to the largest strongly
/// connected component the estimators actually ran on.
#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub n: usize,
    pub m: usize,
    pub original_n: usize,
    pub original_m: usize,
    pub d_max: usize,
    pub tau: usize,
    /// True when tau is a double-sweep lower bound rather than an exact
    /// all-pairs value.
    pub tau_is_estimate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub lambda_is_override: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi_residual: Option<f64>,
}

/// One estimator run, machine-readable.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub timestamp_unix: u64,
    pub input: String,
    pub algorithm: String,
    pub epsilon: f64,
    pub seed: u64,
    pub threads: usize,
    pub graph: GraphSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSummary>,
    pub report: EstimateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
    /// Present exactly when `exact` is present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "input,algorithm,epsilon,seed,threads,n,m,estimate,exact,relative_error,\
             elapsed_ms,total_steps\n",
        );
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            self.input,
            self.algorithm,
            self.epsilon,
            self.seed,
            self.threads,
            self.graph.n,
            self.graph.m,
            self.report.estimate,
            self.exact.map(|v| v.to_string()).unwrap_or_default(),
            self.relative_error.map(|v| v.to_string()).unwrap_or_default(),
            self.report.elapsed_ms,
            self.report.total_steps,
        ));
        out
    }
}

pub fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Precomputed spectral quantities and graph statistics, stored as a
/// versioned plain-text file.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    pub n: usize,
    pub m: usize,
    pub stats: GraphStats,
    pub info: SpectralInfo,
}

const CACHE_HEADER: &str = "kemeny-spectral v1";

pub fn write_cache(path: &Path, cache: &SpectralCache) -> Result<()> {
    let mut out = String::new();
    out.push_str(CACHE_HEADER);
    out.push('\n');
    out.push_str(&format!("n {}\n", cache.n));
    out.push_str(&format!("m {}\n", cache.m));
    out.push_str(&format!(
        "tau {} {}\n",
        cache.stats.tau,
        if cache.stats.tau_is_exact { "exact" } else { "estimate" }
    ));
    out.push_str(&format!("d_max {}\n", cache.stats.d_max));
    let hist: Vec<String> = cache
        .stats
        .degree_histogram
        .iter()
        .map(u64::to_string)
        .collect();
    out.push_str(&format!("degree_histogram {}\n", hist.join(" ")));
    match &cache.info.lambda {
        Some(l) => out.push_str(&format!(
            "lambda {:.17e} iterations {} residual {:.17e}\n",
            l.value, l.iterations, l.residual
        )),
        None => out.push_str("lambda none\n"),
    }
    match &cache.info.pi {
        Some(pi) => {
            out.push_str(&format!(
                "pi iterations {} residual {:.17e}\n",
                pi.iterations, pi.residual
            ));
            for v in &pi.values {
                out.push_str(&format!("{v:.17e}\n"));
            }
        }
        None => out.push_str("pi none\n"),
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn cache_err(message: impl Into<String>) -> Error {
    Error::CacheMismatch(message.into())
}

pub fn read_cache(path: &Path) -> Result<SpectralCache> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(CACHE_HEADER) {
        return Err(cache_err(format!("missing header line {CACHE_HEADER:?}")));
    }
    let mut field = |key: &str| -> Result<Vec<String>> {
        let line = lines
            .next()
            .ok_or_else(|| cache_err(format!("truncated cache, expected {key}")))?;
        let mut parts = line.split_whitespace().map(str::to_string);
        match parts.next() {
            Some(k) if k == key => Ok(parts.collect()),
            other => Err(cache_err(format!("expected {key}, found {other:?}"))),
        }
    };
    let n: usize = field("n")?
        .first()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| cache_err("bad n"))?;
    let m: usize = field("m")?
        .first()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| cache_err("bad m"))?;
    let tau_fields = field("tau")?;
    let tau: usize = tau_fields
        .first()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| cache_err("bad tau"))?;
    let tau_is_exact = match tau_fields.get(1).map(String::as_str) {
        Some("exact") => true,
        Some("estimate") => false,
        other => return Err(cache_err(format!("bad tau flag {other:?}"))),
    };
    let d_max: usize = field("d_max")?
        .first()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| cache_err("bad d_max"))?;
    let degree_histogram: Vec<u64> = field("degree_histogram")?
        .iter()
        .map(|v| v.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| cache_err(format!("bad histogram: {e}")))?;

    let lambda_fields = field("lambda")?;
    let lambda = match lambda_fields.first().map(String::as_str) {
        Some("none") => None,
        Some(v) => {
            let value: f64 = v.parse().map_err(|e| cache_err(format!("bad lambda: {e}")))?;
            let iterations: usize = lambda_fields
                .get(2)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| cache_err("bad lambda iterations"))?;
            let residual: f64 = lambda_fields
                .get(4)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| cache_err("bad lambda residual"))?;
            Some(LambdaEstimate {
                value,
                iterations,
                residual,
            })
        }
        None => return Err(cache_err("empty lambda line")),
    };

    let pi_fields = field("pi")?;
    let pi = match pi_fields.first().map(String::as_str) {
        Some("none") => None,
        Some("iterations") => {
            let iterations: usize = pi_fields
                .get(1)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| cache_err("bad pi iterations"))?;
            let residual: f64 = pi_fields
                .get(3)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| cache_err("bad pi residual"))?;
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                let line = lines
                    .next()
                    .ok_or_else(|| cache_err("truncated pi vector"))?;
                values.push(
                    line.trim()
                        .parse()
                        .map_err(|e| cache_err(format!("bad pi value: {e}")))?,
                );
            }
            Some(PiEstimate {
                values,
                iterations,
                residual,
            })
        }
        other => return Err(cache_err(format!("bad pi line {other:?}"))),
    };

    Ok(SpectralCache {
        n,
        m,
        stats: GraphStats {
            d_max,
            tau,
            tau_is_exact,
            degree_histogram,
        },
        info: SpectralInfo { pi, lambda },
    })
}

/// Reject caches computed for a different graph.
pub fn validate_cache(cache: &SpectralCache, g: &Digraph) -> Result<()> {
    if cache.n != g.node_count() || cache.m != g.edge_count() {
        return Err(cache_err(format!(
            "cache is for n = {}, m = {}; graph has n = {}, m = {}",
            cache.n,
            cache.m,
            g.node_count(),
            g.edge_count()
        )));
    }
    Ok(())
}

//! Estimate reports: resolved parameters, cost counters and warnings.

use serde::Serialize;

/// Parameters an estimator actually applied, after resolving overrides and
/// caps. Fields irrelevant to an algorithm stay `None`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ResolvedParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trunc_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub walks_per_node_cap: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_is_estimate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree_samples: Option<u64>,
    /// Theoretical tree sample count before clamping (can be astronomically
    /// large; kept for transparency).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree_samples_theoretical: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_trunc_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_walk_cap: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_walks_used: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub combine: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamic_threshold: Option<f64>,
    /// Set by the dynamic baseline: its schedule is a reconstruction, not
    /// a published procedure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stopped_nodes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub walks_total: Option<u64>,
}

/// Outcome of one estimator run.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub algorithm: String,
    /// Estimated Kemeny constant.
    pub estimate: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub threads: usize,
    pub params: ResolvedParams,
    /// Total random-walk steps consumed.
    pub total_steps: u64,
    pub elapsed_ms: f64,
    pub warnings: Vec<String>,
    /// Walks simulated per selected start node (empty for estimators that
    /// do not walk per node). Kept out of serialized output; the summary
    /// fields in `params` cover reporting.
    #[serde(skip)]
    pub walks_per_node: Vec<u64>,
}

impl EstimateReport {
    pub fn new(algorithm: &str, epsilon: f64, seed: u64, threads: usize) -> EstimateReport {
        EstimateReport {
            algorithm: algorithm.to_string(),
            estimate: f64::NAN,
            epsilon,
            seed,
            threads,
            params: ResolvedParams::default(),
            total_steps: 0,
            elapsed_ms: 0.0,
            warnings: Vec::new(),
            walks_per_node: Vec::new(),
        }
    }
}

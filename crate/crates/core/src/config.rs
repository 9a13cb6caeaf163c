//! Estimator configuration.

use serde::Serialize;

use crate::error::{Error, Result};

/// How the tree estimator combines its two stages into the final value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombineMode {
    /// Return `-(mean_returns + 1)/pi_s + sum of passage means` verbatim.
    AsPrinted,
    /// Add the truncation offset `l + 1` that the centrality stage drops;
    /// this centers the estimator on the exact value (default).
    Corrected,
}

/// Shared knobs for all estimators. Fields left at `None` resolve to the
/// documented defaults at run time; resolved values are echoed in the
/// report.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorConfig {
    /// Error parameter of the sample-size formulas.
    pub epsilon: f64,
    pub seed: u64,
    /// Worker threads. Results are independent of this value; it is recorded
    /// because the determinism contract includes it.
    pub threads: usize,
    /// Use this `|lambda_2|` instead of a precomputed one.
    pub lambda_override: Option<f64>,
    /// Use this diameter in sample-size formulas instead of measured stats.
    pub tau_override: Option<usize>,
    pub d_max_override: Option<usize>,
    /// Force the truncation length (required when the diagonal-truncation
    /// formula domain is invalid, e.g. `d_max^tau <= n`).
    pub trunc_len_override: Option<usize>,
    /// Force the start-node subset size of the subset-sampling estimator.
    pub subset_override: Option<usize>,
    /// Failure probability fed to the empirical Bernstein half-width;
    /// defaults to `1/n`.
    pub failure_prob_delta: Option<f64>,
    /// Cap on the truncation length `l`.
    pub max_trunc_len: usize,
    /// Cap on walks simulated per start node.
    pub max_walks_per_node: u64,
    /// Cap on sampled spanning trees.
    pub max_tree_samples: u64,
    /// Adaptive early stop per start node (empirical Bernstein).
    pub adaptive_stop: bool,
    /// Use the per-node budget `epsilon/3` as the stop threshold instead of
    /// the printed aggregate `n epsilon/3`.
    pub conservative_stop: bool,
    /// Use `l` instead of `l/2` as the Bernstein sup bound (covers walks on
    /// graphs with self-loops, where a return can happen every step).
    pub strict_sup: bool,
    pub combine: CombineMode,
    /// Stop threshold of the dynamic baseline; defaults to `0.0005 * n`.
    pub dynamic_threshold: Option<f64>,
    /// Walks per node of the dynamic baseline; defaults to its Hoeffding
    /// sizing at the initial depth.
    pub dynamic_walks_per_node: Option<u64>,
    /// Error out instead of clamping when a cap is exhausted.
    pub strict_caps: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            epsilon: 0.2,
            seed: 0,
            threads: default_threads(),
            lambda_override: None,
            tau_override: None,
            d_max_override: None,
            trunc_len_override: None,
            subset_override: None,
            failure_prob_delta: None,
            max_trunc_len: 100_000,
            max_walks_per_node: 10_000_000,
            max_tree_samples: 100_000,
            adaptive_stop: true,
            conservative_stop: false,
            strict_sup: false,
            combine: CombineMode::Corrected,
            dynamic_threshold: None,
            dynamic_walks_per_node: None,
            strict_caps: false,
        }
    }
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1)
}

impl EstimatorConfig {
    pub fn new(epsilon: f64, seed: u64) -> EstimatorConfig {
        EstimatorConfig {
            epsilon,
            seed,
            ..EstimatorConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.threads == 0 {
            return Err(Error::InvalidConfig("threads must be >= 1".into()));
        }
        if self.max_trunc_len == 0 || self.max_walks_per_node == 0 || self.max_tree_samples == 0 {
            return Err(Error::InvalidConfig("caps must be positive".into()));
        }
        if let Some(l) = self.lambda_override {
            if !(l > 0.0 && l < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "lambda override must lie in (0, 1), got {l}"
                )));
            }
        }
        if let Some(d) = self.failure_prob_delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "failure probability must lie in (0, 1), got {d}"
                )));
            }
        }
        Ok(())
    }

    /// Bernstein failure probability, defaulting to `1/n`.
    pub fn delta(&self, n: usize) -> f64 {
        self.failure_prob_delta.unwrap_or(1.0 / n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_validates() {
        EstimatorConfig::default().validate().unwrap();
    }

    #[test]
    fn bad_epsilon_rejected() {
        let cfg = EstimatorConfig::new(0.0, 1);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bad_lambda_override_rejected() {
        let cfg = EstimatorConfig {
            lambda_override: Some(1.5),
            ..EstimatorConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}

//! Estimation of Kemeny's constant for strongly connected digraphs.
//!
//! Kemeny's constant of a random walk is the expected hitting time into a
//! target drawn from the stationary distribution; it equals the trace of
//! the fundamental matrix of the chain. This crate provides:
//!
//! * [`graph`] — CSR digraphs, edge-list ingestion, largest strongly
//!   connected component extraction and diameter statistics;
//! * [`spectral`] — stationary distribution and `|lambda_2|` by power
//!   iteration, plus a dense LU oracle for the exact constant, walk
//!   centrality and the submatrix-trace identity;
//! * [`walk`] — truncated-random-walk estimators (subset-sampling adaptive
//!   estimator, its full-start-set ablation, and a dynamic-depth baseline);
//! * [`tree`] — a loop-erased-walk sampler of incoming rooted spanning
//!   trees and the tree-based estimator built on it;
//! * [`synth`] — deterministic strongly connected test fixtures.
//!
//! All estimators are deterministic given `(seed, config)` and independent
//! of the worker thread count.

pub mod config;
pub mod dense;
pub mod error;
pub mod graph;
pub mod report;
pub mod rng;
pub mod spectral;
pub mod synth;
pub mod tree;
pub mod walk;

pub use config::{CombineMode, EstimatorConfig};
pub use error::{Error, Result};
pub use graph::{
    detect_format, diameter, graph_stats, load_edge_list, DiameterMode, Digraph, EdgeListFormat,
    GraphStats, GraphStatsOpts,
};
pub use report::{EstimateReport, ResolvedParams};
pub use spectral::{
    exact_kemeny, exact_submatrix_trace, exact_walk_centrality, fundamental_matrix,
    second_eigenvalue_modulus, stationary_dense, stationary_distribution, LambdaEstimate,
    LambdaOpts, PiEstimate, PowerIterOpts, SpectralInfo, DEFAULT_DENSE_LIMIT,
};
pub use tree::{
    phi_s_estimate, sample_in_tree, select_root, tree_mc, tree_trace_estimate, trunc_len_diag,
    verify_in_tree, TreeSampleStats,
};
pub use walk::{
    ablation_mc, bernstein_halfwidth, dynamic_mc, improved_mc, simulate_truncated_walk,
    subset_size, trunc_len_improved, WalkStats,
};

//! Python extension module `kemeny_mc`: digraph loading, the exact dense
//! oracle and the Monte Carlo estimators, with reports returned as dicts.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use kemeny_core::config::{CombineMode, EstimatorConfig};
use kemeny_core::graph::{
    self, graph_stats, DiameterMode, EdgeListFormat, GraphStats, GraphStatsOpts,
};
use kemeny_core::spectral::{
    self, LambdaOpts, PowerIterOpts, SpectralInfo, DEFAULT_DENSE_LIMIT,
};
use kemeny_core::{synth, tree, walk, EstimateReport, Error};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Parse { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Immutable strongly-connected-component-capable digraph handle.
#[pyclass(frozen)]
struct Digraph {
    inner: kemeny_core::Digraph,
}

#[pymethods]
impl Digraph {
    /// Parse an edge-list file ("src dst" per line; '#'/'%' comments).
    #[staticmethod]
    #[pyo3(signature = (path, format=None))]
    fn load(path: PathBuf, format: Option<&str>) -> PyResult<Digraph> {
        let fmt = match format {
            None => graph::detect_format(&path).map_err(to_py_err)?,
            Some("whitespace") => EdgeListFormat::Whitespace,
            Some("csv") => EdgeListFormat::Csv,
            Some(other) => {
                return Err(PyValueError::new_err(format!(
                    "unknown format {other:?}; expected 'whitespace' or 'csv'"
                )))
            }
        };
        Ok(Digraph {
            inner: graph::load_edge_list(&path, fmt).map_err(to_py_err)?,
        })
    }

    /// Build from a list of (src, dst) pairs.
    #[staticmethod]
    fn from_edges(edges: Vec<(u64, u64)>) -> PyResult<Digraph> {
        Ok(Digraph {
            inner: kemeny_core::Digraph::from_edges(&edges).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.edge_count()
    }

    fn out_neighbors(&self, i: usize) -> PyResult<Vec<usize>> {
        if i >= self.inner.node_count() {
            return Err(PyValueError::new_err(format!("node {i} out of range")));
        }
        Ok(self.inner.out_neighbors(i).iter().map(|&v| v as usize).collect())
    }

    fn label(&self, i: usize) -> PyResult<u64> {
        if i >= self.inner.node_count() {
            return Err(PyValueError::new_err(format!("node {i} out of range")));
        }
        Ok(self.inner.label(i))
    }

    fn is_strongly_connected(&self) -> bool {
        self.inner.is_strongly_connected()
    }

    fn largest_scc(&self) -> Digraph {
        Digraph {
            inner: self.inner.largest_scc(),
        }
    }

    /// Degree and diameter statistics as a dict. Exact diameter up to
    /// `exact_limit` nodes, double-sweep estimate above.
    #[pyo3(signature = (exact_limit=10_000))]
    fn stats<'py>(&self, py: Python<'py>, exact_limit: usize) -> PyResult<Bound<'py, PyDict>> {
        let stats = compute_stats(&self.inner, exact_limit).map_err(to_py_err)?;
        let d = PyDict::new(py);
        d.set_item("d_max", stats.d_max)?;
        d.set_item("tau", stats.tau)?;
        d.set_item("tau_is_exact", stats.tau_is_exact)?;
        d.set_item("degree_histogram", stats.degree_histogram)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Digraph(n={}, m={})",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

fn compute_stats(g: &kemeny_core::Digraph, exact_limit: usize) -> Result<GraphStats, Error> {
    let opts = GraphStatsOpts { exact_limit };
    let mode = if g.node_count() <= exact_limit {
        DiameterMode::Exact
    } else {
        DiameterMode::DoubleSweepEstimate
    };
    graph_stats(g, mode, opts)
}

/// Stationary distribution by damped power iteration.
#[pyfunction]
#[pyo3(signature = (g, tol=1e-12, max_iter=200_000, damping=0.5))]
fn stationary_distribution(
    g: &Digraph,
    tol: f64,
    max_iter: usize,
    damping: f64,
) -> PyResult<Vec<f64>> {
    let opts = PowerIterOpts {
        tol,
        max_iter,
        damping,
    };
    Ok(spectral::stationary_distribution(&g.inner, opts)
        .map_err(to_py_err)?
        .values)
}

/// Modulus of the second-largest eigenvalue of the transition matrix.
#[pyfunction]
#[pyo3(signature = (g, tol=1e-10, max_iter=100_000))]
fn second_eigenvalue_modulus(g: &Digraph, tol: f64, max_iter: usize) -> PyResult<f64> {
    let pi = spectral::stationary_distribution(&g.inner, PowerIterOpts::default())
        .map_err(to_py_err)?;
    Ok(
        spectral::second_eigenvalue_modulus(&g.inner, &pi.values, LambdaOpts { tol, max_iter })
            .map_err(to_py_err)?
            .value,
    )
}

/// Exact Kemeny constant (dense O(n^3) oracle).
#[pyfunction]
#[pyo3(signature = (g, dense_limit=DEFAULT_DENSE_LIMIT))]
fn exact_kemeny(g: &Digraph, dense_limit: usize) -> PyResult<f64> {
    spectral::exact_kemeny(&g.inner, dense_limit).map_err(to_py_err)
}

/// Exact walk centrality of node `s` (mean stationary hitting time).
#[pyfunction]
#[pyo3(signature = (g, s, dense_limit=DEFAULT_DENSE_LIMIT))]
fn exact_walk_centrality(g: &Digraph, s: usize, dense_limit: usize) -> PyResult<f64> {
    spectral::exact_walk_centrality(&g.inner, s, dense_limit).map_err(to_py_err)
}

/// Exact `trace((I - P_-s)^{-1})`.
#[pyfunction]
#[pyo3(signature = (g, s, dense_limit=DEFAULT_DENSE_LIMIT))]
fn exact_submatrix_trace(g: &Digraph, s: usize, dense_limit: usize) -> PyResult<f64> {
    spectral::exact_submatrix_trace(&g.inner, s, dense_limit).map_err(to_py_err)
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    epsilon: f64,
    seed: u64,
    threads: Option<usize>,
    lambda: Option<f64>,
    tau: Option<usize>,
    trunc_len: Option<usize>,
    subset: Option<usize>,
    max_l: usize,
    max_walks: u64,
    max_trees: u64,
    combine: &str,
    strict_sup: bool,
    conservative_stop: bool,
    dynamic_threshold: Option<f64>,
    dynamic_walks: Option<u64>,
) -> PyResult<EstimatorConfig> {
    let combine = match combine {
        "corrected" => CombineMode::Corrected,
        "as-printed" => CombineMode::AsPrinted,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown combine mode {other:?}; expected 'corrected' or 'as-printed'"
            )))
        }
    };
    Ok(EstimatorConfig {
        epsilon,
        seed,
        threads: threads.unwrap_or_else(kemeny_core::config::default_threads),
        lambda_override: lambda,
        tau_override: tau,
        d_max_override: None,
        trunc_len_override: trunc_len,
        subset_override: subset,
        failure_prob_delta: None,
        max_trunc_len: max_l,
        max_walks_per_node: max_walks,
        max_tree_samples: max_trees,
        adaptive_stop: true,
        conservative_stop,
        strict_sup,
        combine,
        dynamic_threshold,
        dynamic_walks_per_node: dynamic_walks,
        strict_caps: false,
    })
}

fn report_dict<'py>(py: Python<'py>, report: &EstimateReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("algorithm", &report.algorithm)?;
    d.set_item("estimate", report.estimate)?;
    d.set_item("epsilon", report.epsilon)?;
    d.set_item("seed", report.seed)?;
    d.set_item("threads", report.threads)?;
    d.set_item("total_steps", report.total_steps)?;
    d.set_item("elapsed_ms", report.elapsed_ms)?;
    d.set_item("warnings", report.warnings.clone())?;
    let params = PyDict::new(py);
    macro_rules! opt {
        ($name:ident) => {
            if let Some(v) = &report.params.$name {
                params.set_item(stringify!($name), v.clone())?;
            }
        };
    }
    opt!(lambda);
    opt!(trunc_len);
    opt!(walks_per_node_cap);
    opt!(subset_size);
    opt!(delta);
    opt!(stop_threshold);
    opt!(root);
    opt!(tau);
    opt!(tau_is_estimate);
    opt!(d_max);
    opt!(tree_samples);
    opt!(tree_samples_theoretical);
    opt!(phi_trunc_len);
    opt!(phi_walk_cap);
    opt!(phi_walks_used);
    opt!(combine);
    opt!(dynamic_threshold);
    opt!(reconstruction);
    opt!(rounds);
    opt!(early_stopped_nodes);
    opt!(walks_total);
    d.set_item("params", params)?;
    Ok(d)
}

fn spectral_for_walk(g: &Digraph, lambda: Option<f64>) -> Result<SpectralInfo, Error> {
    if lambda.is_some() {
        return Ok(SpectralInfo::default());
    }
    let pi = spectral::stationary_distribution(&g.inner, PowerIterOpts::default())?;
    let l = spectral::second_eigenvalue_modulus(&g.inner, &pi.values, LambdaOpts::default())?;
    Ok(SpectralInfo {
        pi: Some(pi),
        lambda: Some(l),
    })
}

/// Subset-sampling adaptive truncated-walk estimator.
#[pyfunction]
#[pyo3(signature = (g, epsilon=0.2, seed=0, threads=None, lambda_=None, subset=None,
                    max_l=100_000, max_walks=10_000_000, strict_sup=false,
                    conservative_stop=false))]
#[allow(clippy::too_many_arguments)]
fn improved_mc<'py>(
    py: Python<'py>,
    g: &Digraph,
    epsilon: f64,
    seed: u64,
    threads: Option<usize>,
    lambda_: Option<f64>,
    subset: Option<usize>,
    max_l: usize,
    max_walks: u64,
    strict_sup: bool,
    conservative_stop: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = build_config(
        epsilon, seed, threads, lambda_, None, None, subset, max_l, max_walks, 100_000,
        "corrected", strict_sup, conservative_stop, None, None,
    )?;
    let spec = spectral_for_walk(g, lambda_).map_err(to_py_err)?;
    let report = walk::improved_mc(&g.inner, &spec, &cfg).map_err(to_py_err)?;
    report_dict(py, &report)
}

/// Adaptive-stopping-only ablation (starts from every node).
#[pyfunction]
#[pyo3(signature = (g, epsilon=0.2, seed=0, threads=None, lambda_=None,
                    max_l=100_000, max_walks=10_000_000, strict_sup=false,
                    conservative_stop=false))]
#[allow(clippy::too_many_arguments)]
fn ablation_mc<'py>(
    py: Python<'py>,
    g: &Digraph,
    epsilon: f64,
    seed: u64,
    threads: Option<usize>,
    lambda_: Option<f64>,
    max_l: usize,
    max_walks: u64,
    strict_sup: bool,
    conservative_stop: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = build_config(
        epsilon, seed, threads, lambda_, None, None, None, max_l, max_walks, 100_000,
        "corrected", strict_sup, conservative_stop, None, None,
    )?;
    let spec = spectral_for_walk(g, lambda_).map_err(to_py_err)?;
    let report = walk::ablation_mc(&g.inner, &spec, &cfg).map_err(to_py_err)?;
    report_dict(py, &report)
}

/// Dynamic-depth baseline.
#[pyfunction]
#[pyo3(signature = (g, epsilon=0.2, seed=0, threads=None, dynamic_threshold=None,
                    dynamic_walks=None, max_l=100_000))]
#[allow(clippy::too_many_arguments)]
fn dynamic_mc<'py>(
    py: Python<'py>,
    g: &Digraph,
    epsilon: f64,
    seed: u64,
    threads: Option<usize>,
    dynamic_threshold: Option<f64>,
    dynamic_walks: Option<u64>,
    max_l: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = build_config(
        epsilon, seed, threads, None, None, None, None, max_l, 10_000_000, 100_000,
        "corrected", false, false, dynamic_threshold, dynamic_walks,
    )?;
    let report = walk::dynamic_mc(&g.inner, &cfg).map_err(to_py_err)?;
    report_dict(py, &report)
}

/// Spanning-tree-sampling estimator.
#[pyfunction]
#[pyo3(signature = (g, epsilon=0.2, seed=0, threads=None, tau=None, trunc_len=None,
                    max_trees=100_000, max_walks=10_000_000, max_l=100_000,
                    combine="corrected"))]
#[allow(clippy::too_many_arguments)]
fn tree_mc<'py>(
    py: Python<'py>,
    g: &Digraph,
    epsilon: f64,
    seed: u64,
    threads: Option<usize>,
    tau: Option<usize>,
    trunc_len: Option<usize>,
    max_trees: u64,
    max_walks: u64,
    max_l: usize,
    combine: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = build_config(
        epsilon, seed, threads, None, tau, trunc_len, None, max_l, max_walks, max_trees,
        combine, false, false, None, None,
    )?;
    let pi = spectral::stationary_distribution(&g.inner, PowerIterOpts::default())
        .map_err(to_py_err)?;
    let spec = SpectralInfo::from_pi(pi);
    let stats = compute_stats(&g.inner, 10_000).map_err(to_py_err)?;
    let report = tree::tree_mc(&g.inner, &spec, &stats, &cfg).map_err(to_py_err)?;
    report_dict(py, &report)
}

/// Deterministic strongly connected test graph: directed ring plus random
/// chords.
#[pyfunction]
#[pyo3(signature = (n, extra=2, seed=0))]
fn ring_with_chords(n: usize, extra: usize, seed: u64) -> Digraph {
    Digraph {
        inner: synth::ring_with_chords(n, extra, seed),
    }
}

#[pymodule]
fn kemeny_mc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Digraph>()?;
    m.add_function(wrap_pyfunction!(stationary_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(second_eigenvalue_modulus, m)?)?;
    m.add_function(wrap_pyfunction!(exact_kemeny, m)?)?;
    m.add_function(wrap_pyfunction!(exact_walk_centrality, m)?)?;
    m.add_function(wrap_pyfunction!(exact_submatrix_trace, m)?)?;
    m.add_function(wrap_pyfunction!(improved_mc, m)?)?;
    m.add_function(wrap_pyfunction!(ablation_mc, m)?)?;
    m.add_function(wrap_pyfunction!(dynamic_mc, m)?)?;
    m.add_function(wrap_pyfunction!(tree_mc, m)?)?;
    m.add_function(wrap_pyfunction!(ring_with_chords, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

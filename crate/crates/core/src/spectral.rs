//! Stationary distribution, second-eigenvalue modulus and the exact dense
//! oracle for Kemeny's constant.
//!
//! The scalable path (used by the estimators) is power iteration; the dense
//! path (used as ground truth at small scale) goes through LU factorization
//! of matrices derived from the transition matrix `P`:
//!
//! * fundamental matrix `F = (I - P + 1 pi^T)^{-1} - 1 pi^T`,
//! * Kemeny's constant `K = trace(F)`,
//! * walk centrality `phi(s) = F[s,s] / pi[s]`,
//! * the root identity `K = trace((I - P_-s)^{-1}) - phi(s)` for any node
//!   `s`, where `P_-s` deletes row and column `s`.

use rand::RngExt;
use serde::Serialize;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::graph::Digraph;
use crate::rng::{self, tag};

/// Default node-count ceiling for the dense (O(n^3)) oracle paths.
pub const DEFAULT_DENSE_LIMIT: usize = 5000;

/// Options for [`stationary_distribution`].
#[derive(Debug, Clone, Copy)]
pub struct PowerIterOpts {
    /// Convergence target for the L1 residual `||pi^T P - pi^T||_1`.
    pub tol: f64,
    pub max_iter: usize,
    /// Damping weight `alpha` in the update `x <- (1-alpha) P^T x + alpha x`.
    /// Damping preserves the stationary vector while removing periodicity;
    /// set to 0 for plain power iteration.
    pub damping: f64,
}

impl Default for PowerIterOpts {
    fn default() -> Self {
        PowerIterOpts {
            tol: 1e-12,
            max_iter: 200_000,
            damping: 0.5,
        }
    }
}

/// Converged stationary distribution.
#[derive(Debug, Clone, Serialize)]
pub struct PiEstimate {
    pub values: Vec<f64>,
    pub iterations: usize,
    /// Final `||pi^T P - pi^T||_1`.
    pub residual: f64,
}

/// Options for [`second_eigenvalue_modulus`].
#[derive(Debug, Clone, Copy)]
pub struct LambdaOpts {
    /// Relative stabilization target for the modulus estimate.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LambdaOpts {
    fn default() -> Self {
        LambdaOpts {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

/// Converged `|lambda_2|` estimate.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaEstimate {
    pub value: f64,
    pub iterations: usize,
    /// Last stabilization delta of the modulus estimate.
    pub residual: f64,
}

/// Precomputed spectral quantities consumed by the estimators. Either half
/// may be absent when the caller only needs the other (or overrides it).
#[derive(Debug, Clone, Default, Serialize)]
pub struct SpectralInfo {
    pub pi: Option<PiEstimate>,
    pub lambda: Option<LambdaEstimate>,
}

impl SpectralInfo {
    /// Compute both the stationary distribution and `|lambda_2|`.
    pub fn compute(g: &Digraph, pi_opts: PowerIterOpts, lambda_opts: LambdaOpts) -> Result<SpectralInfo> {
        let pi = stationary_distribution(g, pi_opts)?;
        let lambda = second_eigenvalue_modulus(g, &pi.values, lambda_opts)?;
        Ok(SpectralInfo {
            pi: Some(pi),
            lambda: Some(lambda),
        })
    }

    pub fn from_pi(pi: PiEstimate) -> SpectralInfo {
        SpectralInfo {
            pi: Some(pi),
            lambda: None,
        }
    }
}

/// Stationary distribution by damped power iteration on `P^T`.
///
/// The residual reported (and tested against `tol`) is the undamped
/// `||x^T P - x^T||_1`, so convergence means `x` is stationary regardless of
/// the damping used to get there.
pub fn stationary_distribution(g: &Digraph, opts: PowerIterOpts) -> Result<PiEstimate> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if !g.all_out_degrees_positive() {
        return Err(Error::NotStronglyConnected(
            "a node has no outgoing edge".into(),
        ));
    }
    if !(0.0..1.0).contains(&opts.damping) {
        return Err(Error::InvalidConfig(format!(
            "damping must lie in [0, 1), got {}",
            opts.damping
        )));
    }
    let mut x = vec![1.0 / n as f64; n];
    let mut y = vec![0.0f64; n];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let nbrs = g.out_neighbors(i);
            let w = x[i] / nbrs.len() as f64;
            for &t in nbrs {
                y[t as usize] += w;
            }
        }
        residual = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
        if residual <= opts.tol {
            if x.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::NonConvergence {
                    iterations: it,
                    residual,
                });
            }
            return Ok(PiEstimate {
                values: x,
                iterations: it,
                residual,
            });
        }
        let a = opts.damping;
        let mut sum = 0.0;
        for i in 0..n {
            x[i] = (1.0 - a) * y[i] + a * x[i];
            sum += x[i];
        }
        // Guard against drift; the update preserves the L1 mass exactly in
        // exact arithmetic.
        for v in x.iter_mut() {
            *v /= sum;
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// Exact stationary distribution by solving the dense linear system
/// `(I - P^T) pi = 0` with one row replaced by the normalization
/// `sum(pi) = 1`. Robust for periodic chains; O(n^3).
pub fn stationary_dense(g: &Digraph, dense_limit: usize) -> Result<Vec<f64>> {
    let n = g.node_count();
    check_dense(n, dense_limit, "dense stationary distribution")?;
    let p = DenseMatrix::transition(g)?;
    let a = DenseMatrix::from_fn(n, |i, j| {
        if i == 0 {
            1.0
        } else {
            let delta = if i == j { 1.0 } else { 0.0 };
            delta - p.get(j, i)
        }
    });
    let mut b = vec![0.0; n];
    b[0] = 1.0;
    let mut pi = a.lu()?.solve(&b);
    let sum: f64 = pi.iter().sum();
    for v in pi.iter_mut() {
        *v /= sum;
    }
    if pi.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NotStronglyConnected(
            "stationary solve produced non-positive mass".into(),
        ));
    }
    Ok(pi)
}

/// Modulus of the second-largest eigenvalue of `P`.
///
/// Restarted Arnoldi iteration on the deflated operator `B = P - 1 pi^T`
/// (whose spectral radius is `|lambda_2|`): a small Krylov basis is built
/// from the current iterate, the dominant eigenvalues are read off the
/// projected Hessenberg matrix, and the iterate is advanced. The small
/// subspace keeps clusters of equal-modulus eigenvalues (complex pairs,
/// rotational symmetries) resolvable, unlike plain power iteration.
/// Estimates that converge to 1 (periodic chains) are rejected.
pub fn second_eigenvalue_modulus(
    g: &Digraph,
    pi: &[f64],
    opts: LambdaOpts,
) -> Result<LambdaEstimate> {
    const KRYLOV: usize = 8;
    let n = g.node_count();
    if n < 2 {
        return Err(Error::SpectralPrecondition(
            "second eigenvalue undefined for a single-node graph".into(),
        ));
    }
    assert_eq!(pi.len(), n);

    let mut rng = rng::stream(0, tag::SPECTRAL, n as u64, 0);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut v);

    let apply = |x: &[f64], out: &mut [f64]| {
        let dot: f64 = pi.iter().zip(x).map(|(a, b)| a * b).sum();
        for (i, o) in out.iter_mut().enumerate() {
            let nbrs = g.out_neighbors(i);
            let mut s = 0.0;
            for &t in nbrs {
                s += x[t as usize];
            }
            *o = s / nbrs.len() as f64 - dot;
        }
    };

    let m = KRYLOV.min(n);
    let mut prev_rho = f64::NAN;
    let mut stable = 0usize;
    let mut residual = f64::INFINITY;
    let mut applications = 0usize;
    while applications < opts.max_iter {
        // Arnoldi factorization B Q_r = Q_{r+1} H from the current iterate.
        let mut basis: Vec<Vec<f64>> = vec![v.clone()];
        let mut h = vec![[0.0f64; KRYLOV]; KRYLOV + 1];
        let mut rank = 0usize;
        let mut happy = false;
        for j in 0..m {
            let mut w = vec![0.0; n];
            apply(&basis[j], &mut w);
            applications += 1;
            // Modified Gram-Schmidt with one reorthogonalization pass.
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c = dot(q, &w);
                    h[i][j] += c;
                    for (wk, qk) in w.iter_mut().zip(q) {
                        *wk -= c * qk;
                    }
                }
            }
            rank = j + 1;
            let norm = l2(&w);
            h[j + 1][j] = norm;
            if norm < 1e-12 {
                happy = true; // exact invariant subspace found
                break;
            }
            w.iter_mut().for_each(|x| *x /= norm);
            basis.push(w);
        }

        if rank == 0 {
            break;
        }
        let rho = hessenberg_spectral_radius(&h, rank);
        if happy || !rho.is_finite() {
            if !rho.is_finite() {
                return Err(Error::NonConvergence {
                    iterations: applications,
                    residual: f64::NAN,
                });
            }
            return finish_lambda(rho, applications, 0.0);
        }

        if prev_rho.is_finite() {
            residual = (rho - prev_rho).abs();
            if residual <= opts.tol * rho.max(1e-12) {
                stable += 1;
                if stable >= 3 {
                    return finish_lambda(rho, applications, residual);
                }
            } else {
                stable = 0;
            }
        }
        prev_rho = rho;
        // Power-advance the iterate by B^m so the next Krylov space leans
        // further into the dominant eigenspace cluster.
        let mut next = vec![0.0; n];
        for _ in 0..m {
            apply(&v, &mut next);
            applications += 1;
            std::mem::swap(&mut v, &mut next);
            let norm = l2(&v);
            if norm < 1e-250 {
                return finish_lambda(0.0, applications, 0.0);
            }
            v.iter_mut().for_each(|x| *x /= norm);
        }
    }
    Err(Error::NonConvergence {
        iterations: applications,
        residual,
    })
}

fn finish_lambda(rho: f64, iterations: usize, residual: f64) -> Result<LambdaEstimate> {
    if rho < 1e-100 {
        return Ok(LambdaEstimate {
            value: 0.0,
            iterations,
            residual,
        });
    }
    if rho >= 1.0 - 1e-8 {
        return Err(Error::SpectralPrecondition(format!(
            "second eigenvalue modulus converged to {rho:.12} >= 1; the chain looks periodic. \
             Provide a lambda override.",
        )));
    }
    Ok(LambdaEstimate {
        value: rho,
        iterations,
        residual,
    })
}

/// Largest eigenvalue modulus of the leading `r x r` block of an upper
/// Hessenberg matrix, via Durand-Kerner root finding on the characteristic
/// polynomial `det(z I - H)` (evaluated directly by complex elimination).
fn hessenberg_spectral_radius(h: &[[f64; 8]], r: usize) -> f64 {
    let eval = |z: (f64, f64)| -> (f64, f64) {
        // det(z I - H) by Gaussian elimination with partial pivoting.
        let mut a = vec![[(0.0f64, 0.0f64); 8]; r];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate().take(r) {
                let v = -h[i][j];
                *cell = if i == j { (z.0 + v, z.1) } else { (v, 0.0) };
            }
        }
        let mut det = (1.0f64, 0.0f64);
        for col in 0..r {
            let mut piv = col;
            let mut best = cnorm(a[col][col]);
            for row in col + 1..r {
                let m = cnorm(a[row][col]);
                if m > best {
                    best = m;
                    piv = row;
                }
            }
            if best < 1e-300 {
                return (0.0, 0.0);
            }
            if piv != col {
                a.swap(piv, col);
                det = cneg(det);
            }
            det = cmul(det, a[col][col]);
            for row in col + 1..r {
                let f = cdiv(a[row][col], a[col][col]);
                for j in col..r {
                    a[row][j] = csub(a[row][j], cmul(f, a[col][j]));
                }
            }
        }
        det
    };

    // Durand-Kerner: simultaneous iteration on all r roots.
    let mut roots: Vec<(f64, f64)> = (0..r)
        .map(|k| cpowi((0.4, 0.9), k as u32 + 1))
        .collect();
    for _ in 0..200 {
        let mut max_step = 0.0f64;
        for k in 0..r {
            let pk = eval(roots[k]);
            let mut denom = (1.0, 0.0);
            for (j, &rj) in roots.iter().enumerate() {
                if j != k {
                    denom = cmul(denom, csub(roots[k], rj));
                }
            }
            if cnorm(denom) < 1e-300 {
                continue;
            }
            let step = cdiv(pk, denom);
            roots[k] = csub(roots[k], step);
            max_step = max_step.max(cnorm(step));
        }
        if max_step < 1e-13 {
            break;
        }
    }
    roots.iter().map(|&z| cnorm(z)).fold(0.0, f64::max)
}

type C = (f64, f64);

fn cmul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn csub(a: C, b: C) -> C {
    (a.0 - b.0, a.1 - b.1)
}

fn cneg(a: C) -> C {
    (-a.0, -a.1)
}

fn cdiv(a: C, b: C) -> C {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

fn cnorm(a: C) -> f64 {
    a.0.hypot(a.1)
}

fn cpowi(a: C, k: u32) -> C {
    let mut out = (1.0, 0.0);
    for _ in 0..k {
        out = cmul(out, a);
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) {
    let norm = l2(a);
    if norm > 0.0 {
        a.iter_mut().for_each(|v| *v /= norm);
    }
}

fn check_dense(n: usize, limit: usize, operation: &'static str) -> Result<()> {
    if n > limit {
        Err(Error::DimensionLimit {
            n,
            limit,
            operation,
        })
    } else {
        Ok(())
    }
}

/// Fundamental matrix `F = (I - P + 1 pi^T)^{-1} - 1 pi^T`.
///
/// Satisfies `F 1 = 0` and `pi^T F = 0`.
pub fn fundamental_matrix(g: &Digraph, pi: &[f64], dense_limit: usize) -> Result<DenseMatrix> {
    let n = g.node_count();
    check_dense(n, dense_limit, "fundamental matrix")?;
    assert_eq!(pi.len(), n);
    let p = DenseMatrix::transition(g)?;
    let a = DenseMatrix::from_fn(n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - p.get(i, j) + pi[j]
    });
    let inv = a.lu()?.inverse();
    Ok(DenseMatrix::from_fn(n, |i, j| inv.get(i, j) - pi[j]))
}

/// Exact Kemeny constant `K = trace(F)`.
pub fn exact_kemeny(g: &Digraph, dense_limit: usize) -> Result<f64> {
    let pi = stationary_dense(g, dense_limit)?;
    let f = fundamental_matrix(g, &pi, dense_limit)?;
    Ok(f.trace())
}

/// Exact walk centrality `phi(s) = F[s,s] / pi[s]` (mean stationary hitting
/// time into `s`).
pub fn exact_walk_centrality(g: &Digraph, s: usize, dense_limit: usize) -> Result<f64> {
    let pi = stationary_dense(g, dense_limit)?;
    let f = fundamental_matrix(g, &pi, dense_limit)?;
    Ok(f.get(s, s) / pi[s])
}

/// Exact `trace((I - P_-s)^{-1})` where row and column `s` of `P` are
/// deleted.
pub fn exact_submatrix_trace(g: &Digraph, s: usize, dense_limit: usize) -> Result<f64> {
    let n = g.node_count();
    check_dense(n, dense_limit, "submatrix trace")?;
    assert!(s < n);
    let p = DenseMatrix::transition(g)?;
    let keep: Vec<usize> = (0..n).filter(|&i| i != s).collect();
    let m = DenseMatrix::from_fn(n - 1, |i, j| {
        let (gi, gj) = (keep[i], keep[j]);
        let delta = if gi == gj { 1.0 } else { 0.0 };
        delta - p.get(gi, gj)
    });
    Ok(m.lu()?.inverse_trace())
}

//! Small dense matrices with an LU (partial pivoting) kernel.
//!
//! Only used by the exact oracle paths; everything here is O(n^2) storage
//! and up to O(n^3) time, guarded by the caller's dense limit.

use crate::error::{Error, Result};
use crate::graph::Digraph;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> DenseMatrix {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> DenseMatrix {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        DenseMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    dst[j] += a * orow[j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, x.len());
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Uniform random-walk transition matrix of `g` as a dense array.
    pub fn transition(g: &Digraph) -> Result<DenseMatrix> {
        let n = g.node_count();
        let mut p = DenseMatrix::zeros(n);
        for i in 0..n {
            let nbrs = g.out_neighbors(i);
            if nbrs.is_empty() {
                return Err(Error::NotStronglyConnected(format!(
                    "node {i} has no outgoing edges"
                )));
            }
            let w = 1.0 / nbrs.len() as f64;
            for &j in nbrs {
                p.set(i, j as usize, w);
            }
        }
        Ok(p)
    }

    /// LU factorization with partial pivoting (in place).
    pub fn lu(mut self) -> Result<LuFactors> {
        let n = self.n;
        let mut piv: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut best = col;
            let mut best_val = self.get(col, col).abs();
            for r in col + 1..n {
                let v = self.get(r, col).abs();
                if v > best_val {
                    best = r;
                    best_val = v;
                }
            }
            if best_val < 1e-300 {
                return Err(Error::SingularMatrix {
                    pivot: best_val,
                    column: col,
                });
            }
            if best != col {
                for j in 0..n {
                    self.data.swap(col * n + j, best * n + j);
                }
                piv.swap(col, best);
            }
            let pivot = self.get(col, col);
            for r in col + 1..n {
                let factor = self.get(r, col) / pivot;
                self.set(r, col, factor);
                if factor != 0.0 {
                    let (upper, lower) = self.data.split_at_mut(r * n);
                    let urow = &upper[col * n..(col + 1) * n];
                    let lrow = &mut lower[..n];
                    for j in col + 1..n {
                        lrow[j] -= factor * urow[j];
                    }
                }
            }
        }
        Ok(LuFactors { lu: self, piv })
    }
}

/// Factored form produced by [`DenseMatrix::lu`].
pub struct LuFactors {
    lu: DenseMatrix,
    piv: Vec<usize>,
}

impl LuFactors {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        // Forward substitution with unit lower factor.
        for i in 1..n {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in 0..i {
                s -= row[j] * x[j];
            }
            x[i] = s;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in i + 1..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        x
    }

    /// Full inverse (n solves against unit vectors).
    pub fn inverse(&self) -> DenseMatrix {
        let n = self.lu.n;
        let mut inv = DenseMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for col in 0..n {
            e[col] = 1.0;
            let x = self.solve(&e);
            e[col] = 0.0;
            for (row, v) in x.into_iter().enumerate() {
                inv.set(row, col, v);
            }
        }
        inv
    }

    /// Trace of the inverse without storing it.
    pub fn inverse_trace(&self) -> f64 {
        let n = self.lu.n;
        let mut tr = 0.0;
        let mut e = vec![0.0; n];
        for col in 0..n {
            e[col] = 1.0;
            let x = self.solve(&e);
            e[col] = 0.0;
            tr += x[col];
        }
        tr
    }
}

//! Shared test oracles, kept independent of the implementation paths they
//! check: hitting times come from a direct linear solve, eigenvalues from
//! nalgebra's Schur decomposition, distances from Floyd-Warshall, and
//! expected return counts from dense matrix powers.

#![allow(dead_code)]

use kemeny_core::dense::DenseMatrix;
use kemeny_core::graph::Digraph;
use kemeny_core::synth;

/// `|lambda_2|` of the transition matrix via a dense eigensolver.
pub fn lambda_oracle(g: &Digraph) -> f64 {
    let n = g.node_count();
    let mut p = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let w = 1.0 / g.out_degree(i) as f64;
        for &j in g.out_neighbors(i) {
            p[(i, j as usize)] += w;
        }
    }
    let mut mods: Vec<f64> = p.complex_eigenvalues().iter().map(|c| c.norm()).collect();
    mods.sort_by(|a, b| b.partial_cmp(a).unwrap());
    mods[1]
}

/// Expected hitting times into `s`: solve `(I - P_-s) h = 1`, with
/// `h[s] = 0`.
pub fn hitting_times(g: &Digraph, s: usize) -> Vec<f64> {
    let n = g.node_count();
    let p = DenseMatrix::transition(g).unwrap();
    let keep: Vec<usize> = (0..n).filter(|&i| i != s).collect();
    let m = DenseMatrix::from_fn(n - 1, |i, j| {
        let (gi, gj) = (keep[i], keep[j]);
        let delta = if gi == gj { 1.0 } else { 0.0 };
        delta - p.get(gi, gj)
    });
    let sol = m.lu().unwrap().solve(&vec![1.0; n - 1]);
    let mut h = vec![0.0; n];
    for (idx, &node) in keep.iter().enumerate() {
        h[node] = sol[idx];
    }
    h
}

/// Exact diameter by Floyd-Warshall.
pub fn floyd_warshall_diameter(g: &Digraph) -> usize {
    let n = g.node_count();
    const INF: u32 = u32::MAX / 4;
    let mut dist = vec![INF; n * n];
    for i in 0..n {
        dist[i * n + i] = 0;
        for &j in g.out_neighbors(i) {
            if i != j as usize {
                dist[i * n + j as usize] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i * n + k];
            if dik >= INF {
                continue;
            }
            for j in 0..n {
                let alt = dik + dist[k * n + j];
                if alt < dist[i * n + j] {
                    dist[i * n + j] = alt;
                }
            }
        }
    }
    dist.iter().copied().filter(|&d| d < INF).max().unwrap() as usize
}

/// `sums[l][i] = sum_{k=1}^{l} (P^k)_{i,i}` for `l` in `1..=l_max`:
/// the expected return count of an `l`-truncated walk from `i`.
pub fn cumulative_return_means(g: &Digraph, l_max: usize) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let p = DenseMatrix::transition(g).unwrap();
    let mut power = p.clone();
    let mut acc = vec![0.0f64; n];
    let mut out = Vec::with_capacity(l_max);
    for _ in 1..=l_max {
        for i in 0..n {
            acc[i] += power.get(i, i);
        }
        out.push(acc.clone());
        power = power.matmul(&p);
    }
    out
}

/// `(P^k)_{s,s}` accumulated for `k = 1..=l` via sparse vector iteration;
/// cheap even for large `l`.
pub fn return_mean_single(g: &Digraph, s: usize, l: usize) -> f64 {
    let n = g.node_count();
    let mut x = vec![0.0f64; n];
    let mut y = vec![0.0f64; n];
    x[s] = 1.0;
    let mut acc = 0.0;
    for _ in 1..=l {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            let nbrs = g.out_neighbors(i);
            let w = x[i] / nbrs.len() as f64;
            for &t in nbrs {
                y[t as usize] += w;
            }
        }
        std::mem::swap(&mut x, &mut y);
        acc += x[s];
    }
    acc
}

/// Deterministic corpus of strongly connected digraphs with sizes in
/// `[min_n, max_n]`, mixing ring-plus-chords (with and without a self-loop)
/// and G(n,p)-LSCC shapes.
pub fn corpus(count: usize, min_n: usize, max_n: usize, seed: u64) -> Vec<Digraph> {
    let mut graphs = Vec::with_capacity(count);
    let mut attempt = 0u64;
    while graphs.len() < count {
        let k = graphs.len() as u64;
        let pick = (k + attempt) % 3;
        let n = min_n + ((seed ^ (k * 0x9e37)) as usize + attempt as usize * 7) % (max_n - min_n + 1);
        let extra = 1 + (k as usize % 3);
        let g = match pick {
            0 => synth::ring_with_chords(n, extra, seed ^ k),
            1 => synth::ring_with_chords_aperiodic(n, extra, seed ^ k),
            _ => synth::gnp_lscc(n.max(6), 3.0, seed ^ k),
        };
        attempt += 1;
        if g.node_count() < min_n || g.node_count() > max_n || !g.is_strongly_connected() {
            continue;
        }
        graphs.push(g);
    }
    graphs
}

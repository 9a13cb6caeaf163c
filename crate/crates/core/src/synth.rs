//! Small synthetic graph generators used as test fixtures and benchmark
//! inputs. Every generator returns a strongly connected digraph.

use rand::RngExt;

use crate::graph::Digraph;
use crate::rng::{self, tag};

/// Directed n-cycle `0 -> 1 -> ... -> n-1 -> 0`.
pub fn directed_cycle(n: usize) -> Digraph {
    assert!(n >= 1);
    let edges: Vec<(u64, u64)> = (0..n as u64).map(|i| (i, (i + 1) % n as u64)).collect();
    Digraph::from_edges(&edges).expect("cycle is nonempty")
}

/// Complete bidirectional graph K_n (no self-loops).
pub fn complete_bidirectional(n: usize) -> Digraph {
    assert!(n >= 2);
    let mut edges = Vec::with_capacity(n * (n - 1));
    for i in 0..n as u64 {
        for j in 0..n as u64 {
            if i != j {
                edges.push((i, j));
            }
        }
    }
    Digraph::from_edges(&edges).expect("clique is nonempty")
}

/// Directed ring plus `extra` uniformly random out-edges per node.
/// The ring keeps the graph strongly connected; the chords make it mix.
pub fn ring_with_chords(n: usize, extra: usize, seed: u64) -> Digraph {
    let mut rng = rng::stream(seed, tag::SYNTH, n as u64, extra as u64);
    let mut edges = Vec::with_capacity(n * (1 + extra));
    for i in 0..n {
        edges.push((i as u64, ((i + 1) % n) as u64));
        for _ in 0..extra {
            edges.push((i as u64, rng.random_range(0..n) as u64));
        }
    }
    Digraph::from_edges(&edges).expect("ring is nonempty")
}

/// Ring with chords plus a self-loop at node 0, making the chain aperiodic
/// by construction.
pub fn ring_with_chords_aperiodic(n: usize, extra: usize, seed: u64) -> Digraph {
    let mut rng = rng::stream(seed, tag::SYNTH, n as u64, extra as u64 ^ 0xA5);
    let mut edges = Vec::with_capacity(n * (1 + extra) + 1);
    edges.push((0, 0));
    for i in 0..n {
        edges.push((i as u64, ((i + 1) % n) as u64));
        for _ in 0..extra {
            edges.push((i as u64, rng.random_range(0..n) as u64));
        }
    }
    Digraph::from_edges(&edges).expect("ring is nonempty")
}

/// Ring with chords where every node additionally points at node 0. The hub
/// concentrates stationary mass, which keeps absorbing walks short.
pub fn ring_with_chords_hub(n: usize, extra: usize, seed: u64) -> Digraph {
    let mut rng = rng::stream(seed, tag::SYNTH, n as u64, extra as u64 ^ 0x48);
    let mut edges = Vec::with_capacity(n * (2 + extra));
    for i in 0..n {
        edges.push((i as u64, ((i + 1) % n) as u64));
        edges.push((i as u64, 0));
        for _ in 0..extra {
            edges.push((i as u64, rng.random_range(0..n) as u64));
        }
    }
    Digraph::from_edges(&edges).expect("ring is nonempty")
}

/// Generalized de Bruijn digraph (`i -> (d i + j) mod n` for `j < d`) with
/// an extra edge from every node to 0. Requires `d^2 >= n`, which pins the
/// diameter at 2; the hub edge concentrates stationary mass on node 0.
/// Deterministic (no RNG).
pub fn generalized_de_bruijn_hub(n: usize, d: usize) -> Digraph {
    assert!(d >= 2 && d < n, "need 2 <= d < n");
    assert!(d * d >= n, "need d^2 >= n for diameter 2");
    let mut edges = Vec::with_capacity(n * (d + 1));
    for i in 0..n {
        edges.push((i as u64, 0));
        for j in 0..d {
            edges.push((i as u64, ((d * i + j) % n) as u64));
        }
    }
    Digraph::from_edges(&edges).expect("nonempty")
}

/// Two ring-with-chords communities of `n_half` nodes joined by `bridges`
/// bidirected edges, plus a self-loop at node 0. Few bridges make the chain
/// mix slowly (second eigenvalue close to 1).
pub fn two_community(n_half: usize, extra: usize, bridges: usize, seed: u64) -> Digraph {
    let mut rng = rng::stream(seed, tag::SYNTH, n_half as u64, bridges as u64 ^ 0x2c);
    let mut edges = Vec::new();
    edges.push((0u64, 0u64));
    for base in [0usize, n_half] {
        for i in 0..n_half {
            let at = (base + i) as u64;
            edges.push((at, (base + (i + 1) % n_half) as u64));
            for _ in 0..extra {
                edges.push((at, (base + rng.random_range(0..n_half)) as u64));
            }
        }
    }
    for _ in 0..bridges.max(1) {
        let a = rng.random_range(0..n_half) as u64;
        let b = (n_half + rng.random_range(0..n_half)) as u64;
        edges.push((a, b));
        edges.push((b, a));
    }
    Digraph::from_edges(&edges).expect("communities are nonempty")
}

/// Random G(n, p)-style digraph reduced to its largest strongly connected
/// component. Size varies with the draw; useful for corpus variety.
pub fn gnp_lscc(n: usize, avg_out: f64, seed: u64) -> Digraph {
    let mut rng = rng::stream(seed, tag::SYNTH, n as u64, avg_out.to_bits());
    let p = (avg_out / n as f64).min(1.0);
    let mut edges = Vec::new();
    for i in 0..n as u64 {
        for j in 0..n as u64 {
            if i != j && rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    if edges.is_empty() {
        return directed_cycle(1.max(n.min(2)));
    }
    Digraph::from_edges(&edges)
        .expect("nonempty edge set")
        .largest_scc()
}

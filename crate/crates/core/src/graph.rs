//! Immutable CSR digraph, edge-list ingestion and structural statistics.
//!
//! Node ids from the input file are densely re-indexed in ascending order of
//! the original ids; the original labels are kept for reporting. Duplicate
//! edges are collapsed and self-loops are kept. The transition matrix of the
//! random walk is implicit: from node `i` the walker moves to a uniformly
//! random entry of `out_neighbors(i)`.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Edge-list file flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeListFormat {
    /// One edge per line, fields separated by whitespace. Extra trailing
    /// fields (weights, timestamps) are ignored.
    Whitespace,
    /// One edge per line, fields separated by commas.
    Csv,
}

/// Immutable digraph in compressed sparse row form (out-adjacency).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    m: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    /// Original node id per internal id; `None` when the two coincide.
    labels: Option<Vec<u64>>,
    /// Cached at construction: no node has out-degree 0.
    positive_degrees: bool,
}

impl Digraph {
    /// Build a digraph from raw edges over arbitrary non-negative ids.
    ///
    /// Ids are densely re-indexed in ascending order of the original id.
    /// Duplicate edges collapse to one; self-loops are kept.
    pub fn from_edges(edges: &[(u64, u64)]) -> Result<Digraph> {
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut ids: Vec<u64> = Vec::with_capacity(edges.len() * 2);
        for &(s, t) in edges {
            ids.push(s);
            ids.push(t);
        }
        ids.sort_unstable();
        ids.dedup();
        let index_of = |id: u64| ids.binary_search(&id).expect("id present");

        let n = ids.len();
        if n > u32::MAX as usize {
            return Err(Error::DimensionLimit {
                n,
                limit: u32::MAX as usize,
                operation: "CSR node indexing",
            });
        }
        let mut pairs: Vec<(usize, usize)> = edges
            .iter()
            .map(|&(s, t)| (index_of(s), index_of(t)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();

        let mut out_offsets = vec![0usize; n + 1];
        for &(s, _) in &pairs {
            out_offsets[s + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
        }
        let out_targets: Vec<u32> = pairs.iter().map(|&(_, t)| t as u32).collect();

        let identity = ids.iter().enumerate().all(|(i, &id)| id == i as u64);
        let positive_degrees = out_offsets.windows(2).all(|w| w[1] > w[0]);
        Ok(Digraph {
            n,
            m: out_targets.len(),
            out_offsets,
            out_targets,
            labels: if identity { None } else { Some(ids) },
            positive_degrees,
        })
    }

    /// Number of nodes.
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of (distinct) edges.
    pub fn edge_count(&self) -> usize {
        self.m
    }

    /// Out-neighbors of `i`, sorted ascending.
    #[inline]
    pub fn out_neighbors(&self, i: usize) -> &[u32] {
        &self.out_targets[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    #[inline]
    pub fn out_degree(&self, i: usize) -> usize {
        self.out_offsets[i + 1] - self.out_offsets[i]
    }

    /// Original id of internal node `i`.
    pub fn label(&self, i: usize) -> u64 {
        match &self.labels {
            Some(l) => l[i],
            None => i as u64,
        }
    }

    /// CSR offsets (length `n + 1`).
    pub fn offsets(&self) -> &[usize] {
        &self.out_offsets
    }

    /// Maximum out-degree.
    pub fn max_out_degree(&self) -> usize {
        (0..self.n).map(|i| self.out_degree(i)).max().unwrap_or(0)
    }

    /// True when every node has at least one outgoing edge. Walk-based
    /// estimators require this (it is implied by strong connectivity for
    /// `n > 1`).
    pub fn all_out_degrees_positive(&self) -> bool {
        self.positive_degrees
    }

    /// Strong-connectivity check via one forward and one reverse
    /// reachability sweep from node 0.
    pub fn is_strongly_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        if self.n == 1 {
            return true;
        }
        if !self.all_out_degrees_positive() {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::new();
        seen[0] = true;
        queue.push_back(0usize);
        let mut reached = 1usize;
        while let Some(u) = queue.pop_front() {
            for &v in self.out_neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    reached += 1;
                    queue.push_back(v as usize);
                }
            }
        }
        if reached != self.n {
            return false;
        }

        let (in_offsets, in_sources) = self.reverse_adjacency();
        seen.iter_mut().for_each(|s| *s = false);
        seen[0] = true;
        queue.push_back(0usize);
        reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &in_sources[in_offsets[u]..in_offsets[u + 1]] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == self.n
    }

    fn reverse_adjacency(&self) -> (Vec<usize>, Vec<usize>) {
        let mut in_offsets = vec![0usize; self.n + 1];
        for &t in &self.out_targets {
            in_offsets[t as usize + 1] += 1;
        }
        for i in 0..self.n {
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut cursor = in_offsets.clone();
        let mut in_sources = vec![0usize; self.m];
        for s in 0..self.n {
            for &t in self.out_neighbors(s) {
                in_sources[cursor[t as usize]] = s;
                cursor[t as usize] += 1;
            }
        }
        (in_offsets, in_sources)
    }

    /// Induced subgraph on the largest strongly connected component,
    /// re-indexed densely. Ties between equally large components go to the
    /// one containing the smallest original node id.
    pub fn largest_scc(&self) -> Digraph {
        let comp_of = tarjan_components(self);
        let ncomp = comp_of.iter().copied().max().map_or(0, |c| c + 1);
        let mut sizes = vec![0usize; ncomp];
        for &c in &comp_of {
            sizes[c] += 1;
        }
        // Smallest original label inside each component; internal order is
        // ascending in original id, so the first member seen is minimal.
        let mut min_label = vec![u64::MAX; ncomp];
        for i in 0..self.n {
            let c = comp_of[i];
            if self.label(i) < min_label[c] {
                min_label[c] = self.label(i);
            }
        }
        let best = (0..ncomp)
            .max_by(|&a, &b| {
                sizes[a]
                    .cmp(&sizes[b])
                    .then(min_label[b].cmp(&min_label[a]))
            })
            .expect("nonempty graph");

        let mut new_id = vec![usize::MAX; self.n];
        let mut members = Vec::with_capacity(sizes[best]);
        for i in 0..self.n {
            if comp_of[i] == best {
                new_id[i] = members.len();
                members.push(i);
            }
        }
        let mut out_offsets = vec![0usize; members.len() + 1];
        let mut out_targets: Vec<u32> = Vec::new();
        for (new_u, &u) in members.iter().enumerate() {
            for &v in self.out_neighbors(u) {
                if comp_of[v as usize] == best {
                    out_targets.push(new_id[v as usize] as u32);
                }
            }
            out_offsets[new_u + 1] = out_targets.len();
        }
        let labels: Vec<u64> = members.iter().map(|&u| self.label(u)).collect();
        let identity = labels.iter().enumerate().all(|(i, &id)| id == i as u64);
        let positive_degrees = out_offsets.windows(2).all(|w| w[1] > w[0]);
        Digraph {
            n: members.len(),
            m: out_targets.len(),
            out_offsets,
            out_targets,
            labels: if identity { None } else { Some(labels) },
            positive_degrees,
        }
    }

    /// BFS distances from `src` into `dist` (`u32::MAX` = unreachable).
    /// Returns the eccentricity of `src`.
    pub fn bfs(&self, src: usize, dist: &mut Vec<u32>) -> u32 {
        dist.clear();
        dist.resize(self.n, u32::MAX);
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        let mut ecc = 0;
        while let Some(u) = queue.pop_front() {
            let du = dist[u];
            for &v in self.out_neighbors(u) {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = du + 1;
                    ecc = ecc.max(du + 1);
                    queue.push_back(v as usize);
                }
            }
        }
        ecc
    }

    /// Serialize as an edge list using original labels, one `src dst` per
    /// line. Reloading the output reproduces this graph exactly.
    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for u in 0..self.n {
            for &v in self.out_neighbors(u) {
                writeln!(out, "{} {}", self.label(u), self.label(v as usize)).expect("string write");
            }
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Strongly connected components via iterative Tarjan; returns the component
/// id per node (ids are otherwise meaningless).
fn tarjan_components(g: &Digraph) -> Vec<usize> {
    const UNVISITED: usize = usize::MAX;
    let n = g.node_count();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comp_of = vec![UNVISITED; n];
    let mut next_index = 0usize;
    let mut ncomp = 0usize;

    // Explicit DFS frame: (node, next child position in its slice).
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        frames.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (u, ref mut child)) = frames.last_mut() {
            let nbrs = g.out_neighbors(u);
            if *child < nbrs.len() {
                let v = nbrs[*child] as usize;
                *child += 1;
                if index[v] == UNVISITED {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    frames.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
            } else {
                frames.pop();
                if let Some(&mut (parent, _)) = frames.last_mut() {
                    low[parent] = low[parent].min(low[u]);
                }
                if low[u] == index[u] {
                    loop {
                        let w = stack.pop().expect("scc stack");
                        on_stack[w] = false;
                        comp_of[w] = ncomp;
                        if w == u {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp_of
}

/// Parse an edge-list file. Lines starting with `#` or `%` and blank lines
/// are ignored. Malformed lines report their 1-based line number.
pub fn load_edge_list(path: &Path, format: EdgeListFormat) -> Result<Digraph> {
    let text = std::fs::read_to_string(path)?;
    let mut edges: Vec<(u64, u64)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let mut fields = match format {
            EdgeListFormat::Whitespace => {
                let mut it = line.split_whitespace();
                (it.next(), it.next())
            }
            EdgeListFormat::Csv => {
                let mut it = line.split(',').map(str::trim);
                (it.next().filter(|f| !f.is_empty()), it.next().filter(|f| !f.is_empty()))
            }
        };
        let (src, dst) = match (fields.0.take(), fields.1.take()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected two integer fields, got {line:?}"),
                })
            }
        };
        let parse = |field: &str| -> Result<u64> {
            field.parse::<u64>().map_err(|e| Error::Parse {
                line: lineno + 1,
                message: format!("invalid node id {field:?}: {e}"),
            })
        };
        edges.push((parse(src)?, parse(dst)?));
    }
    Digraph::from_edges(&edges)
}

/// Sniff whether the first data line uses commas.
pub fn detect_format(path: &Path) -> Result<EdgeListFormat> {
    let text = std::fs::read_to_string(path)?;
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        return Ok(if line.contains(',') {
            EdgeListFormat::Csv
        } else {
            EdgeListFormat::Whitespace
        });
    }
    Err(Error::EmptyGraph)
}

/// Diameter computation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiameterMode {
    /// All-pairs BFS; refused above `GraphStatsOpts::exact_limit`.
    Exact,
    /// Double-sweep lower bound, flagged as an estimate.
    DoubleSweepEstimate,
}

/// Options for [`graph_stats`].
#[derive(Debug, Clone, Copy)]
pub struct GraphStatsOpts {
    /// Largest node count for which exact all-pairs BFS is attempted.
    pub exact_limit: usize,
}

impl Default for GraphStatsOpts {
    fn default() -> Self {
        GraphStatsOpts { exact_limit: 10_000 }
    }
}

/// Structural statistics consumed by the estimators.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct GraphStats {
    /// Maximum out-degree.
    pub d_max: usize,
    /// Diameter (longest shortest directed path), exact or lower-bound
    /// estimate depending on `tau_is_exact`.
    pub tau: usize,
    pub tau_is_exact: bool,
    /// `degree_histogram[d]` = number of nodes with out-degree `d`.
    pub degree_histogram: Vec<u64>,
}

/// Compute degree statistics and the diameter.
pub fn graph_stats(g: &Digraph, mode: DiameterMode, opts: GraphStatsOpts) -> Result<GraphStats> {
    let d_max = g.max_out_degree();
    let mut degree_histogram = vec![0u64; d_max + 1];
    for i in 0..g.node_count() {
        degree_histogram[g.out_degree(i)] += 1;
    }
    let (tau, tau_is_exact) = diameter(g, mode, opts)?;
    Ok(GraphStats {
        d_max,
        tau,
        tau_is_exact,
        degree_histogram,
    })
}

/// Diameter of a strongly connected digraph. Returns `(tau, is_exact)`.
pub fn diameter(g: &Digraph, mode: DiameterMode, opts: GraphStatsOpts) -> Result<(usize, bool)> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    match mode {
        DiameterMode::Exact => {
            if n > opts.exact_limit {
                return Err(Error::DimensionLimit {
                    n,
                    limit: opts.exact_limit,
                    operation: "exact diameter (all-pairs BFS)",
                });
            }
            let mut dist = Vec::new();
            let mut tau = 0u32;
            for src in 0..n {
                tau = tau.max(g.bfs(src, &mut dist));
                if dist.iter().any(|&d| d == u32::MAX) {
                    return Err(Error::NotStronglyConnected(format!(
                        "node {src} cannot reach the whole graph"
                    )));
                }
            }
            Ok((tau as usize, true))
        }
        DiameterMode::DoubleSweepEstimate => {
            let mut dist = Vec::new();
            let mut best = 0u32;
            // Sweep from node 0 and from a max-out-degree node; follow each
            // with a sweep from the farthest node found.
            let hub = (0..n).max_by_key(|&i| g.out_degree(i)).unwrap_or(0);
            for &pivot in &[0usize, hub] {
                let ecc = g.bfs(pivot, &mut dist);
                best = best.max(ecc);
                if let Some(far) = (0..n)
                    .filter(|&i| dist[i] != u32::MAX)
                    .max_by_key(|&i| dist[i])
                {
                    best = best.max(g.bfs(far, &mut dist));
                }
            }
            Ok((best as usize, false))
        }
    }
}

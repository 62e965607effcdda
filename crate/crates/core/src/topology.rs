//! Undirected network topologies.
//!
//! Graphs are simple (no self-loops, no parallel edges) and stored as sorted
//! adjacency lists. Generators for the families used in experiments live
//! here too: paths, cycles, complete graphs, random trees and
//! Watts-Strogatz small-world graphs.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use crate::seed::{derive_seed, rng};
use crate::{Error, Result};

/// Attempts made by [`Topology::watts_strogatz`] before giving up on
/// producing a connected graph.
pub const MAX_GENERATION_ATTEMPTS: u32 = 100;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    adj: Vec<Vec<usize>>,
    /// `(i, j)` with `i < j`, ascending.
    edges: Vec<(usize, usize)>,
}

impl Topology {
    /// Builds a graph on `n` nodes from an edge list. Edges are undirected;
    /// self-loops, out-of-range endpoints and repeated edges are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::param(format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            if a == b {
                return Err(Error::param(format!("self-loop at node {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::param(format!("parallel edge ({a}, {b})")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        Ok(Self::from_adj_unchecked(adj))
    }

    fn from_adj_unchecked(mut adj: Vec<Vec<usize>>) -> Self {
        for list in &mut adj {
            list.sort_unstable();
        }
        let edges = adj
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| i < j).map(move |&j| (i, j)))
            .collect();
        Topology { adj, edges }
    }

    pub fn path(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("path needs at least one node"));
        }
        Self::from_edges(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::param("cycle needs at least three nodes"));
        }
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("complete graph needs at least one node"));
        }
        Self::from_edges(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    /// Uniformly relabelled random recursive tree: node `k` attaches to a
    /// uniformly chosen earlier node.
    pub fn random_tree(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("tree needs at least one node"));
        }
        let mut rng = rng(seed);
        let mut label: Vec<usize> = (0..n).collect();
        label.shuffle(&mut rng);
        let edges: Vec<_> = (1..n)
            .map(|k| (label[rng.random_range(0..k)], label[k]))
            .collect();
        Self::from_edges(n, edges)
    }

    /// Watts-Strogatz small-world graph.
    ///
    /// Starts from a ring lattice where each node links to its
    /// `mean_degree / 2` nearest neighbors on either side, then visits the
    /// lattice edges lap by lap (all `(u, u+1)` first, then all `(u, u+2)`,
    /// ...) and with probability `p` moves the far endpoint of each to a
    /// uniformly random node that is neither `u` nor already adjacent to it.
    /// Edge count is preserved. Disconnected outcomes are discarded and the
    /// construction is repeated with seeds derived from `seed`.
    pub fn watts_strogatz(n: usize, mean_degree: usize, p: f64, seed: u64) -> Result<Self> {
        if n < 3 {
            return Err(Error::param(format!("watts-strogatz needs n >= 3, got {n}")));
        }
        if mean_degree == 0 || mean_degree % 2 != 0 {
            return Err(Error::param(format!(
                "mean degree must be even and positive, got {mean_degree}"
            )));
        }
        if mean_degree >= n {
            return Err(Error::param(format!(
                "mean degree {mean_degree} must be below the node count {n}"
            )));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!("rewire probability {p} outside [0, 1]")));
        }
        for attempt in 0..MAX_GENERATION_ATTEMPTS {
            let s = if attempt == 0 { seed } else { derive_seed(seed, attempt as u64) };
            let g = Self::ws_once(n, mean_degree / 2, p, s);
            if g.is_connected() {
                return Ok(g);
            }
        }
        Err(Error::GenerationFailed {
            attempts: MAX_GENERATION_ATTEMPTS,
        })
    }

    fn ws_once(n: usize, half: usize, p: f64, seed: u64) -> Self {
        let mut rng = rng(seed);
        let mut adj: Vec<HashSet<usize>> = vec![HashSet::with_capacity(2 * half); n];
        for j in 1..=half {
            for u in 0..n {
                let v = (u + j) % n;
                adj[u].insert(v);
                adj[v].insert(u);
            }
        }
        for j in 1..=half {
            for u in 0..n {
                if rng.random::<f64>() >= p {
                    continue;
                }
                if adj[u].len() >= n - 1 {
                    continue;
                }
                let v = (u + j) % n;
                let w = loop {
                    let w = rng.random_range(0..n);
                    if w != u && !adj[u].contains(&w) {
                        break w;
                    }
                };
                adj[u].remove(&v);
                adj[v].remove(&u);
                adj[u].insert(w);
                adj[w].insert(u);
            }
        }
        Self::from_adj_unchecked(adj.into_iter().map(|s| s.into_iter().collect()).collect())
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors of `node` in ascending order.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adj[node].len()
    }

    /// `2|E| / |V|`
    pub fn mean_degree(&self) -> f64 {
        if self.adj.is_empty() {
            return 0.0;
        }
        2.0 * self.edges.len() as f64 / self.adj.len() as f64
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Edges `(i, j)` with `i < j` in ascending order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_list(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn is_complete(&self) -> bool {
        let n = self.node_count();
        self.edges.len() == n * n.saturating_sub(1) / 2
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() == 0 || self.distances_from(0).iter().all(Option::is_some)
    }

    /// Largest hop distance from `source`, or an error if some node is
    /// unreachable.
    pub fn eccentricity(&self, source: usize) -> Result<usize> {
        self.distances_from(source)
            .into_iter()
            .try_fold(0, |acc, d| d.map(|d| acc.max(d)).ok_or(Error::Disconnected))
    }

    /// Exact diameter: the largest shortest-path distance over all pairs.
    ///
    /// Runs a breadth-first search from every node, 64 sources at a time
    /// with one bit per source.
    pub fn diameter(&self) -> Result<usize> {
        let n = self.node_count();
        if n == 0 {
            return Ok(0);
        }
        let batches: Vec<usize> = (0..n).step_by(64).collect();
        let levels = batches
            .par_iter()
            .map(|&start| self.batch_eccentricity(start, (start + 64).min(n)))
            .collect::<Result<Vec<_>>>()?;
        Ok(levels.into_iter().max().unwrap_or(0))
    }

    /// Max eccentricity over sources `start..end` (at most 64 of them).
    fn batch_eccentricity(&self, start: usize, end: usize) -> Result<usize> {
        let n = self.node_count();
        let width = end - start;
        let full: u64 = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
        let mut seen = vec![0u64; n];
        let mut frontier = vec![0u64; n];
        for b in 0..width {
            seen[start + b] |= 1 << b;
            frontier[start + b] |= 1 << b;
        }
        let mut next = vec![0u64; n];
        let mut level = 0;
        loop {
            let mut any = 0u64;
            for v in 0..n {
                let mut acc = 0u64;
                for &w in &self.adj[v] {
                    acc |= frontier[w];
                }
                acc &= !seen[v];
                next[v] = acc;
                any |= acc;
            }
            if any == 0 {
                break;
            }
            level += 1;
            for v in 0..n {
                seen[v] |= next[v];
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        if seen.iter().any(|&s| s != full) {
            return Err(Error::Disconnected);
        }
        Ok(level)
    }

    /// Serializes as one line per node: `node_id: neighbor neighbor ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, list) in self.adj.iter().enumerate() {
            let _ = write!(out, "{i}:");
            for j in list {
                let _ = write!(out, " {j}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`Topology::to_text`]. Node ids must
    /// appear in order `0, 1, ..` and adjacency must be symmetric.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut adj: Vec<Vec<usize>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: lineno + 1, msg };
            let (head, rest) = line
                .split_once(':')
                .ok_or_else(|| parse_err("expected `node_id: neighbors`".into()))?;
            let id: usize = head
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad node id: {e}")))?;
            if id != adj.len() {
                return Err(parse_err(format!("expected node {}, found {id}", adj.len())));
            }
            let neighbors = rest
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>()
                        .map_err(|e| parse_err(format!("bad neighbor `{tok}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            adj.push(neighbors);
        }
        let n = adj.len();
        let mut edges = Vec::new();
        for (i, list) in adj.iter().enumerate() {
            for &j in list {
                if j >= n || !adj[j].contains(&i) {
                    return Err(Error::param(format!("asymmetric or dangling edge {i} -> {j}")));
                }
                if i < j {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edges(n, edges)
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

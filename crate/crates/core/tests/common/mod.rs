//! Brute-force oracles built on `BTreeSet`, sharing no code with the crate
//! beyond its public types.

#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use srep::{Pool, PoolAssignment, Topology};

pub type Set = BTreeSet<u64>;

pub fn sets(a: &PoolAssignment) -> Vec<Set> {
    a.pools().iter().map(|p| p.iter().map(|t| t.0).collect()).collect()
}

pub fn xor_len(a: &Set, b: &Set) -> u64 {
    a.symmetric_difference(b).count() as u64
}

pub fn edges(g: &Topology) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..g.node_count() {
        for &j in g.neighbors(i) {
            if i < j {
                out.push((i, j));
            }
        }
    }
    out
}

/// All-pairs shortest path lengths by Floyd-Warshall; `None` if disconnected.
pub fn floyd_diameter(g: &Topology) -> Option<usize> {
    let n = g.node_count();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for &j in g.neighbors(i) {
            d[i][j] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    let m = d.iter().flatten().copied().max().unwrap_or(0);
    (m < inf).then_some(m)
}

#[derive(Debug, Default, PartialEq)]
pub struct Naive {
    pub c: u64,
    pub t: u64,
    pub i: usize,
    pub sigma: u64,
    pub redundant: u64,
    pub f_per_iteration: Vec<u64>,
    pub fraction_per_iteration: Vec<f64>,
}

fn all_equal_union(s: &[Set]) -> bool {
    let union: Set = s.iter().flatten().copied().collect();
    s.iter().all(|x| *x == union)
}

fn fraction(s: &[Set]) -> f64 {
    let union: Set = s.iter().flatten().copied().collect();
    s.iter().filter(|x| **x == union).count() as f64 / s.len() as f64
}

/// Simultaneous one-hop exchange over every edge per iteration.
pub fn naive_parallel(g: &Topology, a: &PoolAssignment) -> Naive {
    let mut s = sets(a);
    let es = edges(g);
    let mut out = Naive::default();
    while !all_equal_union(&s) {
        let mut inbox: Vec<Vec<u64>> = vec![Vec::new(); s.len()];
        let mut f = 0;
        let mut slowest = 0;
        for &(i, j) in &es {
            let cost = xor_len(&s[i], &s[j]);
            f += cost;
            slowest = slowest.max(cost);
            inbox[i].extend(s[j].difference(&s[i]));
            inbox[j].extend(s[i].difference(&s[j]));
        }
        for (v, got) in inbox.into_iter().enumerate() {
            let before = s[v].len();
            let n_got = got.len() as u64;
            s[v].extend(got);
            out.redundant += n_got - (s[v].len() - before) as u64;
        }
        out.c += f;
        out.t += slowest;
        out.i += 1;
        out.sigma += es.len() as u64;
        out.f_per_iteration.push(f);
        out.fraction_per_iteration.push(fraction(&s));
        assert!(out.i <= s.len(), "no convergence");
    }
    out
}

/// Nodes in ascending order, each syncing with its neighbors in ascending
/// order against their current pools.
pub fn naive_sequential(g: &Topology, a: &PoolAssignment) -> Naive {
    let mut s = sets(a);
    let mut out = Naive::default();
    while !all_equal_union(&s) {
        for i in 0..s.len() {
            for &j in g.neighbors(i) {
                let cost = xor_len(&s[i], &s[j]);
                out.c += cost;
                out.t += cost;
                out.sigma += 1;
                let u: Set = s[i].union(&s[j]).copied().collect();
                s[i] = u.clone();
                s[j] = u;
            }
        }
        out.i += 1;
        out.fraction_per_iteration.push(fraction(&s));
        assert!(out.i <= s.len(), "no convergence");
    }
    out
}

/// A connected graph on 2..=max_n nodes: a random tree plus extra edges.
pub fn connected_graph(max_n: usize) -> impl Strategy<Value = Topology> {
    (2..=max_n)
        .prop_flat_map(|n| {
            let parents = (1..n).map(|i| 0..i).collect::<Vec<_>>();
            let extra = prop::collection::vec((0..n, 0..n), 0..2 * n);
            (Just(n), parents, extra)
        })
        .prop_map(|(n, parents, extra)| {
            let mut es: BTreeSet<(usize, usize)> = BTreeSet::new();
            for (i, p) in parents.into_iter().enumerate() {
                es.insert((p, i + 1));
            }
            for (a, b) in extra {
                if a != b {
                    es.insert((a.min(b), a.max(b)));
                }
            }
            Topology::from_edges(n, es).unwrap()
        })
}

/// Pools over ids `0..width` for each node of `g`.
pub fn assignment_for(g: Topology, width: u64) -> impl Strategy<Value = (Topology, PoolAssignment)> {
    let n = g.node_count();
    prop::collection::vec(prop::collection::btree_set(0..width, 0..12), n).prop_map(move |pools| {
        let pools: Vec<Pool> = pools.into_iter().map(|p| p.into_iter().collect()).collect();
        (g.clone(), PoolAssignment::from_pools(&pools))
    })
}

pub fn graph_and_assignment(max_n: usize, width: u64) -> impl Strategy<Value = (Topology, PoolAssignment)> {
    connected_graph(max_n).prop_flat_map(move |g| assignment_for(g, width))
}

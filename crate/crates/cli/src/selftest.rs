//! Invariant checks on small graphs, runnable from the command line.

use std::collections::VecDeque;

use srep::analytic::{analytic_run, ep_srep_bounds};
use srep::engine::{run, Mode, StopCondition};
use srep::pool::{f_total, sync_fraction, symmetric_difference};
use srep::pools::{generate_assignment, PoolGenParams, Sampling, SizesDistribution};
use srep::reconcile::{sync, Backend, IbltParams};
use srep::seed::{derive_seed, rng};
use srep::{Pool, PoolAssignment, Topology};

use rand::Rng as _;

/// One named check and, if it failed, why.
pub struct Check {
    pub name: &'static str,
    pub failure: Option<String>,
}

fn bfs_diameter(g: &Topology) -> Option<usize> {
    let n = g.node_count();
    let mut best = 0;
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        best = best.max(*dist.iter().max()?);
        if best == usize::MAX {
            return None;
        }
    }
    Some(best)
}

fn corpus() -> srep::Result<Vec<Topology>> {
    let mut out = Vec::new();
    for n in [2, 3, 6, 11, 25] {
        out.push(Topology::path(n)?);
    }
    for n in [3, 4, 9, 20] {
        out.push(Topology::cycle(n)?);
    }
    for s in 0..6 {
        out.push(Topology::random_tree(4 + 6 * s as usize, s)?);
    }
    for s in 0..8 {
        out.push(Topology::watts_strogatz(20 + 5 * s as usize, 4 + 2 * (s as usize % 3), 0.24, s)?);
    }
    Ok(out)
}

fn oracle(g: &Topology, a: &PoolAssignment, mode: Mode) -> srep::Result<srep::engine::RunMetrics> {
    run(g, a, mode, &Backend::Oracle, StopCondition::Full)
}

fn complete_graphs() -> srep::Result<Option<String>> {
    for n in 3..=12 {
        let g = Topology::complete(n)?;
        let a = PoolAssignment::unit(n);
        let want = (n * (n - 1)) as u64;
        let seq = oracle(&g, &a, Mode::ESrep)?;
        let par = oracle(&g, &a, Mode::EpSrep)?;
        if seq.c_total_elements != want || par.c_total_elements != want || par.i_max != 1 {
            return Ok(Some(format!(
                "K{n}: sequential C {}, parallel C {} I {}",
                seq.c_total_elements, par.c_total_elements, par.i_max
            )));
        }
    }
    Ok(None)
}

fn diameter_and_bounds() -> srep::Result<Option<String>> {
    for g in corpus()? {
        let n = g.node_count() as u64;
        let d = bfs_diameter(&g).expect("corpus is connected");
        let m = oracle(&g, &PoolAssignment::unit(g.node_count()), Mode::EpSrep)?;
        let b = ep_srep_bounds(&g)?;
        let c = m.c_total_elements;
        if g.diameter()? != d || m.i_max != d {
            return Ok(Some(format!("{n} nodes: BFS diameter {d}, computed {}, I {}", g.diameter()?, m.i_max)));
        }
        if c < n * (n - 1) || c >= n * (n * n - 1) || b.i_equals_diameter != d {
            return Ok(Some(format!("{n} nodes: C = {c} outside [n(n-1), n(n^2-1))")));
        }
    }
    Ok(None)
}

fn engine_matches_analytic() -> srep::Result<Option<String>> {
    for k in 0..30u64 {
        let g = Topology::watts_strogatz(30 + k as usize, 4, 0.3, k)?;
        let params = PoolGenParams {
            psi: 0.3 + 0.1 * k as f64,
            sizes: SizesDistribution::maxwell_with_mean(40.0),
            sampling: Sampling::Iid,
            seed: derive_seed(7, k),
        };
        let a = generate_assignment(&g, &params)?;
        let m = oracle(&g, &a, Mode::Srep)?;
        let r = analytic_run(&g, &a)?;
        if m.c_total_elements != r.c_total_elements || m.i_max != r.i_total {
            return Ok(Some(format!(
                "case {k}: engine C {} I {}, analytic C {} I {}",
                m.c_total_elements, m.i_max, r.c_total_elements, r.i_total
            )));
        }
        if m.i_max > bfs_diameter(&g).expect("connected") {
            return Ok(Some(format!("case {k}: I {} exceeds the diameter", m.i_max)));
        }
        let synced = sync_fraction(&a) == 1.0;
        if synced != (f_total(&g, &a)? == 0) {
            return Ok(Some(format!("case {k}: sync fraction disagrees with f")));
        }
    }
    Ok(None)
}

fn iblt_matches_oracle() -> srep::Result<Option<String>> {
    let mut r = rng(11);
    for k in 0..200u64 {
        let a: Pool = (0..r.random_range(0..80)).map(|_| r.random_range(0..120u64)).collect();
        let b: Pool = (0..r.random_range(0..80)).map(|_| r.random_range(0..120u64)).collect();
        let iblt = Backend::Iblt(IbltParams { seed: k, ..IbltParams::default() });
        let got = sync(&iblt, &a, &b)?;
        if (got.d_ab, got.d_ba) != symmetric_difference(&a, &b) {
            return Ok(Some(format!("pair {k}: decoded sets differ from the exact difference")));
        }
    }
    Ok(None)
}

/// Runs every check; none of them touches the filesystem.
pub fn selftest() -> Vec<Check> {
    let checks: [(&'static str, fn() -> srep::Result<Option<String>>); 4] = [
        ("complete graphs: C = n(n-1), parallel I = 1", complete_graphs),
        ("unit pools: I = diameter and n(n-1) <= C < n(n^2-1)", diameter_and_bounds),
        ("engine equals analytic model; I <= diameter", engine_matches_analytic),
        ("IBLT decodes the exact difference", iblt_matches_oracle),
    ];
    checks
        .into_iter()
        .map(|(name, f)| Check {
            name,
            failure: match f() {
                Ok(failure) => failure,
                Err(e) => Some(format!("error: {e}")),
            },
        })
        .collect()
}

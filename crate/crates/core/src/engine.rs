//! Round-based protocol simulator.
//!
//! Three modes are supported:
//!
//! - [`Mode::ESrep`]: nodes take turns in ascending id order, each syncing
//!   with its neighbors in ascending order against their *live* pools.
//! - [`Mode::EpSrep`] and [`Mode::Srep`]: every node syncs with all
//!   neighbors at once. Each iteration freezes every pool, runs one two-way
//!   sync per edge between the frozen states, then merges everything each
//!   node received. An element that reaches a node in iteration `i` is
//!   forwarded by it no earlier than iteration `i + 1`. The two modes share
//!   these semantics; `EpSrep` is the name used for single-element pools.
//!
//! Costs come from the chosen [`Backend`]. With the oracle backend the cost
//! of an edge is its mutual difference count, and sync time equals cost.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bits::{minus_count, xor_count, Bits};
use crate::pool::{edge_diff_sum, synced_count, union_of, Pool, PoolAssignment};
use crate::reconcile::{sync, Backend};
use crate::topology::Topology;
use crate::{Error, Result, TX_WIRE_BYTES};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    ESrep,
    EpSrep,
    #[default]
    Srep,
}

impl Mode {
    pub fn is_parallel(self) -> bool {
        !matches!(self, Mode::ESrep)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum StopCondition {
    /// Every pool equals the union of all pools.
    #[default]
    Full,
    /// At least this fraction of pools equals the union.
    Fraction(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    /// 1-based.
    pub iteration: usize,
    /// Sum of the mutual differences matrix at the start of the iteration.
    pub f_total_before: u64,
    /// `(i, j, cost)` per primal sync, in execution order. For parallel modes
    /// there is one entry per edge, `i < j`.
    pub edge_costs: Vec<(usize, usize, u64)>,
    pub sum_edge_cost: u64,
    pub max_edge_cost: u64,
    pub sync_fraction_after: f64,
    /// Redundant deliveries during this iteration.
    pub redundant: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub c_total_elements: u64,
    pub c_total_bytes: u64,
    pub t_total: u64,
    pub i_max: usize,
    pub sigma_syncs: u64,
    pub redundant_transmissions: u64,
    pub per_iteration: Vec<IterationTrace>,
}

impl RunMetrics {
    /// Per-iteration trace as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "iteration,f_total_before,sum_edge_cost,max_edge_cost,sync_fraction_after,redundant_cum\n",
        );
        let mut cum = 0;
        for it in &self.per_iteration {
            cum += it.redundant;
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{}",
                it.iteration, it.f_total_before, it.sum_edge_cost, it.max_edge_cost, it.sync_fraction_after, cum
            );
        }
        out
    }
}

/// Elapsed time of a parallel run: each iteration lasts as long as its
/// slowest sync.
pub fn time_accounting(per_iteration: &[IterationTrace]) -> u64 {
    per_iteration.iter().map(|it| it.max_edge_cost).sum()
}

/// Redundant deliveries to one node in one iteration: every copy of an
/// element beyond the first, plus every copy of an element the node already
/// held when the iteration started.
pub fn redundancy_accounting(start: &Pool, deliveries: &[Pool]) -> u64 {
    let mut counts = std::collections::BTreeMap::new();
    for d in deliveries {
        for tx in d.iter() {
            *counts.entry(tx).or_insert(0u64) += 1;
        }
    }
    counts
        .into_iter()
        .map(|(tx, c)| if start.contains(tx) { c } else { c - 1 })
        .sum()
}

/// Lazily checked iteration cap of `diameter + 1`.
struct Backstop<'a> {
    g: &'a Topology,
    lower: usize,
    diameter: Option<usize>,
}

impl<'a> Backstop<'a> {
    fn new(g: &'a Topology) -> Result<Self> {
        let lower = if g.node_count() == 0 { 0 } else { g.eccentricity(0)? };
        Ok(Backstop { g, lower, diameter: None })
    }

    fn check(&mut self, iteration: usize) -> Result<()> {
        if iteration <= self.lower + 1 {
            return Ok(());
        }
        let d = match self.diameter {
            Some(d) => d,
            None => *self.diameter.insert(self.g.diameter()?),
        };
        if iteration > d + 1 {
            return Err(Error::InvariantViolated(format!(
                "iteration {iteration} exceeds diameter {d} + 1"
            )));
        }
        Ok(())
    }
}

fn edge_cost(backend: &Backend, universe_a: &Bits, universe_b: &Bits, a: &PoolAssignment, i: usize, j: usize) -> Result<(u64, u64)> {
    match backend {
        Backend::Oracle => {
            let d = xor_count(universe_a, universe_b);
            Ok((d, d * TX_WIRE_BYTES))
        }
        Backend::Iblt(_) => {
            let pa = rows_to_pool(a, universe_a);
            let pb = rows_to_pool(a, universe_b);
            let out = sync(backend, &pa, &pb)?;
            let (exact_ab, exact_ba) = crate::pool::symmetric_difference(&pa, &pb);
            if out.d_ab != exact_ab || out.d_ba != exact_ba {
                return Err(Error::InvariantViolated(format!(
                    "sketch decode for edge ({i}, {j}) disagrees with the exact difference"
                )));
            }
            Ok((out.cost_elements, out.cost_bytes))
        }
    }
}

fn rows_to_pool(a: &PoolAssignment, row: &Bits) -> Pool {
    row.ones().map(|k| a.universe()[k]).collect()
}

/// Simulates the protocol on `(g, a)` until `stop` holds.
pub fn run(g: &Topology, a: &PoolAssignment, mode: Mode, backend: &Backend, stop: StopCondition) -> Result<RunMetrics> {
    a.check_matches(g)?;
    backend.validate()?;
    if let StopCondition::Fraction(x) = stop {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::param(format!("sync fraction target {x} outside [0, 1]")));
        }
    }
    let mut backstop = Backstop::new(g)?;
    let n = g.node_count();
    let mut rows: Vec<Bits> = a.rows().to_vec();
    let union_len = union_of(&rows, a.universe().len()).count_ones(..);
    let fraction = |rows: &[Bits]| {
        if n == 0 {
            1.0
        } else {
            synced_count(rows, union_len) as f64 / n as f64
        }
    };

    let mut metrics = RunMetrics {
        c_total_elements: 0,
        c_total_bytes: 0,
        t_total: 0,
        i_max: 0,
        sigma_syncs: 0,
        redundant_transmissions: 0,
        per_iteration: Vec::new(),
    };

    loop {
        let f_before = edge_diff_sum(g, &rows);
        let done = match stop {
            StopCondition::Full => f_before == 0,
            StopCondition::Fraction(x) => fraction(&rows) >= x,
        };
        if done {
            break;
        }
        let iteration = metrics.per_iteration.len() + 1;
        backstop.check(iteration)?;

        let (edge_costs, bytes, redundant, elapsed) = if mode.is_parallel() {
            parallel_iteration(g, a, backend, &mut rows)?
        } else {
            sequential_iteration(g, a, backend, &mut rows)?
        };

        let sum_edge_cost: u64 = edge_costs.iter().map(|e| e.2).sum();
        let max_edge_cost = edge_costs.iter().map(|e| e.2).max().unwrap_or(0);
        metrics.c_total_elements += sum_edge_cost;
        metrics.c_total_bytes += bytes;
        metrics.t_total += elapsed;
        metrics.sigma_syncs += edge_costs.len() as u64;
        metrics.redundant_transmissions += redundant;
        metrics.per_iteration.push(IterationTrace {
            iteration,
            f_total_before: f_before,
            sum_edge_cost,
            max_edge_cost,
            edge_costs,
            sync_fraction_after: fraction(&rows),
            redundant,
        });
    }
    metrics.i_max = metrics.per_iteration.len();
    Ok(metrics)
}

type IterationOutcome = (Vec<(usize, usize, u64)>, u64, u64, u64);

/// One parallel iteration: per-edge syncs on the frozen pools, then merge.
fn parallel_iteration(g: &Topology, a: &PoolAssignment, backend: &Backend, rows: &mut Vec<Bits>) -> Result<IterationOutcome> {
    let snapshot: &[Bits] = rows;
    let costs = g
        .edge_list()
        .par_iter()
        .map(|&(i, j)| edge_cost(backend, &snapshot[i], &snapshot[j], a, i, j).map(|(c, b)| (i, j, c, b)))
        .collect::<Result<Vec<_>>>()?;
    let bytes = costs.iter().map(|c| c.3).sum();
    let edge_costs: Vec<(usize, usize, u64)> = costs.into_iter().map(|(i, j, c, _)| (i, j, c)).collect();

    let merged: Vec<(Bits, u64)> = (0..g.node_count())
        .into_par_iter()
        .map(|v| {
            let own = &snapshot[v];
            let mut next = own.clone();
            let mut received = 0u64;
            for &w in g.neighbors(v) {
                received += minus_count(&snapshot[w], own);
                next.union_with(&snapshot[w]);
            }
            let fresh = (next.count_ones(..) - own.count_ones(..)) as u64;
            (next, received - fresh)
        })
        .collect();
    let redundant = merged.iter().map(|m| m.1).sum();
    *rows = merged.into_iter().map(|m| m.0).collect();
    // Syncs run concurrently; the iteration lasts as long as the slowest.
    let elapsed = edge_costs.iter().map(|e| e.2).max().unwrap_or(0);
    Ok((edge_costs, bytes, redundant, elapsed))
}

/// One elementary iteration: node by node, neighbor by neighbor, on live
/// pools. Syncs are sequential, so elapsed time is their sum.
fn sequential_iteration(g: &Topology, a: &PoolAssignment, backend: &Backend, rows: &mut [Bits]) -> Result<IterationOutcome> {
    let mut edge_costs = Vec::new();
    let mut bytes = 0;
    for v in 0..g.node_count() {
        for &w in g.neighbors(v) {
            let (cost, b) = edge_cost(backend, &rows[v], &rows[w], a, v, w)?;
            edge_costs.push((v, w, cost));
            bytes += b;
            let (lo, hi) = (v.min(w), v.max(w));
            let (left, right) = rows.split_at_mut(hi);
            left[lo].union_with(&right[0]);
            right[0].union_with(&left[lo]);
        }
    }
    let elapsed = edge_costs.iter().map(|e| e.2).sum();
    Ok((edge_costs, bytes, 0, elapsed))
}

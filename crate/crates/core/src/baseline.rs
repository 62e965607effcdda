//! MempoolSync: a push heuristic where each node periodically sends a
//! score-ranked batch of transaction hashes to every neighbor.
//!
//! A node normally sends its top `def_tx_to_sync` hashes. If its pool is
//! smaller than that it sends everything; if its pool is more than
//! `large_pool_multiplier` times larger it sends only the top
//! `⌈y · def_tx_to_sync⌉`. Receivers keep whatever they did not have. There
//! is no acknowledgement, so hashes the receiver already holds are paid for
//! all the same.
//!
//! Ancestor scores are not available outside a real node; each transaction
//! gets a fixed score drawn uniformly at random.

use std::collections::BTreeMap;

use rand::Rng as _;
use rayon::prelude::*;

use crate::bits::Bits;
use crate::pool::{synced_count, union_of, Pool, PoolAssignment, TxId};
use crate::seed::rng;
use crate::topology::Topology;
use crate::{Error, Result, TX_WIRE_BYTES};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MempoolSyncParams {
    pub def_tx_to_sync: usize,
    /// Fraction of the default batch sent by nodes with very large pools.
    pub y: f64,
    pub large_pool_multiplier: f64,
}

impl Default for MempoolSyncParams {
    fn default() -> Self {
        MempoolSyncParams {
            def_tx_to_sync: 1000,
            y: 0.25,
            large_pool_multiplier: 10.0,
        }
    }
}

impl MempoolSyncParams {
    pub fn validate(&self) -> Result<()> {
        if self.def_tx_to_sync == 0 {
            return Err(Error::param("def_tx_to_sync must be positive"));
        }
        if !(self.y > 0.0 && self.y < 1.0) {
            return Err(Error::param(format!("y must lie in (0, 1), got {}", self.y)));
        }
        if !(self.large_pool_multiplier.is_finite() && self.large_pool_multiplier > 0.0) {
            return Err(Error::param("large pool multiplier must be positive"));
        }
        Ok(())
    }

    /// Number of hashes a node with `pool_len` transactions sends.
    pub fn quota(&self, pool_len: usize) -> usize {
        if pool_len < self.def_tx_to_sync {
            pool_len
        } else if pool_len as f64 > self.large_pool_multiplier * self.def_tx_to_sync as f64 {
            (self.y * self.def_tx_to_sync as f64).ceil() as usize
        } else {
            self.def_tx_to_sync
        }
    }
}

/// A pool whose transactions carry a ranking score.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredPool {
    pub pool: Pool,
    pub score: BTreeMap<TxId, f64>,
}

impl ScoredPool {
    pub fn new(pool: Pool, score: BTreeMap<TxId, f64>) -> Result<Self> {
        if let Some(tx) = pool.iter().find(|tx| !score.contains_key(tx)) {
            return Err(Error::param(format!("transaction {tx} has no score")));
        }
        Ok(ScoredPool { pool, score })
    }

    /// Transactions by descending score, ties broken by ascending id.
    pub fn ranked(&self) -> Vec<TxId> {
        let mut v: Vec<TxId> = self.pool.iter().collect();
        v.sort_by(|a, b| self.score[b].total_cmp(&self.score[a]).then(a.cmp(b)));
        v
    }
}

/// The batch of hashes a node sends to each neighbor.
pub fn select_batch(p: &ScoredPool, params: &MempoolSyncParams) -> Vec<TxId> {
    let mut ranked = p.ranked();
    ranked.truncate(params.quota(p.pool.len()));
    ranked
}

#[derive(Clone, Debug, PartialEq)]
pub struct MempoolSyncOutcome {
    pub c_elements: u64,
    pub c_bytes: u64,
    pub final_sync_fraction: f64,
    /// Sync fraction after each round.
    pub per_round_fraction: Vec<f64>,
}

/// Runs `rounds` synchronous push rounds. In each, every node sends the
/// batch selected from its round-start pool to every neighbor.
pub fn run_mempoolsync(
    g: &Topology,
    a: &PoolAssignment,
    params: &MempoolSyncParams,
    rounds: usize,
    seed: u64,
) -> Result<MempoolSyncOutcome> {
    a.check_matches(g)?;
    params.validate()?;
    if rounds == 0 {
        return Err(Error::param("mempoolsync needs at least one round"));
    }
    let universe = a.universe();
    let mut r = rng(seed);
    let scores: Vec<f64> = universe.iter().map(|_| r.random::<f64>()).collect();
    let mut order: Vec<usize> = (0..universe.len()).collect();
    order.sort_by(|&x, &y| scores[y].total_cmp(&scores[x]).then(universe[x].cmp(&universe[y])));

    let n = g.node_count();
    let width = universe.len();
    let mut rows: Vec<Bits> = a.rows().to_vec();
    let union_len = union_of(&rows, width).count_ones(..);
    let mut c_elements = 0u64;
    let mut per_round_fraction = Vec::with_capacity(rounds);

    for _ in 0..rounds {
        let batches: Vec<(Bits, usize)> = rows
            .par_iter()
            .map(|row| {
                let quota = params.quota(row.count_ones(..));
                let mut batch = Bits::with_capacity(width);
                let mut taken = 0;
                for &k in &order {
                    if taken == quota {
                        break;
                    }
                    if row.contains(k) {
                        batch.insert(k);
                        taken += 1;
                    }
                }
                (batch, taken)
            })
            .collect();
        for (v, (_, taken)) in batches.iter().enumerate() {
            c_elements += (taken * g.degree(v)) as u64;
        }
        rows = (0..n)
            .into_par_iter()
            .map(|v| {
                let mut next = rows[v].clone();
                for &w in g.neighbors(v) {
                    next.union_with(&batches[w].0);
                }
                next
            })
            .collect();
        let frac = if n == 0 { 1.0 } else { synced_count(&rows, union_len) as f64 / n as f64 };
        per_round_fraction.push(frac);
    }

    Ok(MempoolSyncOutcome {
        c_elements,
        c_bytes: c_elements * TX_WIRE_BYTES,
        final_sync_fraction: *per_round_fraction.last().unwrap(),
        per_round_fraction,
    })
}

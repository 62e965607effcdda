//! Closed-form total cost and iteration count.
//!
//! One protocol iteration maps every pool to the union of itself and its
//! neighbors' pools ([`g_step`]). The iteration count is the number of
//! steps until the mutual differences matrix vanishes, and the total cost
//! is the sum of the matrix totals seen before each step. This needs no
//! per-sync simulation and scales to 10⁴-node networks.

use rayon::prelude::*;

use crate::bits::{xor_count, Bits};
use crate::pool::PoolAssignment;
use crate::topology::Topology;
use crate::{Error, Result, TX_WIRE_BYTES};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalyticResult {
    pub c_total_elements: u64,
    pub c_total_bytes: u64,
    pub i_total: usize,
    /// Matrix total before each step; all strictly positive.
    pub per_iteration_f: Vec<u64>,
}

fn step_rows(g: &Topology, rows: &[Bits]) -> Vec<Bits> {
    (0..g.node_count())
        .into_par_iter()
        .map(|v| {
            let mut next = rows[v].clone();
            for &w in g.neighbors(v) {
                next.union_with(&rows[w]);
            }
            next
        })
        .collect()
}

/// `S'ᵢ = Sᵢ ∪ ⋃_{j ∈ N(i)} Sⱼ` for every node.
pub fn g_step(g: &Topology, a: &PoolAssignment) -> Result<PoolAssignment> {
    a.check_matches(g)?;
    Ok(a.with_rows(step_rows(g, a.rows())))
}

/// Iterates [`g_step`] until every edge joins equal pools.
///
/// Only edges with an endpoint whose pool grew are re-measured after a
/// step.
pub fn analytic_run(g: &Topology, a: &PoolAssignment) -> Result<AnalyticResult> {
    a.check_matches(g)?;
    let lower = if g.node_count() == 0 { 0 } else { g.eccentricity(0)? };
    let mut diameter = None;

    let edges = g.edge_list();
    let mut rows: Vec<Bits> = a.rows().to_vec();
    let mut diffs: Vec<u64> = edges.par_iter().map(|&(i, j)| xor_count(&rows[i], &rows[j])).collect();
    let mut per_iteration_f = Vec::new();

    loop {
        let f: u64 = diffs.iter().sum();
        if f == 0 {
            break;
        }
        let steps = per_iteration_f.len() + 1;
        if steps > lower {
            let d = match diameter {
                Some(d) => d,
                None => *diameter.insert(g.diameter()?),
            };
            if steps > d {
                return Err(Error::InvariantViolated(format!(
                    "{steps} steps needed on a graph of diameter {d}"
                )));
            }
        }
        per_iteration_f.push(f);

        let next = step_rows(g, &rows);
        let grown: Vec<bool> = rows
            .iter()
            .zip(&next)
            .map(|(old, new)| old.count_ones(..) != new.count_ones(..))
            .collect();
        rows = next;
        diffs
            .par_iter_mut()
            .zip(edges.par_iter())
            .filter(|(_, &(i, j))| grown[i] || grown[j])
            .for_each(|(d, &(i, j))| *d = xor_count(&rows[i], &rows[j]));
    }

    let c_total_elements = per_iteration_f.iter().sum();
    Ok(AnalyticResult {
        c_total_elements,
        c_total_bytes: c_total_elements * TX_WIRE_BYTES,
        i_total: per_iteration_f.len(),
        per_iteration_f,
    })
}

/// Closed-form cost bounds for single-element pools and the predicted
/// iteration count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpSrepBounds {
    /// `n(n − 1)`, inclusive.
    pub lower_c: u64,
    /// `n(n² − 1)`, exclusive.
    pub upper_c: u64,
    /// `n(n·deg + n − 1)` for mean degree `deg`, exclusive.
    pub ws_upper_c: f64,
    /// The iteration count equals the diameter.
    pub i_equals_diameter: usize,
}

pub fn ep_srep_bounds(g: &Topology) -> Result<EpSrepBounds> {
    let n = g.node_count() as u64;
    let nf = n as f64;
    Ok(EpSrepBounds {
        lower_c: n * n.saturating_sub(1),
        upper_c: n * (n * n).saturating_sub(1),
        ws_upper_c: nf * (nf * g.mean_degree() + nf - 1.0),
        i_equals_diameter: g.diameter()?,
    })
}

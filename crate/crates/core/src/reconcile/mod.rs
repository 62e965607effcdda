//! Pairwise primal sync: two-way set reconciliation between two pools.
//!
//! [`Backend::Oracle`] charges exactly one unit per element of `a ⊕ b`, the
//! cost of an optimal linear-in-differences protocol such as characteristic
//! polynomial interpolation. [`Backend::Iblt`] runs a real invertible Bloom
//! lookup table exchange and charges for the cells it sends.

mod iblt;

pub use iblt::{iblt_encode, iblt_subtract_decode, Cell, Decoded, IbltSketch, CELL_BYTES};

use crate::pool::{symmetric_difference, Pool};
use crate::seed::derive_seed;
use crate::{Error, Result, TX_WIRE_BYTES};

/// Attempts made by the IBLT backend; the sketch doubles after each failure.
pub const IBLT_MAX_ATTEMPTS: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IbltParams {
    /// Cells per element of the true difference. At least 1.2.
    pub cells_per_diff: f64,
    pub hash_count: usize,
    pub seed: u64,
}

impl Default for IbltParams {
    fn default() -> Self {
        IbltParams {
            cells_per_diff: 1.5,
            hash_count: 3,
            seed: 0,
        }
    }
}

impl IbltParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cells_per_diff.is_finite() && self.cells_per_diff >= 1.2) {
            return Err(Error::param(format!(
                "cells per difference must be >= 1.2, got {}",
                self.cells_per_diff
            )));
        }
        if self.hash_count == 0 {
            return Err(Error::param("hash count must be positive"));
        }
        Ok(())
    }

    /// Cells for a first attempt at a difference of `diff` elements: the
    /// scaled difference, but never fewer than the hash count.
    pub fn cells_for(&self, diff: usize) -> usize {
        ((self.cells_per_diff * diff as f64).ceil() as usize).max(self.hash_count)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Backend {
    #[default]
    Oracle,
    Iblt(IbltParams),
}

impl Backend {
    pub fn validate(&self) -> Result<()> {
        match self {
            Backend::Oracle => Ok(()),
            Backend::Iblt(p) => p.validate(),
        }
    }
}

/// Result of one two-way sync between `a` and `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyncOutcome {
    /// `b \ a`, delivered to `a`.
    pub d_ba: Pool,
    /// `a \ b`, delivered to `b`.
    pub d_ab: Pool,
    /// Oracle: elements exchanged. IBLT: cells sent, summed over attempts.
    pub cost_elements: u64,
    pub cost_bytes: u64,
    pub attempts: u32,
    pub success: bool,
}

/// Two-way primal sync.
///
/// The IBLT backend sizes its first sketch from the true difference size
/// and doubles the cell count on each decode failure, up to
/// [`IBLT_MAX_ATTEMPTS`] sketches, all of which are charged.
pub fn sync(backend: &Backend, a: &Pool, b: &Pool) -> Result<SyncOutcome> {
    match backend {
        Backend::Oracle => {
            let (d_ab, d_ba) = symmetric_difference(a, b);
            let n = (d_ab.len() + d_ba.len()) as u64;
            Ok(SyncOutcome {
                d_ba,
                d_ab,
                cost_elements: n,
                cost_bytes: n * TX_WIRE_BYTES,
                attempts: 1,
                success: true,
            })
        }
        Backend::Iblt(params) => {
            params.validate()?;
            let (x, y) = symmetric_difference(a, b);
            let diff = x.len() + y.len();
            let mut cells = params.cells_for(diff);
            let mut sent = 0u64;
            for attempt in 0..IBLT_MAX_ATTEMPTS {
                let seed = derive_seed(params.seed, attempt as u64);
                let sa = iblt_encode(a, cells, params.hash_count, seed)?;
                let sb = iblt_encode(b, cells, params.hash_count, seed)?;
                sent += cells as u64;
                let decoded = iblt_subtract_decode(&sa, &sb)?;
                if decoded.success {
                    return Ok(SyncOutcome {
                        d_ba: decoded.b_minus_a,
                        d_ab: decoded.a_minus_b,
                        cost_elements: sent,
                        cost_bytes: sent * CELL_BYTES,
                        attempts: attempt + 1,
                        success: true,
                    });
                }
                if attempt + 1 < IBLT_MAX_ATTEMPTS {
                    cells *= 2;
                }
            }
            Err(Error::ReconcileFailed {
                diff,
                attempts: IBLT_MAX_ATTEMPTS,
                cells,
            })
        }
    }
}

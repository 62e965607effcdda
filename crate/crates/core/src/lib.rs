//! Simulation and analysis of gossip-style transaction pool synchronization
//! built on pairwise set reconciliation.
//!
//! Every node periodically reconciles its pool with each neighbor using a
//! reconciliation protocol whose cost is linear in the symmetric difference
//! (the *primal sync*). This crate provides:
//!
//! - [`pool`]: transaction ids, pools, pool assignments and the mutual
//!   differences matrix.
//! - [`topology`]: Watts-Strogatz generation and exact diameter queries.
//! - [`pools`]: pool assignment generation from a sizes distribution.
//! - [`reconcile`]: the primal sync, with an exact-cost oracle backend and an
//!   invertible Bloom lookup table backend.
//! - [`engine`]: the round-based protocol simulator with exact metrics.
//! - [`analytic`]: the closed-form fixed-point computation of total cost and
//!   iteration count.
//! - [`baseline`]: the MempoolSync push heuristic used for comparison.
//!
//! ```
//! use srep::{analytic, engine, pool::PoolAssignment, topology::Topology};
//! use srep::engine::{Mode, StopCondition};
//! use srep::reconcile::Backend;
//!
//! let g = Topology::cycle(4)?;
//! let a = PoolAssignment::unit(4);
//! let run = engine::run(&g, &a, Mode::EpSrep, &Backend::Oracle, StopCondition::Full)?;
//! assert_eq!(run.i_max, 2);
//! assert_eq!(run.c_total_elements, 16);
//! assert_eq!(run.redundant_transmissions, 4);
//! assert_eq!(analytic::analytic_run(&g, &a)?.c_total_elements, 16);
//! # Ok::<(), srep::Error>(())
//! ```

pub mod analytic;
pub mod baseline;
mod bits;
pub mod engine;
mod error;
pub mod pool;
pub mod pools;
pub mod reconcile;
pub mod seed;
pub mod topology;

#[cfg(doctest)]
mod guide;

pub use error::{Error, Result};
pub use pool::{Pool, PoolAssignment, TxId};
pub use topology::Topology;

/// Bytes charged per transmitted transaction id.
pub const TX_WIRE_BYTES: u64 = 32;

//! Scenario-driven experiment runner for the `srep` simulator.
//!
//! A scenario file names an experiment kind, a sweep and a list of seeds.
//! [`run_scenario`] executes every (sweep point, seed) pair and writes CSVs;
//! [`describe`] prints the plan without running it.

pub mod describe;
pub mod error;
pub mod experiments;
pub mod scenario;
pub mod selftest;
pub mod table;

pub use describe::describe;
pub use error::{CliError, Result};
pub use experiments::run_scenario;
pub use scenario::{Kind, Scenario};
pub use selftest::selftest;

//! Discrete-time simulation and analysis of randomized work stealing.
//!
//! The [`engine`] advances `m` processors slot by slot under the protocols
//! of [`protocols`], on workloads from [`workloads`]. [`potential`] tracks
//! load-imbalance potentials and checks their contraction, [`bounds`]
//! computes the constants and makespan bounds derived from that
//! contraction, [`stats`] fits makespan distributions, and [`harness`]
//! runs replicated experiments.

pub mod bounds;
pub mod engine;
pub mod harness;
pub mod potential;
pub mod protocols;
pub mod rng;
pub mod stats;
pub mod workloads;

pub use engine::{run, Mode, RunResult, SimConfig, SimState};
pub use potential::PotentialKind;
pub use workloads::{DagSpec, InitialDistribution, WorkloadSpec};

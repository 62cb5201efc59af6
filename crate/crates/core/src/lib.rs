//! Placement of microservice instance graphs of mobile-core control-plane
//! procedures onto capacitated bare-metal servers.
//!
//! The crate provides the domain model and feasibility checks, an exact
//! branch-and-bound solver over the linearized binary program, the
//! divide-and-conquer mapping heuristic ([`mm::mm_map`]), scenario
//! generators and the batch experiment harness behind the `msplace` CLI.

// `!(x > 0.0)` is how parameters reject NaN along with out-of-range values,
// and index loops read naturally over the square flow and weight matrices.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constraints;
pub mod error;
pub mod exact;
pub mod flow;
pub mod generate;
pub mod harness;
pub mod mm;
pub mod model;
pub mod scenario;

#[cfg(test)]
pub(crate) mod testutil;

pub use constraints::{check_constraints, ConstraintReport, Violation};
pub use error::{Error, Result};
pub use flow::{link_flows, objective_psi, pair_flow, LinkFlows};
pub use model::{
    replica_counts, Assignment, CpProcedure, Infrastructure, InstanceKey, LinkCapacity, MsEdge,
    MsSpec, ReplicaPlan, Resource, ServerSpec, Workload,
};

/// Tolerance used for every flow and capacity comparison.
pub const TOL: f64 = 1e-9;

//! Exact solution of the placement problem: linearization of the product
//! terms, a combinatorial branch-and-bound solver and an exhaustive oracle.

mod bnb;
mod model;
mod oracle;

pub use bnb::{solve_bnb, SolveOutcome, SolveStatus, DEFAULT_TIME_LIMIT_S};
pub use model::{linearize, model_stats, IlpModel, Row, RowKind, Sense, Var};
pub use oracle::{brute_force_oracle, ORACLE_LIMIT};

use crate::error::Result;
use crate::model::{CpProcedure, Infrastructure, ReplicaPlan};

/// Linearizes and solves in one step.
pub fn solve_exact(
    infra: &Infrastructure,
    procedures: &[CpProcedure],
    plan: &ReplicaPlan,
    time_limit_s: f64,
) -> Result<SolveOutcome> {
    let model = linearize(infra, procedures, plan);
    solve_bnb(&model, time_limit_s)
}

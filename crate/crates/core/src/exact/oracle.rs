//! Exhaustive enumeration of every instance-to-server mapping, used to
//! cross-check the branch-and-bound solver on small instances.

use std::time::Instant;

use super::bnb::{SolveOutcome, SolveStatus};
use crate::constraints::check_constraints;
use crate::error::{Error, Result};
use crate::flow::{link_flows, objective_psi};
use crate::model::{Assignment, CpProcedure, Infrastructure, InstanceKey, ReplicaPlan};
use crate::TOL;

/// Largest number of assignments the oracle will enumerate.
pub const ORACLE_LIMIT: f64 = 1e7;

pub fn brute_force_oracle(
    infra: &Infrastructure,
    procedures: &[CpProcedure],
    plan: &ReplicaPlan,
) -> Result<SolveOutcome> {
    let start = Instant::now();
    let keys: Vec<InstanceKey> = plan.instances().collect();
    let servers = infra.len();
    let size = (servers as f64).powi(keys.len() as i32);
    if size > ORACLE_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: ORACLE_LIMIT,
        });
    }

    let mut digits = vec![0usize; keys.len()];
    let mut best: Option<(f64, Assignment)> = None;
    let mut visited = 0u64;
    if servers > 0 || keys.is_empty() {
        loop {
            visited += 1;
            let a: Assignment = keys.iter().copied().zip(digits.iter().copied()).collect();
            if check_constraints(infra, procedures, plan, &a).all_pass() {
                let psi = objective_psi(&link_flows(infra, procedures, plan, &a)?);
                if best.as_ref().is_none_or(|(b, _)| psi < b - TOL) {
                    best = Some((psi, a));
                }
            }
            if !advance(&mut digits, servers) {
                break;
            }
        }
    }

    let (status, best_psi, assignment, lower_bound) = match best {
        Some((psi, a)) => (SolveStatus::Optimal, Some(psi), Some(a), psi),
        None => (SolveStatus::Infeasible, None, None, f64::INFINITY),
    };
    Ok(SolveOutcome {
        status,
        assignment,
        best_psi,
        lower_bound,
        nodes: visited,
        wall_time: start.elapsed(),
    })
}

/// Odometer increment, last digit fastest; false once every digit wrapped.
fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

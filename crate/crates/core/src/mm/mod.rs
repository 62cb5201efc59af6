//! Divide-and-conquer mapping heuristic.
//!
//! Each outer iteration maps one replica of every MS that still lacks
//! replicas (a "one-MS instance graph"). Fragments are popped from a stack:
//! a fragment that fits on some server is placed there whole, otherwise it
//! is split along a minimum cut and both halves are pushed back. A fragment
//! of a single MS that fits nowhere aborts the whole procedure. After each
//! outer iteration every link charged during it is checked against its
//! capacity.

mod bff;
mod gp;
mod ledger;
mod trace;

use std::collections::HashMap;

use thiserror::Error;

pub use bff::{bff_candidates, bff_feasible, bff_select, BffDemand, Previous};
pub use gp::{cut_weights, gp_partition, min_cut, outgoing_flow, Cut};
pub use ledger::PlacementLedger;
pub use trace::{Trace, TraceCut, TraceRecord};

use crate::model::{Assignment, CpProcedure, Infrastructure, ReplicaPlan};

/// A set of MSs of one procedure mapped or split as a unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    /// Sorted MS ids.
    pub members: Vec<usize>,
    /// Flow from the members toward MSs outside the fragment; 0 for the
    /// root of an outer iteration.
    pub out_flow: f64,
}

impl Fragment {
    pub fn of(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Fragment {
            members,
            out_flow: 0.0,
        }
    }

    /// Every MS of `procedure` with at least one replica in `plan`.
    pub fn root(procedure: &CpProcedure, plan: &ReplicaPlan) -> Self {
        Fragment::of(
            (0..procedure.ms_count())
                .filter(|&i| plan.replicas(procedure.id(), i) > 0)
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoSolution {
    #[error("procedure {procedure}: no server can host microservice {ms} (outer iteration {outer})")]
    Unplaceable {
        procedure: usize,
        ms: usize,
        outer: u64,
    },
    #[error(
        "procedure {procedure}: link {from} -> {to} carries {flow} PDU/s over capacity after outer iteration {outer}"
    )]
    LinkOverload {
        procedure: usize,
        from: usize,
        to: usize,
        flow: f64,
        outer: u64,
    },
}

/// Maps every replica of `procedure` in `plan` on top of what `ledger`
/// already holds, returning the placements of this procedure.
///
/// On failure the ledger keeps the partial placements made so far and
/// should be discarded.
pub fn mm_map(
    infra: &Infrastructure,
    procedure: &CpProcedure,
    plan: &ReplicaPlan,
    ledger: &mut PlacementLedger,
    mut trace: Option<&mut Trace>,
) -> Result<Assignment, NoSolution> {
    let t = procedure.id();
    let lambda = (0..procedure.ms_count())
        .map(|i| plan.replicas(t, i))
        .max()
        .unwrap_or(0);
    let mut placed = Assignment::new();
    let mut cuts: HashMap<Vec<usize>, (Fragment, Fragment, f64)> = HashMap::new();

    for outer in 0..lambda {
        let active: Vec<usize> = (0..procedure.ms_count())
            .filter(|&i| ledger.placed(t, i) < plan.replicas(t, i))
            .collect();
        let mut stack = vec![Fragment::of(active)];
        let mut prev: Previous = None;
        let mut step = 0;
        while let Some(fragment) = stack.pop() {
            let demand = BffDemand::of(procedure, plan, ledger, &fragment);
            let chosen = bff_select(infra, ledger, prev, &demand);
            let mut record = trace.as_ref().map(|_| TraceRecord {
                procedure: t,
                outer,
                step,
                members: fragment.members.clone(),
                active: demand.active.clone(),
                delta_cpu: demand.cpu,
                delta_mem: demand.mem,
                delta_out: fragment.out_flow,
                candidates: bff_candidates(infra, ledger, prev, &demand),
                chosen,
                cut: None,
            });
            step += 1;

            match chosen {
                Some(s) => {
                    for &i in &demand.active {
                        let key = ledger.place(procedure, plan, i, s);
                        placed.insert(key, s);
                    }
                    prev = Some((s, fragment.out_flow));
                }
                None if fragment.members.len() > 1 => {
                    let (first, second, value) = cuts
                        .entry(fragment.members.clone())
                        .or_insert_with(|| {
                            gp_partition(procedure, plan, &fragment)
                                .expect("fragment has at least two members")
                        })
                        .clone();
                    if let Some(r) = record.as_mut() {
                        r.cut = Some(TraceCut {
                            first: first.members.clone(),
                            second: second.members.clone(),
                            value,
                        });
                    }
                    // `first` ends on top of the stack and is popped next.
                    stack.push(second);
                    stack.push(first);
                }
                None => {
                    if let (Some(tr), Some(r)) = (trace.as_deref_mut(), record) {
                        tr.push(r);
                    }
                    return Err(NoSolution::Unplaceable {
                        procedure: t,
                        ms: fragment.members[0],
                        outer,
                    });
                }
            }
            if let (Some(tr), Some(r)) = (trace.as_deref_mut(), record) {
                tr.push(r);
            }
        }
        if let Some((from, to, flow)) = ledger.take_overloaded_link(infra) {
            return Err(NoSolution::LinkOverload {
                procedure: t,
                from,
                to,
                flow,
                outer,
            });
        }
    }
    Ok(placed)
}

/// Maps all procedures in ascending id order onto a fresh ledger.
pub fn map_all(
    infra: &Infrastructure,
    procedures: &[CpProcedure],
    plan: &ReplicaPlan,
    mut trace: Option<&mut Trace>,
) -> Result<Assignment, NoSolution> {
    let mut ledger = PlacementLedger::new(infra);
    let mut order: Vec<&CpProcedure> = procedures.iter().collect();
    order.sort_by_key(|p| p.id());
    for p in order {
        if plan.procedure_counts(p.id()).is_none() {
            continue;
        }
        mm_map(infra, p, plan, &mut ledger, trace.as_deref_mut())?;
    }
    Ok(ledger.assignment().clone())
}

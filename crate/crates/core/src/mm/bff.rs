//! Best-fit server selection for a fragment.
//!
//! A server qualifies when
//! (a) its residual CPU and memory cover the fragment's footprint,
//! (b) when a previous server `s_prev` exists and differs, the link
//!     `s_prev -> s` exists and its residual covers the previous fragment's
//!     outgoing flow,
//! (c) it is adjacent to every server hosting a replica of an MS that
//!     communicates with a fragment member, and
//! (d) the concrete flows the new replicas exchange with those replicas fit
//!     on the corresponding links.
//!
//! Among qualifying servers the one leaving the least slack,
//! `(res_cpu - d_cpu) + (res_mem - d_mem)`, wins; ties go to the lowest id.

use std::collections::BTreeMap;

use crate::flow::replica_pair_rate;
use crate::model::{CpProcedure, Infrastructure, ReplicaPlan, Resource};

use super::{Fragment, PlacementLedger};

/// What placing the active members of a fragment on one server costs.
#[derive(Debug, Clone, PartialEq)]
pub struct BffDemand {
    /// Members still short of replicas; only these get placed.
    pub active: Vec<usize>,
    pub cpu: f64,
    pub mem: f64,
    /// Flow the new replicas would send to each server already hosting a
    /// counterpart.
    pub out_to: BTreeMap<usize, f64>,
    /// Flow the new replicas would receive from each such server.
    pub in_from: BTreeMap<usize, f64>,
}

impl BffDemand {
    pub fn of(
        procedure: &CpProcedure,
        plan: &ReplicaPlan,
        ledger: &PlacementLedger,
        fragment: &Fragment,
    ) -> Self {
        let t = procedure.id();
        let active: Vec<usize> = fragment
            .members
            .iter()
            .copied()
            .filter(|&i| ledger.placed(t, i) < plan.replicas(t, i))
            .collect();
        let mut cpu = 0.0;
        let mut mem = 0.0;
        let mut out_to = BTreeMap::new();
        let mut in_from = BTreeMap::new();
        for &i in &active {
            let spec = &procedure.ms()[i];
            cpu += spec.cpu_footprint;
            mem += spec.mem_footprint;
            for e in procedure.out_edges(i) {
                let tau = plan.replicas(t, e.dst);
                if tau == 0 {
                    continue;
                }
                let rate = replica_pair_rate(e.base_time, spec.remote_penalty, tau, false);
                for &(o, cnt) in ledger.hosts_of(t, e.dst) {
                    *out_to.entry(o).or_insert(0.0) += cnt as f64 * rate;
                }
            }
            let tau_i = plan.replicas(t, i);
            for e in procedure.in_edges(i) {
                let penalty = procedure.ms()[e.src].remote_penalty;
                let rate = replica_pair_rate(e.base_time, penalty, tau_i, false);
                for &(o, cnt) in ledger.hosts_of(t, e.src) {
                    *in_from.entry(o).or_insert(0.0) += cnt as f64 * rate;
                }
            }
        }
        BffDemand {
            active,
            cpu,
            mem,
            out_to,
            in_from,
        }
    }

    /// A demand with footprints only and no placed counterparts.
    pub fn footprint(cpu: f64, mem: f64) -> Self {
        BffDemand {
            active: Vec::new(),
            cpu,
            mem,
            out_to: BTreeMap::new(),
            in_from: BTreeMap::new(),
        }
    }
}

/// Previous placement of the inner loop: server and outgoing flow.
pub type Previous = Option<(usize, f64)>;

fn fits(have: f64, need: f64) -> bool {
    need <= have + crate::TOL * have.abs().max(1.0)
}

fn slack(ledger: &PlacementLedger, s: usize, demand: &BffDemand) -> Option<f64> {
    let cpu = ledger.residual(s, Resource::Cpu);
    let mem = ledger.residual(s, Resource::Mem);
    (fits(cpu, demand.cpu) && fits(mem, demand.mem))
        .then_some((cpu - demand.cpu) + (mem - demand.mem))
}

/// Rules (b) to (d) for server `s`; rule (a) is checked by the caller.
fn links_allow(
    infra: &Infrastructure,
    ledger: &PlacementLedger,
    prev: Previous,
    demand: &BffDemand,
    s: usize,
) -> bool {
    if let Some((sp, flow)) = prev {
        if sp != s
            && !(infra.adjacent(sp, s) && ledger.link_residual(infra, sp, s).admits(flow))
        {
            return false;
        }
    }
    for (&o, &flow) in &demand.out_to {
        if o != s && !(infra.adjacent(s, o) && ledger.link_residual(infra, s, o).admits(flow)) {
            return false;
        }
    }
    for (&o, &flow) in &demand.in_from {
        if o != s && !(infra.adjacent(o, s) && ledger.link_residual(infra, o, s).admits(flow)) {
            return false;
        }
    }
    true
}

/// Whether server `s` satisfies all four rules.
pub fn bff_feasible(
    infra: &Infrastructure,
    ledger: &PlacementLedger,
    prev: Previous,
    demand: &BffDemand,
    s: usize,
) -> bool {
    slack(ledger, s, demand).is_some() && links_allow(infra, ledger, prev, demand, s)
}

/// The best-fit qualifying server, if any.
pub fn bff_select(
    infra: &Infrastructure,
    ledger: &PlacementLedger,
    prev: Previous,
    demand: &BffDemand,
) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for s in 0..ledger.servers() {
        let Some(score) = slack(ledger, s, demand) else {
            continue;
        };
        if best.is_some_and(|(b, _)| score >= b) {
            continue;
        }
        if links_allow(infra, ledger, prev, demand, s) {
            best = Some((score, s));
        }
    }
    best.map(|(_, s)| s)
}

/// Every qualifying server, best fit first.
pub fn bff_candidates(
    infra: &Infrastructure,
    ledger: &PlacementLedger,
    prev: Previous,
    demand: &BffDemand,
) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = (0..ledger.servers())
        .filter_map(|s| slack(ledger, s, demand).map(|score| (score, s)))
        .filter(|&(_, s)| links_allow(infra, ledger, prev, demand, s))
        .collect();
    scored.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    scored.into_iter().map(|(_, s)| s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{replica_counts, LinkCapacity, MsEdge, MsSpec, ServerSpec, Workload};

    fn farm(caps: &[f64], link: LinkCapacity) -> Infrastructure {
        let servers = caps
            .iter()
            .enumerate()
            .map(|(id, &c)| ServerSpec {
                id,
                cpu_capacity: c,
                mem_capacity: c,
            })
            .collect();
        Infrastructure::builder(servers).full_mesh(link).build().unwrap()
    }

    /// Exhaustive oracle: minimum slack over all servers passing the rules.
    fn scan(infra: &Infrastructure, ledger: &PlacementLedger, prev: Previous, d: &BffDemand) -> Option<usize> {
        let mut best = None;
        let mut best_score = f64::INFINITY;
        for s in 0..infra.len() {
            if !bff_feasible(infra, ledger, prev, d, s) {
                continue;
            }
            let score = ledger.residual(s, Resource::Cpu) - d.cpu + ledger.residual(s, Resource::Mem) - d.mem;
            if score < best_score {
                best_score = score;
                best = Some(s);
            }
        }
        best
    }

    #[test]
    fn picks_the_tighter_fit() {
        let infra = farm(&[3.0, 1.0], LinkCapacity::Unbounded);
        let ledger = PlacementLedger::new(&infra);
        let d = BffDemand::footprint(1.0, 1.0);
        assert_eq!(bff_select(&infra, &ledger, None, &d), Some(1));
        assert_eq!(scan(&infra, &ledger, None, &d), Some(1));
        assert_eq!(bff_candidates(&infra, &ledger, None, &d), vec![1, 0]);
    }

    #[test]
    fn nothing_fits() {
        let infra = farm(&[1.0, 1.0, 1.0], LinkCapacity::Unbounded);
        let ledger = PlacementLedger::new(&infra);
        assert_eq!(bff_select(&infra, &ledger, None, &BffDemand::footprint(2.0, 2.0)), None);
    }

    #[test]
    fn ties_go_to_the_lowest_id() {
        let infra = farm(&[2.0, 2.0, 2.0], LinkCapacity::Unbounded);
        let ledger = PlacementLedger::new(&infra);
        assert_eq!(bff_select(&infra, &ledger, None, &BffDemand::footprint(1.0, 1.0)), Some(0));
    }

    #[test]
    fn previous_flow_must_fit_on_the_link() {
        // Server 0 is the tightest fit but the link from the previous
        // server 1 only carries 500 PDU/s.
        let infra = farm(&[1.0, 5.0, 4.0], LinkCapacity::Finite(500.0));
        let ledger = PlacementLedger::new(&infra);
        let d = BffDemand::footprint(1.0, 1.0);
        let prev = Some((1, 2000.0 / 3.0));
        assert_eq!(bff_select(&infra, &ledger, prev, &d), Some(1));
        assert!(!bff_feasible(&infra, &ledger, prev, &d, 0));
        assert_eq!(bff_select(&infra, &ledger, Some((1, 400.0)), &d), Some(0));
    }

    #[test]
    fn counterparts_require_adjacency_and_link_room() {
        let ms = (0..2)
            .map(|id| MsSpec {
                id,
                cpu_footprint: 1.0,
                mem_footprint: 1.0,
                remote_penalty: 0.0005,
                max_load: 1,
            })
            .collect();
        let p = CpProcedure::new(0, ms, vec![MsEdge { src: 0, dst: 1, base_time: 0.001 }]).unwrap();
        let plan = replica_counts(std::slice::from_ref(&p), &Workload::new().with(0, 1)).unwrap();
        let servers = (0..3)
            .map(|id| ServerSpec {
                id,
                cpu_capacity: 1.0,
                mem_capacity: 1.0,
            })
            .collect();
        // 0 - 1 linked generously, 0 - 2 linked below one remote pair flow.
        let infra = Infrastructure::builder(servers)
            .link(0, 1, LinkCapacity::Finite(1000.0))
            .link(0, 2, LinkCapacity::Finite(600.0))
            .build()
            .unwrap();
        let mut ledger = PlacementLedger::new(&infra);
        ledger.place(&p, &plan, 0, 0);
        let d = BffDemand::of(&p, &plan, &ledger, &Fragment::of(vec![1]));
        assert_eq!(d.active, vec![1]);
        assert_eq!(d.in_from.len(), 1);
        assert!((d.in_from[&0] - 2000.0 / 3.0).abs() < 1e-9);
        assert_eq!(bff_candidates(&infra, &ledger, None, &d), vec![1]);
    }
}

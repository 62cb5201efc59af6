//! Running state of a mapping: residual server capacities, flow already
//! allocated on each directed link, placed replica counters and the
//! partial assignment.

use std::collections::BTreeMap;

use crate::flow::replica_pair_rate;
use crate::model::{
    Assignment, CpProcedure, Infrastructure, InstanceKey, LinkCapacity, ReplicaPlan, Resource,
};

#[derive(Debug, Clone)]
pub struct PlacementLedger {
    n: usize,
    residual: Vec<[f64; 2]>,
    link_used: Vec<f64>,
    /// Per procedure, per MS: replicas of that MS per server, sorted by server.
    hosts: BTreeMap<usize, Vec<Vec<(usize, u64)>>>,
    assignment: Assignment,
    /// Links charged since the last overload check.
    dirty: Vec<(usize, usize)>,
}

impl PlacementLedger {
    pub fn new(infra: &Infrastructure) -> Self {
        let n = infra.len();
        PlacementLedger {
            n,
            residual: infra
                .servers()
                .iter()
                .map(|s| [s.cpu_capacity, s.mem_capacity])
                .collect(),
            link_used: vec![0.0; n * n],
            hosts: BTreeMap::new(),
            assignment: Assignment::new(),
            dirty: Vec::new(),
        }
    }

    pub fn servers(&self) -> usize {
        self.n
    }

    pub fn residual(&self, server: usize, resource: Resource) -> f64 {
        self.residual[server][slot(resource)]
    }

    /// Flow already allocated on the directed link `a -> b`.
    pub fn link_used(&self, a: usize, b: usize) -> f64 {
        self.link_used[a * self.n + b]
    }

    pub fn link_residual(&self, infra: &Infrastructure, a: usize, b: usize) -> LinkCapacity {
        if a == b {
            return LinkCapacity::Unbounded;
        }
        infra.link_capacity(a, b).residual(self.link_used(a, b))
    }

    /// Replicas of `(procedure, ms)` placed so far (the counter omega).
    pub fn placed(&self, procedure: usize, ms: usize) -> u64 {
        self.hosts_of(procedure, ms).iter().map(|&(_, c)| c).sum()
    }

    /// Servers hosting replicas of `(procedure, ms)` with their counts.
    pub fn hosts_of(&self, procedure: usize, ms: usize) -> &[(usize, u64)] {
        self.hosts
            .get(&procedure)
            .and_then(|v| v.get(ms))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    /// First directed link whose allocated flow exceeds its capacity.
    pub fn overloaded_link(&self, infra: &Infrastructure) -> Option<(usize, usize, f64)> {
        (0..self.n)
            .flat_map(|a| (0..self.n).map(move |b| (a, b)))
            .find_map(|(a, b)| self.overload(infra, a, b))
    }

    /// Checks only the links charged since the previous call.
    pub(crate) fn take_overloaded_link(
        &mut self,
        infra: &Infrastructure,
    ) -> Option<(usize, usize, f64)> {
        let mut dirty = std::mem::take(&mut self.dirty);
        dirty.sort_unstable();
        dirty.dedup();
        dirty.into_iter().find_map(|(a, b)| self.overload(infra, a, b))
    }

    fn overload(&self, infra: &Infrastructure, a: usize, b: usize) -> Option<(usize, usize, f64)> {
        let used = self.link_used(a, b);
        (a != b && used > 0.0 && !infra.link_capacity(a, b).admits(used)).then_some((a, b, used))
    }

    fn charge(&mut self, a: usize, b: usize, flow: f64) {
        self.link_used[a * self.n + b] += flow;
        self.dirty.push((a, b));
    }

    /// Places the next replica of `ms` on `server`, charging its footprint
    /// and the flows it exchanges with already placed counterparts.
    pub(crate) fn place(
        &mut self,
        procedure: &CpProcedure,
        plan: &ReplicaPlan,
        ms: usize,
        server: usize,
    ) -> InstanceKey {
        let t = procedure.id();
        let spec = &procedure.ms()[ms];
        let replica = self.placed(t, ms) as usize;
        debug_assert!((replica as u64) < plan.replicas(t, ms));

        for e in procedure.out_edges(ms) {
            let tau = plan.replicas(t, e.dst);
            let rate = replica_pair_rate(e.base_time, spec.remote_penalty, tau, false);
            for (o, cnt) in self.hosts_of(t, e.dst).to_vec() {
                if o != server {
                    self.charge(server, o, cnt as f64 * rate);
                }
            }
        }
        let tau_self = plan.replicas(t, ms);
        for e in procedure.in_edges(ms) {
            let penalty = procedure.ms()[e.src].remote_penalty;
            let rate = replica_pair_rate(e.base_time, penalty, tau_self, false);
            for (o, cnt) in self.hosts_of(t, e.src).to_vec() {
                if o != server {
                    self.charge(o, server, cnt as f64 * rate);
                }
            }
        }

        self.residual[server][0] -= spec.cpu_footprint;
        self.residual[server][1] -= spec.mem_footprint;
        let per_ms = self
            .hosts
            .entry(t)
            .or_insert_with(|| vec![Vec::new(); procedure.ms_count()]);
        let list = &mut per_ms[ms];
        match list.binary_search_by_key(&server, |&(s, _)| s) {
            Ok(k) => list[k].1 += 1,
            Err(k) => list.insert(k, (server, 1)),
        }
        let key = InstanceKey::new(t, ms, replica);
        self.assignment.insert(key, server);
        key
    }
}

fn slot(r: Resource) -> usize {
    match r {
        Resource::Cpu => 0,
        Resource::Mem => 1,
    }
}

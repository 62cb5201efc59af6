//! Feasibility checks for an assignment: unique placement, adjacency of
//! communicating instances, server resource capacities and link capacities.
//! Violations are reported with the first witness found, never raised as
//! errors.

use std::fmt;

use serde::Serialize;

use crate::flow::{link_flows, LinkFlows};
use crate::model::{
    find_procedure, Assignment, CpProcedure, Infrastructure, InstanceKey, LinkCapacity,
    ReplicaPlan, Resource,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// An instance of the plan has no server.
    Unplaced { instance: InstanceKey },
    /// An assigned instance is not part of the plan.
    UnknownInstance { instance: InstanceKey },
    /// An instance is mapped to a server id outside the farm.
    UnknownServer { instance: InstanceKey, server: usize },
    /// An instance appears more than once in the input.
    Duplicate { instance: InstanceKey },
    NotAdjacent {
        src: InstanceKey,
        dst: InstanceKey,
        src_server: usize,
        dst_server: usize,
    },
    ResourceOverflow {
        server: usize,
        resource: Resource,
        load: f64,
        capacity: f64,
    },
    LinkOverflow {
        from: usize,
        to: usize,
        flow: f64,
        capacity: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Unplaced { instance } => write!(f, "instance {instance} is not placed"),
            Violation::UnknownInstance { instance } => {
                write!(f, "instance {instance} is not part of the replica plan")
            }
            Violation::UnknownServer { instance, server } => {
                write!(f, "instance {instance} is mapped to unknown server {server}")
            }
            Violation::Duplicate { instance } => {
                write!(f, "instance {instance} is mapped more than once")
            }
            Violation::NotAdjacent {
                src,
                dst,
                src_server,
                dst_server,
            } => write!(
                f,
                "{src} on server {src_server} feeds {dst} on server {dst_server}, which are not adjacent"
            ),
            Violation::ResourceOverflow {
                server,
                resource,
                load,
                capacity,
            } => write!(f, "server {server} {resource} load {load} exceeds capacity {capacity}"),
            Violation::LinkOverflow {
                from,
                to,
                flow,
                capacity,
            } => write!(f, "link {from} -> {to} carries {flow} PDU/s over capacity {capacity}"),
        }
    }
}

/// Outcome of the four feasibility checks; `None` means the check passed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub unique_placement: Option<Violation>,
    pub adjacency: Option<Violation>,
    pub resources: Option<Violation>,
    pub links: Option<Violation>,
}

impl ConstraintReport {
    pub fn all_pass(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn violations(&self) -> impl Iterator<Item = (&'static str, &Violation)> {
        [
            ("unique placement", &self.unique_placement),
            ("adjacency", &self.adjacency),
            ("resource capacity", &self.resources),
            ("link capacity", &self.links),
        ]
        .into_iter()
        .filter_map(|(name, v)| v.as_ref().map(|v| (name, v)))
    }
}

pub fn check_constraints(
    infra: &Infrastructure,
    procedures: &[CpProcedure],
    plan: &ReplicaPlan,
    assignment: &Assignment,
) -> ConstraintReport {
    let unique_placement = check_unique(infra, plan, assignment);
    // The remaining checks only look at known instances on known servers.
    let clean: Assignment = assignment
        .iter()
        .filter(|(k, s)| *s < infra.len() && plan.contains(k))
        .collect();
    let adjacency = check_adjacency(infra, procedures, plan, &clean);
    let resources = check_resources(infra, procedures, &clean);
    let links = match link_flows(infra, procedures, plan, &clean) {
        Ok(flows) => check_links(infra, &flows),
        Err(_) => None,
    };
    ConstraintReport {
        unique_placement,
        adjacency,
        resources,
        links,
    }
}

fn check_unique(infra: &Infrastructure, plan: &ReplicaPlan, a: &Assignment) -> Option<Violation> {
    if let Some((instance, server)) = a.iter().find(|&(_, s)| s >= infra.len()) {
        return Some(Violation::UnknownServer { instance, server });
    }
    if let Some((instance, _)) = a.iter().find(|(k, _)| !plan.contains(k)) {
        return Some(Violation::UnknownInstance { instance });
    }
    plan.instances()
        .find(|k| a.get(k).is_none())
        .map(|instance| Violation::Unplaced { instance })
}

fn check_adjacency(
    infra: &Infrastructure,
    procedures: &[CpProcedure],
    plan: &ReplicaPlan,
    a: &Assignment,
) -> Option<Violation> {
    if infra.is_full_mesh() {
        return None;
    }
    for t in plan.procedure_ids() {
        let p = find_procedure(procedures, t)?;
        for e in p.edges() {
            let src_hosts = a.servers_of(t, e.src);
            let dst_hosts = a.servers_of(t, e.dst);
            for &(s, _) in &src_hosts {
                for &(o, _) in &dst_hosts {
                    if !infra.adjacent(s, o) {
                        return Some(Violation::NotAdjacent {
                            src: first_on(a, t, e.src, s),
                            dst: first_on(a, t, e.dst, o),
                            src_server: s,
                            dst_server: o,
                        });
                    }
                }
            }
        }
    }
    None
}

fn first_on(a: &Assignment, t: usize, ms: usize, server: usize) -> InstanceKey {
    a.iter()
        .find(|&(k, s)| k.procedure == t && k.ms == ms && s == server)
        .map(|(k, _)| k)
        .expect("server was derived from the assignment")
}

fn check_resources(
    infra: &Infrastructure,
    procedures: &[CpProcedure],
    a: &Assignment,
) -> Option<Violation> {
    let n = infra.len();
    let mut load = vec![[0.0f64; 2]; n];
    for (k, s) in a.iter() {
        if let Some(p) = find_procedure(procedures, k.procedure) {
            let m = &p.ms()[k.ms];
            load[s][0] += m.cpu_footprint;
            load[s][1] += m.mem_footprint;
        }
    }
    for (s, l) in load.iter().enumerate() {
        for (slot, resource) in [Resource::Cpu, Resource::Mem].into_iter().enumerate() {
            let capacity = infra.capacity(s, resource);
            if l[slot] > capacity + crate::TOL * capacity.max(1.0) {
                return Some(Violation::ResourceOverflow {
                    server: s,
                    resource,
                    load: l[slot],
                    capacity,
                });
            }
        }
    }
    None
}

fn check_links(infra: &Infrastructure, flows: &LinkFlows) -> Option<Violation> {
    for (from, to, flow) in flows.nonzero() {
        let cap = infra.link_capacity(from, to);
        if !cap.admits(flow) {
            let capacity = match cap {
                LinkCapacity::Finite(c) => c,
                LinkCapacity::Unbounded => f64::INFINITY,
            };
            return Some(Violation::LinkOverflow {
                from,
                to,
                flow,
                capacity,
            });
        }
    }
    None
}

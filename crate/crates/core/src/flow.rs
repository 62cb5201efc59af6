//! Link flows at maximum emission rate and the inter-server cost.
//!
//! One instance of `i` feeding `j` splits its output evenly over the
//! `tau_j` replicas of `j`; each replica pair carries `1 / (tau_j * a_ij)`
//! PDUs/s when co-located and `1 / (tau_j * (a_ij + c_i))` otherwise.

use crate::error::{Error, Result};
use crate::model::{find_procedure, Assignment, CpProcedure, Infrastructure, ReplicaPlan};

/// Rate of one replica pair, in PDUs per second.
#[inline]
pub fn replica_pair_rate(base_time: f64, remote_penalty: f64, tau_dst: u64, colocated: bool) -> f64 {
    let per_request = if colocated {
        base_time
    } else {
        base_time + remote_penalty
    };
    1.0 / (tau_dst as f64 * per_request)
}

/// Flow between one replica of `src_ms` and one replica of `dst_ms`.
pub fn pair_flow(
    procedure: &CpProcedure,
    plan: &ReplicaPlan,
    src_ms: usize,
    dst_ms: usize,
    colocated: bool,
) -> Result<f64> {
    let edge = procedure.edge(src_ms, dst_ms).ok_or_else(|| {
        Error::domain(format!(
            "procedure {} has no edge {src_ms} -> {dst_ms}",
            procedure.id()
        ))
    })?;
    let tau_dst = plan.replicas(procedure.id(), dst_ms);
    if tau_dst == 0 {
        return Err(Error::domain(format!(
            "procedure {}, microservice {dst_ms} has no replicas",
            procedure.id()
        )));
    }
    let penalty = procedure.ms()[src_ms].remote_penalty;
    Ok(replica_pair_rate(edge.base_time, penalty, tau_dst, colocated))
}

/// Square matrix of flows between ordered server pairs, PDUs/s.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkFlows {
    n: usize,
    flows: Vec<f64>,
}

impl LinkFlows {
    pub fn zeros(n: usize) -> Self {
        LinkFlows {
            n,
            flows: vec![0.0; n * n],
        }
    }

    pub fn servers(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.flows[a * self.n + b]
    }

    pub fn add(&mut self, a: usize, b: usize, flow: f64) {
        self.flows[a * self.n + b] += flow;
    }

    /// Nonzero entries in row-major order, diagonal included.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.flows
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != 0.0)
            .map(move |(k, &f)| (k / self.n, k % self.n, f))
    }
}

/// Sums replica-pair flows onto the server pairs hosting them.
///
/// Replicas are grouped per server first, so the cost is proportional to
/// the number of distinct hosting servers rather than to `tau_i * tau_j`.
pub fn link_flows(
    infra: &Infrastructure,
    procedures: &[CpProcedure],
    plan: &ReplicaPlan,
    assignment: &Assignment,
) -> Result<LinkFlows> {
    let n = infra.len();
    if let Some((key, s)) = assignment.iter().find(|&(_, s)| s >= n) {
        return Err(Error::domain(format!(
            "instance {key} is mapped to unknown server {s}"
        )));
    }
    let mut flows = LinkFlows::zeros(n);
    for t in plan.procedure_ids() {
        let p = find_procedure(procedures, t)
            .ok_or_else(|| Error::domain(format!("plan references unknown procedure {t}")))?;
        accumulate_procedure(p, plan, assignment, &mut flows);
    }
    Ok(flows)
}

fn accumulate_procedure(
    p: &CpProcedure,
    plan: &ReplicaPlan,
    assignment: &Assignment,
    flows: &mut LinkFlows,
) {
    let t = p.id();
    let hosts: Vec<Vec<(usize, u64)>> = (0..p.ms_count())
        .map(|i| assignment.servers_of(t, i))
        .collect();
    for e in p.edges() {
        let tau_dst = plan.replicas(t, e.dst);
        if tau_dst == 0 || plan.replicas(t, e.src) == 0 {
            continue;
        }
        let penalty = p.ms()[e.src].remote_penalty;
        let local = replica_pair_rate(e.base_time, penalty, tau_dst, true);
        let remote = replica_pair_rate(e.base_time, penalty, tau_dst, false);
        for &(a, na) in &hosts[e.src] {
            for &(b, nb) in &hosts[e.dst] {
                let rate = if a == b { local } else { remote };
                flows.add(a, b, (na * nb) as f64 * rate);
            }
        }
    }
}

/// Total flow crossing distinct servers; the diagonal is ignored.
pub fn objective_psi(flows: &LinkFlows) -> f64 {
    let n = flows.servers();
    let mut psi = 0.0;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                psi += flows.get(a, b);
            }
        }
    }
    psi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        replica_counts, InstanceKey, LinkCapacity, MsEdge, MsSpec, ServerSpec, Workload,
    };
    use crate::testutil::assert_close;

    fn chain(len: usize, load: u64) -> CpProcedure {
        let ms = (0..len)
            .map(|id| MsSpec {
                id,
                cpu_footprint: 1.0,
                mem_footprint: 1.0,
                remote_penalty: 0.0005,
                max_load: load,
            })
            .collect();
        let edges = (1..len)
            .map(|j| MsEdge {
                src: j - 1,
                dst: j,
                base_time: 0.001,
            })
            .collect();
        CpProcedure::new(0, ms, edges).unwrap()
    }

    fn mesh(n: usize) -> Infrastructure {
        let servers = (0..n)
            .map(|id| ServerSpec {
                id,
                cpu_capacity: 10.0,
                mem_capacity: 10.0,
            })
            .collect();
        Infrastructure::builder(servers)
            .full_mesh(LinkCapacity::Finite(1e6))
            .build()
            .unwrap()
    }

    #[test]
    fn pair_flow_values() {
        let p = chain(2, 1);
        let plan = replica_counts(std::slice::from_ref(&p), &Workload::new().with(0, 1)).unwrap();
        assert_close(pair_flow(&p, &plan, 0, 1, true).unwrap(), 1000.0, 1e-9);
        assert_close(pair_flow(&p, &plan, 0, 1, false).unwrap(), 2000.0 / 3.0, 1e-9);
        let plan2 = replica_counts(std::slice::from_ref(&p), &Workload::new().with(0, 2)).unwrap();
        assert_close(pair_flow(&p, &plan2, 0, 1, false).unwrap(), 1000.0 / 3.0, 1e-9);
    }

    #[test]
    fn pair_flow_errors() {
        let p = chain(2, 1);
        let plan = replica_counts(std::slice::from_ref(&p), &Workload::new().with(0, 1)).unwrap();
        assert!(matches!(pair_flow(&p, &plan, 1, 0, true), Err(Error::Domain(_))));
        let empty = replica_counts(std::slice::from_ref(&p), &Workload::new().with(0, 0)).unwrap();
        assert!(matches!(pair_flow(&p, &empty, 0, 1, true), Err(Error::Domain(_))));
    }

    #[test]
    fn chain_split_and_colocated() {
        let p = chain(2, 1);
        let procs = [p];
        let plan = replica_counts(&procs, &Workload::new().with(0, 1)).unwrap();
        let infra = mesh(3);
        let split: Assignment = [(InstanceKey::new(0, 0, 0), 1), (InstanceKey::new(0, 1, 0), 2)]
            .into_iter()
            .collect();
        let f = link_flows(&infra, &procs, &plan, &split).unwrap();
        assert_close(f.get(1, 2), 2000.0 / 3.0, 1e-9);
        assert_eq!(f.get(2, 1), 0.0);
        assert_close(objective_psi(&f), 666.666_666_666_7, 1e-6);

        let together: Assignment = [(InstanceKey::new(0, 0, 0), 1), (InstanceKey::new(0, 1, 0), 1)]
            .into_iter()
            .collect();
        let f = link_flows(&infra, &procs, &plan, &together).unwrap();
        assert_close(f.get(1, 1), 1000.0, 1e-9);
        assert_eq!(objective_psi(&f), 0.0);
    }

    #[test]
    fn unknown_server_is_a_domain_error() {
        let procs = [chain(2, 1)];
        let plan = replica_counts(&procs, &Workload::new().with(0, 1)).unwrap();
        let bad: Assignment = [(InstanceKey::new(0, 0, 0), 0), (InstanceKey::new(0, 1, 0), 9)]
            .into_iter()
            .collect();
        assert!(link_flows(&mesh(2), &procs, &plan, &bad).is_err());
    }

    #[test]
    fn psi_is_additive_over_off_diagonal_entries() {
        let mut f = LinkFlows::zeros(3);
        f.add(0, 1, 100.0);
        f.add(1, 2, 50.0);
        f.add(2, 2, 999.0);
        assert_eq!(objective_psi(&f), 150.0);
    }

    #[test]
    fn grouped_sum_matches_replica_pair_enumeration() {
        // tau = 3 for both ends, replicas spread over two servers.
        let procs = [chain(2, 1)];
        let plan = replica_counts(&procs, &Workload::new().with(0, 3)).unwrap();
        let servers = [[0, 1, 1], [1, 0, 0]];
        let a: Assignment = (0..2)
            .flat_map(|i| (0..3).map(move |r| (InstanceKey::new(0, i, r), servers[i][r])))
            .collect();
        let f = link_flows(&mesh(2), &procs, &plan, &a).unwrap();
        let mut brute = [[0.0; 2]; 2];
        for l in 0..3 {
            for q in 0..3 {
                let (x, y) = (servers[0][l], servers[1][q]);
                let per = if x == y { 0.001 } else { 0.0015 };
                brute[x][y] += 1.0 / (3.0 * per);
            }
        }
        for x in 0..2 {
            for y in 0..2 {
                assert_close(f.get(x, y), brute[x][y], 1e-9);
            }
        }
    }
}

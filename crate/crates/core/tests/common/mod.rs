#![allow(dead_code)]

use msplace::{
    replica_counts, CpProcedure, Infrastructure, LinkCapacity, MsEdge, MsSpec, ReplicaPlan,
    ServerSpec, Workload,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BASE: f64 = 0.001;
pub const PENALTY: f64 = 0.0005;

pub struct Instance {
    pub infra: Infrastructure,
    pub procedures: Vec<CpProcedure>,
    pub plan: ReplicaPlan,
}

pub fn servers(caps: &[(f64, f64)]) -> Vec<ServerSpec> {
    caps.iter()
        .enumerate()
        .map(|(id, &(cpu, mem))| ServerSpec {
            id,
            cpu_capacity: cpu,
            mem_capacity: mem,
        })
        .collect()
}

pub fn mesh(caps: &[(f64, f64)], link: LinkCapacity) -> Infrastructure {
    Infrastructure::builder(servers(caps)).full_mesh(link).build().unwrap()
}

pub fn unit_ms(n: usize) -> Vec<MsSpec> {
    (0..n)
        .map(|id| MsSpec {
            id,
            cpu_footprint: 1.0,
            mem_footprint: 1.0,
            remote_penalty: PENALTY,
            max_load: 1,
        })
        .collect()
}

pub fn edge(src: usize, dst: usize) -> MsEdge {
    MsEdge {
        src,
        dst,
        base_time: BASE,
    }
}

/// `0 -> 1 -> ... -> n-1` with unit MSs.
pub fn chain(id: usize, n: usize) -> CpProcedure {
    CpProcedure::new(id, unit_ms(n), (1..n).map(|i| edge(i - 1, i)).collect()).unwrap()
}

pub fn one_request(procedures: &[CpProcedure]) -> ReplicaPlan {
    replica_counts(procedures, &Workload::uniform(procedures, 1)).unwrap()
}

/// Remote rate of one `BASE`/`PENALTY` edge with a single destination
/// replica, PDU/s.
pub fn remote_rate() -> f64 {
    1.0 / (BASE + PENALTY)
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, options: &[T]) -> T {
    options[rng.gen_range(0..options.len())]
}

/// Small random instance whose assignment space `|S|^instances` stays at
/// or below `max_space`: mixed capacities, sparse or full adjacency, finite
/// or unbounded links, replicated MSs and one or two procedures.
pub fn micro_instance(seed: u64, max_space: f64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n_servers = rng.gen_range(2..=4);
        let caps: Vec<(f64, f64)> = (0..n_servers)
            .map(|_| (pick(&mut rng, &[1.0, 2.0, 3.0]), pick(&mut rng, &[1.0, 2.0, 3.0])))
            .collect();
        let link_options = [
            LinkCapacity::Unbounded,
            LinkCapacity::Finite(500.0),
            LinkCapacity::Finite(1000.0),
            LinkCapacity::Finite(2000.0),
        ];
        let mut builder = Infrastructure::builder(servers(&caps));
        if rng.gen_bool(0.5) {
            builder = builder.full_mesh(pick(&mut rng, &link_options));
        } else {
            for a in 0..n_servers {
                for b in a + 1..n_servers {
                    if rng.gen_bool(0.6) {
                        let cap = pick(&mut rng, &link_options);
                        builder = builder.link(a, b, cap).link(b, a, cap);
                    }
                }
            }
        }
        let infra = builder.build().unwrap();

        let n_procs = rng.gen_range(1..=2);
        let mut procedures = Vec::new();
        let mut workload = Workload::new();
        for t in 0..n_procs {
            let n_ms = rng.gen_range(2..=3);
            let ms: Vec<MsSpec> = (0..n_ms)
                .map(|id| MsSpec {
                    id,
                    cpu_footprint: pick(&mut rng, &[0.5, 1.0]),
                    mem_footprint: pick(&mut rng, &[0.5, 1.0, 1.5]),
                    remote_penalty: pick(&mut rng, &[0.0005, 0.001]),
                    max_load: pick(&mut rng, &[1, 2]),
                })
                .collect();
            let mut edges = Vec::new();
            for src in 0..n_ms {
                for dst in 0..n_ms {
                    if src != dst && rng.gen_bool(0.5) {
                        edges.push(MsEdge {
                            src,
                            dst,
                            base_time: pick(&mut rng, &[0.001, 0.002]),
                        });
                    }
                }
            }
            procedures.push(CpProcedure::new(t, ms, edges).unwrap());
            workload = workload.with(t, rng.gen_range(1..=2));
        }
        let plan = replica_counts(&procedures, &workload).unwrap();
        let space = (n_servers as f64).powi(plan.total_instances() as i32);
        if space <= max_space {
            return Instance {
                infra,
                procedures,
                plan,
            };
        }
    }
}

//! Full-mesh server farms sized from the footprint of a workload.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    CpProcedure, Infrastructure, LinkCapacity, ReplicaPlan, ServerSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Homogeneity {
    Homogeneous,
    /// A quarter of the servers get a third of the average capacity, the
    /// rest two thirds.
    NonHomogeneous,
}

impl Homogeneity {
    pub fn as_str(self) -> &'static str {
        match self {
            Homogeneity::Homogeneous => "homogeneous",
            Homogeneity::NonHomogeneous => "non_homogeneous",
        }
    }
}

impl fmt::Display for Homogeneity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Homogeneity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homogeneous" => Ok(Homogeneity::Homogeneous),
            "non_homogeneous" | "non-homogeneous" => Ok(Homogeneity::NonHomogeneous),
            _ => Err(Error::config(format!("unknown homogeneity {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmConfig {
    /// Servers per MS instance; the farm has `ceil(ratio * |M|)` servers.
    pub server_ratio: f64,
    pub homogeneity: Homogeneity,
    /// Recorded for provenance; farm construction itself draws nothing.
    #[serde(default)]
    pub seed: u64,
}

/// The footprint summary a farm is sized against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarmDemand {
    pub total_cpu: f64,
    pub total_mem: f64,
    /// Number of MS instances, the `|M|` of the server count.
    pub instances: u64,
    /// Smallest nonzero per-instance footprints; they bound how many
    /// instances a server can host.
    pub min_instance_cpu: f64,
    pub min_instance_mem: f64,
    /// Largest total remote output of one instance, PDU/s.
    pub max_instance_out_flow: f64,
}

impl FarmDemand {
    pub fn from_workload(procedures: &[CpProcedure], plan: &ReplicaPlan) -> Self {
        let mut d = FarmDemand {
            total_cpu: 0.0,
            total_mem: 0.0,
            instances: 0,
            min_instance_cpu: f64::INFINITY,
            min_instance_mem: f64::INFINITY,
            max_instance_out_flow: 0.0,
        };
        for p in procedures {
            for (i, m) in p.ms().iter().enumerate() {
                let tau = plan.replicas(p.id(), i);
                if tau == 0 {
                    continue;
                }
                d.instances += tau;
                d.total_cpu += tau as f64 * m.cpu_footprint;
                d.total_mem += tau as f64 * m.mem_footprint;
                if m.cpu_footprint > 0.0 {
                    d.min_instance_cpu = d.min_instance_cpu.min(m.cpu_footprint);
                }
                if m.mem_footprint > 0.0 {
                    d.min_instance_mem = d.min_instance_mem.min(m.mem_footprint);
                }
                // One replica spreads 1/tau_j of its output over each of the
                // tau_j replicas of j, so its total remote output does not
                // depend on tau_j.
                let out: f64 = p
                    .out_edges(i)
                    .filter(|e| plan.replicas(p.id(), e.dst) > 0)
                    .map(|e| 1.0 / (e.base_time + m.remote_penalty))
                    .sum();
                d.max_instance_out_flow = d.max_instance_out_flow.max(out);
            }
        }
        d
    }

    /// The same demand with totals multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        FarmDemand {
            total_cpu: self.total_cpu * factor,
            total_mem: self.total_mem * factor,
            ..self.clone()
        }
    }
}

/// `ceil(x)` that ignores floating-point noise just above an integer.
pub(crate) fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

pub fn server_count(server_ratio: f64, instances: u64) -> usize {
    ceil_tol(server_ratio * instances as f64) as usize
}

/// Number of small servers in a non-homogeneous farm of `n` servers.
pub fn small_server_count(n: usize) -> usize {
    if n >= 2 {
        (n / 4).max(1)
    } else {
        0
    }
}

/// Farm of `ceil(ratio * |M|)` servers.
pub fn gen_farm(demand: &FarmDemand, config: &FarmConfig) -> Result<Infrastructure> {
    if !(config.server_ratio > 0.0) {
        return Err(Error::config(format!(
            "server ratio must be positive, got {}",
            config.server_ratio
        )));
    }
    let n = server_count(config.server_ratio, demand.instances);
    gen_farm_sized(demand, n, config.homogeneity)
}

/// Farm with exactly `n` servers. The first servers are the small ones in
/// the non-homogeneous case. Every directed link out of server `s` carries
/// `k_s * phi_max`, where `k_s` is how many of the smallest instances fit
/// on `s`.
pub fn gen_farm_sized(demand: &FarmDemand, n: usize, homogeneity: Homogeneity) -> Result<Infrastructure> {
    if n == 0 {
        return Err(Error::config("a farm needs at least one server"));
    }
    let nf = n as f64;
    let caps = |total: f64| -> (f64, f64) {
        match homogeneity {
            Homogeneity::Homogeneous => {
                let c = ceil_tol(total / nf);
                (c, c)
            }
            Homogeneity::NonHomogeneous => {
                (ceil_tol(total / (3.0 * nf)), ceil_tol(2.0 * total / (3.0 * nf)))
            }
        }
    };
    let (small_cpu, large_cpu) = caps(demand.total_cpu);
    let (small_mem, large_mem) = caps(demand.total_mem);
    let small = match homogeneity {
        Homogeneity::Homogeneous => 0,
        Homogeneity::NonHomogeneous => small_server_count(n),
    };
    let servers: Vec<ServerSpec> = (0..n)
        .map(|id| {
            let (cpu, mem) = if id < small {
                (small_cpu, small_mem)
            } else {
                (large_cpu, large_mem)
            };
            ServerSpec {
                id,
                cpu_capacity: cpu,
                mem_capacity: mem,
            }
        })
        .collect();

    let hosted = |s: &ServerSpec| -> f64 {
        let by = |cap: f64, fp: f64| {
            if fp.is_finite() && fp > 0.0 {
                (cap / fp + 1e-9).floor()
            } else {
                f64::INFINITY
            }
        };
        let k = by(s.cpu_capacity, demand.min_instance_cpu).min(by(s.mem_capacity, demand.min_instance_mem));
        if k.is_finite() {
            k
        } else {
            demand.instances as f64
        }
    };
    let mut builder = Infrastructure::builder(servers.clone()).full_mesh(LinkCapacity::Unbounded);
    for s in &servers {
        let cap = LinkCapacity::Finite(hosted(s) * demand.max_instance_out_flow);
        for o in 0..n {
            if o != s.id {
                builder = builder.link(s.id, o, cap);
            }
        }
    }
    builder.build()
}

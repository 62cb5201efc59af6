//! Share of the farm each architecture allocates as the load grows.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::arch::{architectures, place_at_load, workload_farm};
use super::config::{load_grouping, UtilizationConfig};
use super::output::write_csv;
use crate::error::Result;
use crate::flow::{link_flows, objective_psi};
use crate::generate::{aggregate, gen_5gc_workload, u_max, Architecture};
use crate::model::{find_procedure, replica_counts, Resource, Workload};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilizationRecord {
    pub u: u64,
    pub architecture: Architecture,
    pub u_max: u64,
    /// Footprint of every replica the load calls for, as a percentage of
    /// the farm's total capacity.
    pub cpu_pct: f64,
    pub mem_pct: f64,
    /// Whether the heuristic placed the whole load.
    pub placed: bool,
    /// Footprint actually placed, percent; empty when placement failed.
    pub placed_cpu_pct: Option<f64>,
    pub placed_mem_pct: Option<f64>,
    pub psi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilizationResult {
    pub u_max: u64,
    pub records: Vec<UtilizationRecord>,
}

pub fn run_utilization(config: &UtilizationConfig) -> Result<UtilizationResult> {
    config.validate()?;
    let base = gen_5gc_workload();
    let infra = workload_farm(
        &base,
        config.farm_u_hat,
        config.servers,
        config.homogeneity,
        config.capacity_headroom,
    )?;
    let ceiling = u_max(&infra, &base);
    let models = architectures(
        load_grouping(&config.grouping)?,
        config.nf_threads,
        config.procedure_threads,
    );
    let variants = models
        .iter()
        .map(|m| Ok((m.kind(), aggregate(&base, m)?)))
        .collect::<Result<Vec<_>>>()?;
    let total = [
        infra.total_capacity(Resource::Cpu),
        infra.total_capacity(Resource::Mem),
    ];
    let pct = |used: f64, cap: f64| if cap > 0.0 { 100.0 * used / cap } else { 0.0 };

    let mut jobs = Vec::new();
    let mut u = 0;
    while u <= ceiling {
        for v in 0..variants.len() {
            jobs.push((u, v));
        }
        u += config.u_step;
    }
    let records = jobs
        .par_iter()
        .map(|&(u, v)| -> Result<UtilizationRecord> {
            let (kind, procs) = &variants[v];
            let plan = replica_counts(procs, &Workload::uniform(procs, u))?;
            let mut need = [0.0; 2];
            for p in procs {
                for (i, m) in p.ms().iter().enumerate() {
                    let tau = plan.replicas(p.id(), i) as f64;
                    need[0] += tau * m.cpu_footprint;
                    need[1] += tau * m.mem_footprint;
                }
            }
            let placed = place_at_load(&infra, procs, u);
            let (placed_pct, psi) = match &placed {
                Some(a) => {
                    let mut used = [0.0; 2];
                    for (k, _) in a.iter() {
                        let m = &find_procedure(procs, k.procedure).expect("placed procedure").ms()[k.ms];
                        used[0] += m.cpu_footprint;
                        used[1] += m.mem_footprint;
                    }
                    let psi = objective_psi(&link_flows(&infra, procs, &plan, a)?);
                    (Some(used), Some(psi))
                }
                None => (None, None),
            };
            Ok(UtilizationRecord {
                u,
                architecture: *kind,
                u_max: ceiling,
                cpu_pct: pct(need[0], total[0]),
                mem_pct: pct(need[1], total[1]),
                placed: placed.is_some(),
                placed_cpu_pct: placed_pct.map(|p| pct(p[0], total[0])),
                placed_mem_pct: placed_pct.map(|p| pct(p[1], total[1])),
                psi,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UtilizationResult {
        u_max: ceiling,
        records,
    })
}

impl UtilizationResult {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let path = dir.join("utilization.csv");
        write_csv(&path, &self.records)?;
        Ok(vec![path])
    }
}

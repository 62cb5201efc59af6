//! Supported load and cost of MS-, NF- and procedure-based cores over a
//! sweep of farm sizes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{load_grouping, ArchCompareConfig};
use super::output::write_csv;
use crate::error::Result;
use crate::flow::{link_flows, objective_psi};
use crate::generate::{
    aggregate, gen_5gc_workload, gen_farm_sized, Architecture,
    ArchitectureModel, FarmDemand, NfGrouping,
};
use crate::mm::map_all;
use crate::model::{replica_counts, Assignment, CpProcedure, Infrastructure, Workload};

/// Largest loads a farm supports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportedLoad {
    /// Every procedure at the same load, competing for the farm.
    pub joint: u64,
    /// Each procedure alone on the empty farm, by procedure id.
    pub solo: BTreeMap<usize, u64>,
    /// Joint feasibility of every load `0..=u_cap`, when requested.
    pub bitmap: Option<Vec<bool>>,
}

/// Places all `procedures` at uniform load `u` with the heuristic.
pub fn place_at_load(infra: &Infrastructure, procedures: &[CpProcedure], u: u64) -> Option<Assignment> {
    let plan = replica_counts(procedures, &Workload::uniform(procedures, u)).ok()?;
    map_all(infra, procedures, &plan, None).ok()
}

fn largest_feasible(u_cap: u64, feasible: impl Fn(u64) -> bool) -> u64 {
    (1..=u_cap).rev().find(|&u| feasible(u)).unwrap_or(0)
}

/// Largest load in `0..=u_cap` the heuristic can place, scanning down from
/// `u_cap`: feasibility need not be monotone in the load once entities are
/// coarse.
pub fn supported_load(
    infra: &Infrastructure,
    procedures: &[CpProcedure],
    u_cap: u64,
    record_bitmap: bool,
) -> SupportedLoad {
    let joint_ok = |u: u64| place_at_load(infra, procedures, u).is_some();
    let bitmap = record_bitmap.then(|| (0..=u_cap).map(|u| u == 0 || joint_ok(u)).collect::<Vec<_>>());
    let joint = match &bitmap {
        Some(b) => b.iter().rposition(|&ok| ok).unwrap_or(0) as u64,
        None => largest_feasible(u_cap, joint_ok),
    };
    let solo = procedures
        .iter()
        .map(|p| {
            let one = std::slice::from_ref(p);
            (p.id(), largest_feasible(u_cap, |u| place_at_load(infra, one, u).is_some()))
        })
        .collect();
    SupportedLoad { joint, solo, bitmap }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchRecord {
    pub u_hat: u64,
    pub servers: usize,
    pub architecture: Architecture,
    pub small_capacity: f64,
    pub large_capacity: f64,
    /// Largest entity footprint of the architecture.
    pub max_entity_footprint: f64,
    pub i_hat_joint: u64,
    pub i_hat_min_solo: u64,
    /// Cost of the joint placement at the supported load; 0 when nothing
    /// can be placed.
    pub psi_at_i_hat: f64,
    pub feasible_at_u_hat: bool,
    pub psi_at_u_hat: Option<f64>,
    pub t_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchProcedureRecord {
    pub u_hat: u64,
    pub servers: usize,
    pub architecture: Architecture,
    pub procedure: usize,
    pub name: String,
    pub i_hat_solo: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitmapRecord {
    pub u_hat: u64,
    pub servers: usize,
    pub architecture: Architecture,
    pub u: u64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchCompareResult {
    pub records: Vec<ArchRecord>,
    pub procedures: Vec<ArchProcedureRecord>,
    pub bitmap: Vec<BitmapRecord>,
}

/// The three architectures of the default workload.
pub fn architectures(grouping: NfGrouping, nf_threads: u64, procedure_threads: u64) -> Vec<ArchitectureModel> {
    vec![
        ArchitectureModel::MsBased,
        ArchitectureModel::NfBased {
            grouping,
            threads: nf_threads,
        },
        ArchitectureModel::ProcedureBased {
            threads: procedure_threads,
        },
    ]
}

/// Farm of `servers` sized for the MS-based workload at `u_hat`, times
/// `headroom`.
pub fn workload_farm(
    base: &[CpProcedure],
    u_hat: u64,
    servers: usize,
    homogeneity: crate::generate::Homogeneity,
    headroom: f64,
) -> Result<Infrastructure> {
    let plan = replica_counts(base, &Workload::uniform(base, u_hat))?;
    let demand = FarmDemand::from_workload(base, &plan).scaled(headroom);
    gen_farm_sized(&demand, servers, homogeneity)
}

pub fn run_arch_compare(config: &ArchCompareConfig) -> Result<ArchCompareResult> {
    config.validate()?;
    let base = gen_5gc_workload();
    let grouping = load_grouping(&config.grouping)?;
    let models = architectures(grouping, config.nf_threads, config.procedure_threads);
    let variants: Vec<Vec<CpProcedure>> = models
        .iter()
        .map(|m| aggregate(&base, m))
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for &u_hat in &config.u_hats {
        for &servers in &config.server_counts {
            for a in 0..models.len() {
                jobs.push((u_hat, servers, a));
            }
        }
    }
    let outputs = jobs
        .par_iter()
        .map(|&(u_hat, servers, a)| -> Result<_> {
            let infra = workload_farm(&base, u_hat, servers, config.homogeneity, config.capacity_headroom)?;
            let procs = &variants[a];
            let kind = models[a].kind();
            let start = Instant::now();
            let load = supported_load(&infra, procs, u_hat, config.record_bitmap);
            let psi_of = |u: u64| -> Result<Option<f64>> {
                let Some(assignment) = place_at_load(&infra, procs, u) else {
                    return Ok(None);
                };
                let plan = replica_counts(procs, &Workload::uniform(procs, u))?;
                Ok(Some(objective_psi(&link_flows(&infra, procs, &plan, &assignment)?)))
            };
            let psi_at_u_hat = psi_of(u_hat)?;
            let psi_at_i_hat = psi_of(load.joint)?.unwrap_or(0.0);
            let t = start.elapsed().as_secs_f64();
            let caps = infra.servers().iter().map(|s| s.cpu_capacity);
            let record = ArchRecord {
                u_hat,
                servers,
                architecture: kind,
                small_capacity: caps.clone().fold(f64::INFINITY, f64::min),
                large_capacity: caps.fold(0.0, f64::max),
                max_entity_footprint: procs
                    .iter()
                    .flat_map(|p| p.ms())
                    .map(|m| m.cpu_footprint.max(m.mem_footprint))
                    .fold(0.0, f64::max),
                i_hat_joint: load.joint,
                i_hat_min_solo: load.solo.values().copied().min().unwrap_or(0),
                psi_at_i_hat,
                feasible_at_u_hat: psi_at_u_hat.is_some(),
                psi_at_u_hat,
                t_s: config.timings.then_some(t),
            };
            let per_proc: Vec<ArchProcedureRecord> = procs
                .iter()
                .map(|p| ArchProcedureRecord {
                    u_hat,
                    servers,
                    architecture: kind,
                    procedure: p.id(),
                    name: p.name().unwrap_or("").to_owned(),
                    i_hat_solo: load.solo[&p.id()],
                })
                .collect();
            let bitmap: Vec<BitmapRecord> = load
                .bitmap
                .iter()
                .flatten()
                .enumerate()
                .map(|(u, &feasible)| BitmapRecord {
                    u_hat,
                    servers,
                    architecture: kind,
                    u: u as u64,
                    feasible,
                })
                .collect();
            Ok((record, per_proc, bitmap))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut result = ArchCompareResult {
        records: Vec::new(),
        procedures: Vec::new(),
        bitmap: Vec::new(),
    };
    for (r, p, b) in outputs {
        result.records.push(r);
        result.procedures.extend(p);
        result.bitmap.extend(b);
    }
    Ok(result)
}

impl ArchCompareResult {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = vec![dir.join("arch_compare.csv"), dir.join("arch_compare_procedures.csv")];
        write_csv(&written[0], &self.records)?;
        write_csv(&written[1], &self.procedures)?;
        if !self.bitmap.is_empty() {
            let path = dir.join("arch_compare_bitmap.csv");
            write_csv(&path, &self.bitmap)?;
            written.push(path);
        }
        Ok(written)
    }
}

//! Heuristic versus exact cost on random single-procedure instances.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::CostGapConfig;
use super::output::write_csv;
use crate::constraints::check_constraints;
use crate::error::Result;
use crate::exact::{linearize, model_stats, solve_bnb, SolveStatus};
use crate::flow::{link_flows, objective_psi};
use crate::generate::{gen_farm, gen_random_procedure, FarmConfig, FarmDemand, Homogeneity, RandomGraphConfig};
use crate::mm::map_all;
use crate::model::{replica_counts, Workload};
use crate::scenario::Scenario;

/// Outcome of the heuristic on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MmStatus {
    Ok,
    NoSolution,
    /// The heuristic returned an assignment that breaks a constraint.
    Invalid,
}

/// One run. Serialized column order is the CSV schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostGapRecord {
    pub m: usize,
    pub sigma: f64,
    pub pi: f64,
    pub seed: u64,
    pub psi_mm: Option<f64>,
    /// Proven optimum; empty unless the exact solve finished.
    pub psi_exact: Option<f64>,
    pub gap: Option<f64>,
    pub t_mm_s: Option<f64>,
    pub t_exact_s: Option<f64>,
    pub vars: usize,
    pub cons: usize,
    pub exact_status: SolveStatus,
    /// Best assignment found by a solve that ran out of time.
    pub psi_exact_incumbent: Option<f64>,
    pub mm_status: MmStatus,
    #[serde(skip)]
    pub homogeneity: Homogeneity,
}

/// Aggregates of one `(homogeneity, m, sigma, pi)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostGapCell {
    pub homogeneity: Homogeneity,
    pub m: usize,
    pub sigma: f64,
    pub pi: f64,
    pub runs: usize,
    pub mm_solved: usize,
    pub mm_invalid: usize,
    pub exact_optimal: usize,
    pub exact_infeasible: usize,
    pub exact_timeouts: usize,
    /// Runs where both solvers produced a cost; the gap averages use these.
    pub gap_runs: usize,
    pub mean_gap: Option<f64>,
    pub max_gap: Option<f64>,
    pub min_gap: Option<f64>,
    pub mean_vars: f64,
    pub mean_cons: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostGapResult {
    pub records: Vec<CostGapRecord>,
    pub cells: Vec<CostGapCell>,
}

struct Job {
    homogeneity: Homogeneity,
    h: usize,
    m: usize,
    s: usize,
    p: usize,
    k: usize,
}

pub fn run_cost_gap(config: &CostGapConfig) -> Result<CostGapResult> {
    config.validate()?;
    let mut jobs = Vec::new();
    for (h, &homogeneity) in config.homogeneities.iter().enumerate() {
        for &m in &config.ms_counts {
            for s in 0..config.server_ratios.len() {
                for p in 0..config.edge_probabilities.len() {
                    for k in 0..config.iterations {
                        jobs.push(Job { homogeneity, h, m, s, p, k });
                    }
                }
            }
        }
    }
    let mut records = jobs
        .par_iter()
        .map(|j| {
            let r = cost_gap_run(
                config,
                j.homogeneity,
                j.m,
                config.server_ratios[j.s],
                config.edge_probabilities[j.p],
                config.seed + j.k as u64,
            );
            r.map(|r| ((j.h, j.m, j.s, j.p, j.k), r))
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|(key, _)| *key);

    let mut cells = Vec::new();
    for chunk in records.chunk_by(|a, b| (a.0 .0, a.0 .1, a.0 .2, a.0 .3) == (b.0 .0, b.0 .1, b.0 .2, b.0 .3)) {
        let runs: Vec<&CostGapRecord> = chunk.iter().map(|(_, r)| r).collect();
        cells.push(summarize(&runs));
    }
    Ok(CostGapResult {
        records: records.into_iter().map(|(_, r)| r).collect(),
        cells,
    })
}

/// Generates and solves one instance with both solvers.
/// One single-procedure instance of the cost-gap sweep: a random graph of
/// `m` unit MSs with edge probability `pi`, one request, and a farm of
/// `sigma * m` servers.
pub fn cost_gap_instance(homogeneity: Homogeneity, m: usize, sigma: f64, pi: f64, seed: u64) -> Result<Scenario> {
    let procedure = gen_random_procedure(&RandomGraphConfig::unit(m, pi, seed), 0)?;
    let procedures = vec![procedure];
    let workload = Workload::new().with(0, 1);
    let plan = replica_counts(&procedures, &workload)?;
    let demand = FarmDemand::from_workload(&procedures, &plan);
    let infra = gen_farm(
        &demand,
        &FarmConfig {
            server_ratio: sigma,
            homogeneity,
            seed,
        },
    )?;
    Ok(Scenario {
        infra,
        procedures,
        workload,
    })
}

pub fn cost_gap_run(
    config: &CostGapConfig,
    homogeneity: Homogeneity,
    m: usize,
    sigma: f64,
    pi: f64,
    seed: u64,
) -> Result<CostGapRecord> {
    let scenario = cost_gap_instance(homogeneity, m, sigma, pi, seed)?;
    let plan = scenario.plan()?;
    let Scenario { infra, procedures, .. } = scenario;

    let start = Instant::now();
    let mm = map_all(&infra, &procedures, &plan, None);
    let t_mm = start.elapsed().as_secs_f64();
    let (mm_status, psi_mm) = match mm {
        Ok(a) => {
            if check_constraints(&infra, &procedures, &plan, &a).all_pass() {
                let psi = objective_psi(&link_flows(&infra, &procedures, &plan, &a)?);
                (MmStatus::Ok, Some(psi))
            } else {
                (MmStatus::Invalid, None)
            }
        }
        Err(_) => (MmStatus::NoSolution, None),
    };

    let start = Instant::now();
    let model = linearize(&infra, &procedures, &plan);
    let (vars, cons) = model_stats(&model);
    let outcome = solve_bnb(&model, config.time_limit_s)?;
    let t_exact = start.elapsed().as_secs_f64();
    let psi_exact = (outcome.status == SolveStatus::Optimal)
        .then_some(outcome.best_psi)
        .flatten();
    let psi_exact_incumbent = (outcome.status == SolveStatus::TimeLimit)
        .then_some(outcome.best_psi)
        .flatten();
    let gap = psi_mm.zip(psi_exact).map(|(h, e)| h - e);

    Ok(CostGapRecord {
        m,
        sigma,
        pi,
        seed,
        psi_mm,
        psi_exact,
        gap,
        t_mm_s: config.timings.then_some(t_mm),
        t_exact_s: config.timings.then_some(t_exact),
        vars,
        cons,
        exact_status: outcome.status,
        psi_exact_incumbent,
        mm_status,
        homogeneity,
    })
}

fn summarize(runs: &[&CostGapRecord]) -> CostGapCell {
    let first = runs[0];
    let gaps: Vec<f64> = runs.iter().filter_map(|r| r.gap).collect();
    let count = |f: &dyn Fn(&CostGapRecord) -> bool| runs.iter().filter(|r| f(r)).count();
    let n = runs.len() as f64;
    CostGapCell {
        homogeneity: first.homogeneity,
        m: first.m,
        sigma: first.sigma,
        pi: first.pi,
        runs: runs.len(),
        mm_solved: count(&|r| r.mm_status == MmStatus::Ok),
        mm_invalid: count(&|r| r.mm_status == MmStatus::Invalid),
        exact_optimal: count(&|r| r.exact_status == SolveStatus::Optimal),
        exact_infeasible: count(&|r| r.exact_status == SolveStatus::Infeasible),
        exact_timeouts: count(&|r| r.exact_status == SolveStatus::TimeLimit),
        gap_runs: gaps.len(),
        mean_gap: (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64),
        max_gap: gaps.iter().copied().reduce(f64::max),
        min_gap: gaps.iter().copied().reduce(f64::min),
        mean_vars: runs.iter().map(|r| r.vars as f64).sum::<f64>() / n,
        mean_cons: runs.iter().map(|r| r.cons as f64).sum::<f64>() / n,
    }
}

impl CostGapResult {
    /// One CSV of runs per homogeneity mode plus a per-cell summary.
    pub fn write(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        let mut written = Vec::new();
        let mut modes: Vec<Homogeneity> = self.records.iter().map(|r| r.homogeneity).collect();
        modes.dedup();
        for h in modes {
            let path = dir.join(format!("cost_gap_{h}.csv"));
            write_csv(&path, self.records.iter().filter(|r| r.homogeneity == h))?;
            written.push(path);
        }
        let path = dir.join("cost_gap_summary.csv");
        write_csv(&path, self.cells.iter())?;
        written.push(path);
        Ok(written)
    }
}

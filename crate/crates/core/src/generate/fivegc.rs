//! The three-procedure mobile-core workload and its NF- and
//! procedure-level aggregates.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CpProcedure, Infrastructure, MsEdge, MsSpec, Resource};

/// Procedure names and chain lengths of the workload.
pub const FIVEGC_PROCEDURES: [(&str, usize); 3] = [
    ("registration", 34),
    ("deregistration", 15),
    ("pdu_session_modification", 13),
];

/// Chains of 34, 15 and 13 MSs with unit footprints, 1 ms base time,
/// 0.5 ms remote penalty and one request per instance.
pub fn gen_5gc_workload() -> Vec<CpProcedure> {
    FIVEGC_PROCEDURES
        .iter()
        .enumerate()
        .map(|(id, &(name, len))| {
            let ms = (0..len)
                .map(|i| MsSpec {
                    id: i,
                    cpu_footprint: 1.0,
                    mem_footprint: 1.0,
                    remote_penalty: 0.0005,
                    max_load: 1,
                })
                .collect();
            let edges = (1..len)
                .map(|j| MsEdge {
                    src: j - 1,
                    dst: j,
                    base_time: 0.001,
                })
                .collect();
            CpProcedure::new(id, ms, edges)
                .expect("chain is well formed")
                .with_name(name)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NfGroup {
    pub name: String,
    #[serde(default)]
    pub procedure: usize,
    pub ms_ids: Vec<usize>,
}

/// Assignment of each procedure's MSs to network functions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NfGrouping {
    pub groups: Vec<NfGroup>,
}

const BUNDLED_GROUPING: &str = include_str!("../../data/nf_grouping_illustrative.json");

impl NfGrouping {
    /// The bundled illustrative grouping of the default workload.
    pub fn illustrative() -> Self {
        serde_json::from_str(BUNDLED_GROUPING).expect("bundled grouping parses")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Groups of one procedure, each as sorted member ids, ordered by their
    /// smallest member. Errors unless they partition `0..ms_count`.
    fn partition_of(&self, procedure: &CpProcedure) -> Result<Vec<Vec<usize>>> {
        let n = procedure.ms_count();
        let mut owner = vec![None; n];
        let mut groups = Vec::new();
        for (g, group) in self
            .groups
            .iter()
            .filter(|g| g.procedure == procedure.id())
            .enumerate()
        {
            if group.ms_ids.is_empty() {
                return Err(Error::config(format!(
                    "group {} of procedure {} is empty",
                    group.name,
                    procedure.id()
                )));
            }
            let mut members = group.ms_ids.clone();
            members.sort_unstable();
            for &i in &members {
                if i >= n {
                    return Err(Error::config(format!(
                        "group {} names MS {i}, but procedure {} has {n}",
                        group.name,
                        procedure.id()
                    )));
                }
                if owner[i].replace(g).is_some() {
                    return Err(Error::config(format!(
                        "MS {i} of procedure {} is in more than one group",
                        procedure.id()
                    )));
                }
            }
            groups.push(members);
        }
        if let Some(i) = owner.iter().position(Option::is_none) {
            return Err(Error::config(format!(
                "MS {i} of procedure {} is in no group",
                procedure.id()
            )));
        }
        groups.sort_by_key(|g| g[0]);
        Ok(groups)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArchitectureModel {
    MsBased,
    NfBased { grouping: NfGrouping, threads: u64 },
    ProcedureBased { threads: u64 },
}

/// Short label of an architecture, as used in CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Ms,
    Nf,
    Procedure,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::Ms, Architecture::Nf, Architecture::Procedure];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Ms => "ms",
            Architecture::Nf => "nf",
            Architecture::Procedure => "procedure",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ms" => Ok(Architecture::Ms),
            "nf" => Ok(Architecture::Nf),
            "procedure" => Ok(Architecture::Procedure),
            _ => Err(Error::config(format!("unknown architecture {s:?}"))),
        }
    }
}

impl ArchitectureModel {
    pub fn kind(&self) -> Architecture {
        match self {
            ArchitectureModel::MsBased => Architecture::Ms,
            ArchitectureModel::NfBased { .. } => Architecture::Nf,
            ArchitectureModel::ProcedureBased { .. } => Architecture::Procedure,
        }
    }
}

/// Collapses MSs into NF or procedure entities.
///
/// Entity footprints are member sums times `threads` and each entity serves
/// `threads` requests. Parallel member edges between two NFs merge into one
/// edge whose rate is the sum of member rates, `1/a = sum 1/a_e`; the
/// remote penalty of an NF is the largest among its members.
pub fn aggregate(procedures: &[CpProcedure], model: &ArchitectureModel) -> Result<Vec<CpProcedure>> {
    match model {
        ArchitectureModel::MsBased => Ok(procedures.to_vec()),
        ArchitectureModel::NfBased { grouping, threads } => {
            check_threads(*threads)?;
            procedures
                .iter()
                .map(|p| aggregate_nf(p, grouping, *threads))
                .collect()
        }
        ArchitectureModel::ProcedureBased { threads } => {
            check_threads(*threads)?;
            procedures
                .iter()
                .map(|p| {
                    let all: Vec<usize> = (0..p.ms_count()).collect();
                    let node = merged_spec(p, 0, &all, *threads);
                    rename(CpProcedure::new(p.id(), vec![node], vec![])?, p)
                })
                .collect()
        }
    }
}

fn check_threads(threads: u64) -> Result<()> {
    if threads == 0 {
        return Err(Error::config("threads per instance must be at least 1"));
    }
    Ok(())
}

fn rename(agg: CpProcedure, original: &CpProcedure) -> Result<CpProcedure> {
    Ok(match original.name() {
        Some(name) => agg.with_name(name),
        None => agg,
    })
}

fn merged_spec(p: &CpProcedure, id: usize, members: &[usize], threads: u64) -> MsSpec {
    let ms = p.ms();
    MsSpec {
        id,
        cpu_footprint: threads as f64 * members.iter().map(|&i| ms[i].cpu_footprint).sum::<f64>(),
        mem_footprint: threads as f64 * members.iter().map(|&i| ms[i].mem_footprint).sum::<f64>(),
        remote_penalty: members
            .iter()
            .map(|&i| ms[i].remote_penalty)
            .fold(0.0, f64::max),
        max_load: threads,
    }
}

fn aggregate_nf(p: &CpProcedure, grouping: &NfGrouping, threads: u64) -> Result<CpProcedure> {
    let groups = grouping.partition_of(p)?;
    let mut owner = vec![0; p.ms_count()];
    for (g, members) in groups.iter().enumerate() {
        for &i in members {
            owner[i] = g;
        }
    }
    let nodes = groups
        .iter()
        .enumerate()
        .map(|(g, members)| merged_spec(p, g, members, threads))
        .collect();
    let mut inverse_time: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in p.edges() {
        let (a, b) = (owner[e.src], owner[e.dst]);
        if a != b {
            *inverse_time.entry((a, b)).or_insert(0.0) += 1.0 / e.base_time;
        }
    }
    let edges = inverse_time
        .into_iter()
        .map(|((src, dst), inv)| MsEdge {
            src,
            dst,
            base_time: 1.0 / inv,
        })
        .collect();
    rename(CpProcedure::new(p.id(), nodes, edges)?, p)
}

/// Largest uniform load `U` whose replica footprint,
/// `sum_t sum_i ceil(U / l_i) f_i`, fits in the total farm capacity of
/// both resources. `u64::MAX` if no MS has a footprint.
pub fn u_max(infra: &Infrastructure, procedures: &[CpProcedure]) -> u64 {
    let need = |u: u64, r: Resource| -> f64 {
        procedures
            .iter()
            .flat_map(|p| p.ms())
            .map(|m| u.div_ceil(m.max_load) as f64 * m.footprint(r))
            .sum()
    };
    let weightless = procedures
        .iter()
        .flat_map(|p| p.ms())
        .all(|m| m.cpu_footprint == 0.0 && m.mem_footprint == 0.0);
    if weightless {
        return u64::MAX;
    }
    let fits = |u: u64| {
        [Resource::Cpu, Resource::Mem].into_iter().all(|r| {
            let cap = infra.total_capacity(r);
            need(u, r) <= cap + crate::TOL * cap.max(1.0)
        })
    };
    let mut u = 0;
    while fits(u + 1) {
        u += 1;
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinkCapacity, ServerSpec};

    fn one_server(cap: f64) -> Infrastructure {
        Infrastructure::builder(vec![ServerSpec {
            id: 0,
            cpu_capacity: cap,
            mem_capacity: cap,
        }])
        .full_mesh(LinkCapacity::Unbounded)
        .build()
        .unwrap()
    }

    fn total_cpu(ps: &[CpProcedure]) -> f64 {
        ps.iter().flat_map(|p| p.ms()).map(|m| m.cpu_footprint).sum()
    }

    #[test]
    fn workload_shape() {
        let w = gen_5gc_workload();
        assert_eq!(w.iter().map(|p| p.ms_count()).sum::<usize>(), 62);
        assert_eq!(w[0].edges().len(), 33);
        assert_eq!(w[0].name(), Some("registration"));
        assert!(w.iter().flat_map(|p| p.ms()).all(|m| m.max_load == 1));
    }

    #[test]
    fn procedure_aggregate_is_a_single_node() {
        let w = gen_5gc_workload();
        let agg = aggregate(&w, &ArchitectureModel::ProcedureBased { threads: 1 }).unwrap();
        for (a, p) in agg.iter().zip(&w) {
            assert_eq!(a.ms_count(), 1);
            assert!(a.edges().is_empty());
            assert_eq!(a.ms()[0].cpu_footprint, p.ms_count() as f64);
            assert_eq!(a.id(), p.id());
        }
    }

    #[test]
    fn nf_aggregate_preserves_footprint_and_merges_rates() {
        let w = gen_5gc_workload();
        let grouping = NfGrouping::illustrative();
        let agg = aggregate(&w, &ArchitectureModel::NfBased { grouping, threads: 1 }).unwrap();
        assert_eq!(total_cpu(&agg), 62.0);
        // Chain blocks become a chain of NFs, one crossing edge each.
        assert_eq!(agg[0].ms_count(), 5);
        assert_eq!(agg[0].edges().len(), 4);
        assert_eq!(agg[0].ms()[0].cpu_footprint, 20.0);
        assert_eq!(agg[0].edges()[0].base_time, 0.001);
    }

    #[test]
    fn parallel_edges_add_their_rates() {
        let ms = (0..4)
            .map(|id| MsSpec {
                id,
                cpu_footprint: 1.0,
                mem_footprint: 1.0,
                remote_penalty: 0.0,
                max_load: 1,
            })
            .collect();
        let edges = vec![
            MsEdge { src: 0, dst: 2, base_time: 0.001 },
            MsEdge { src: 1, dst: 3, base_time: 0.002 },
        ];
        let p = CpProcedure::new(0, ms, edges).unwrap();
        let grouping = NfGrouping {
            groups: vec![
                NfGroup { name: "A".into(), procedure: 0, ms_ids: vec![0, 1] },
                NfGroup { name: "B".into(), procedure: 0, ms_ids: vec![2, 3] },
            ],
        };
        let agg = aggregate(&[p], &ArchitectureModel::NfBased { grouping, threads: 1 }).unwrap();
        let e = agg[0].edges()[0];
        assert!((1.0 / e.base_time - 1500.0).abs() < 1e-9);
    }

    #[test]
    fn threads_scale_footprint_and_load() {
        let w = gen_5gc_workload();
        let agg = aggregate(
            &w,
            &ArchitectureModel::NfBased { grouping: NfGrouping::illustrative(), threads: 50 },
        )
        .unwrap();
        assert_eq!(total_cpu(&agg), 62.0 * 50.0);
        assert!(agg.iter().flat_map(|p| p.ms()).all(|m| m.max_load == 50));
    }

    #[test]
    fn bad_grouping_is_a_config_error() {
        let w = gen_5gc_workload();
        let mut g = NfGrouping::illustrative();
        g.groups[0].ms_ids.pop();
        let r = aggregate(&w, &ArchitectureModel::NfBased { grouping: g.clone(), threads: 1 });
        assert!(matches!(r, Err(Error::Config(_))));
        g.groups[0].ms_ids.push(20);
        let r = aggregate(&w, &ArchitectureModel::NfBased { grouping: g, threads: 1 });
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn u_max_examples() {
        let ms = (0..5)
            .map(|id| MsSpec {
                id,
                cpu_footprint: 1.0,
                mem_footprint: 1.0,
                remote_penalty: 0.0,
                max_load: 1,
            })
            .collect();
        let p = vec![CpProcedure::new(0, ms, vec![]).unwrap()];
        assert_eq!(u_max(&one_server(50.0), &p), 10);
        assert_eq!(u_max(&one_server(0.0), &p), 0);
    }

    #[test]
    fn u_max_staircase_under_threads() {
        // One 50-thread entity of footprint 50: capacity 120 admits two
        // instances, i.e. loads up to 100.
        let agg = aggregate(
            &[gen_5gc_workload()[2].clone()],
            &ArchitectureModel::ProcedureBased { threads: 50 },
        )
        .unwrap();
        let per = 13.0 * 50.0;
        assert_eq!(u_max(&one_server(2.0 * per), &agg), 100);
        assert_eq!(u_max(&one_server(2.0 * per + 1.0), &agg), 100);
        assert_eq!(u_max(&one_server(3.0 * per), &agg), 150);
    }
}

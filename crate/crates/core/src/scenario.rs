//! JSON files: scenarios (farm, procedures, workload) and assignments.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{link_flows, objective_psi};
use crate::model::{
    replica_counts, Assignment, CpProcedure, Infrastructure, InstanceKey, LinkCapacity, MsEdge,
    MsSpec, ReplicaPlan, Resource, ServerSpec, Workload,
};

/// A complete problem instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub infra: Infrastructure,
    pub procedures: Vec<CpProcedure>,
    pub workload: Workload,
}

impl Scenario {
    pub fn plan(&self) -> Result<ReplicaPlan> {
        replica_counts(&self.procedures, &self.workload)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ScenarioFile = serde_json::from_str(text)?;
        raw.into_scenario()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ScenarioFile::from_scenario(self)).expect("serializable") + "\n"
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write(path, &self.to_json())
    }
}

pub(crate) fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    infrastructure: InfraFile,
    procedures: Vec<ProcedureFile>,
    workload: Vec<WorkloadEntry>,
    /// Capacities and footprints are in absolute units; divide each
    /// resource by the largest server capacity of that resource.
    #[serde(default, skip_serializing_if = "is_false")]
    normalize: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InfraFile {
    servers: Vec<ServerFile>,
    #[serde(default)]
    links: Vec<LinkFile>,
    #[serde(default)]
    full_mesh: bool,
    /// Capacity of every mesh link; absent or null means unbounded.
    #[serde(default)]
    mesh_capacity: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ServerFile {
    id: usize,
    cpu: f64,
    mem: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkFile {
    a: usize,
    b: usize,
    /// Capacity of `a -> b`, PDU/s; null means unbounded.
    capacity: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProcedureFile {
    id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    ms: Vec<MsFile>,
    #[serde(default)]
    edges: Vec<EdgeFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MsFile {
    id: usize,
    cpu: f64,
    mem: f64,
    load: u64,
    remote_penalty_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeFile {
    src: usize,
    dst: usize,
    base_time_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkloadEntry {
    procedure: usize,
    requests: u64,
}

fn capacity(c: Option<f64>) -> LinkCapacity {
    c.map_or(LinkCapacity::Unbounded, LinkCapacity::Finite)
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let (cpu_scale, mem_scale) = if self.normalize {
            let max = |f: fn(&ServerFile) -> f64| {
                self.infrastructure.servers.iter().map(f).fold(0.0, f64::max)
            };
            let (c, m) = (max(|s| s.cpu), max(|s| s.mem));
            if !(c > 0.0 && m > 0.0) {
                return Err(Error::config("normalization needs a server with positive capacities"));
            }
            (c, m)
        } else {
            (1.0, 1.0)
        };
        let servers = self
            .infrastructure
            .servers
            .iter()
            .map(|s| ServerSpec {
                id: s.id,
                cpu_capacity: s.cpu / cpu_scale,
                mem_capacity: s.mem / mem_scale,
            })
            .collect();
        let mut builder = Infrastructure::builder(servers);
        if self.infrastructure.full_mesh {
            builder = builder.full_mesh(capacity(self.infrastructure.mesh_capacity));
        }
        for l in &self.infrastructure.links {
            builder = builder.link(l.a, l.b, capacity(l.capacity));
        }
        let infra = builder.build()?;

        let mut ids = BTreeSet::new();
        let mut procedures = Vec::new();
        for p in self.procedures {
            if !ids.insert(p.id) {
                return Err(Error::config(format!("duplicate procedure id {}", p.id)));
            }
            let ms = p
                .ms
                .iter()
                .map(|m| MsSpec {
                    id: m.id,
                    cpu_footprint: m.cpu / cpu_scale,
                    mem_footprint: m.mem / mem_scale,
                    remote_penalty: m.remote_penalty_s,
                    max_load: m.load,
                })
                .collect();
            let edges = p
                .edges
                .iter()
                .map(|e| MsEdge {
                    src: e.src,
                    dst: e.dst,
                    base_time: e.base_time_s,
                })
                .collect();
            let mut proc_ = CpProcedure::new(p.id, ms, edges)?;
            if let Some(name) = p.name {
                proc_ = proc_.with_name(name);
            }
            procedures.push(proc_);
        }
        let mut workload = Workload::new();
        for w in &self.workload {
            if workload.get(w.procedure).is_some() {
                return Err(Error::config(format!(
                    "duplicate workload entry for procedure {}",
                    w.procedure
                )));
            }
            workload = workload.with(w.procedure, w.requests);
        }
        let scenario = Scenario {
            infra,
            procedures,
            workload,
        };
        scenario.plan()?;
        Ok(scenario)
    }

    fn from_scenario(s: &Scenario) -> Self {
        let infra = &s.infra;
        let n = infra.len();
        // A uniform full mesh collapses to one capacity.
        let uniform = (infra.is_full_mesh() && n > 1)
            .then(|| infra.link_capacity(0, 1))
            .filter(|&c| {
                (0..n).all(|a| (0..n).all(|b| a == b || infra.link_capacity(a, b) == c))
            });
        let links = match uniform {
            Some(_) => Vec::new(),
            None => (0..n)
                .flat_map(|a| (0..n).map(move |b| (a, b)))
                .filter(|&(a, b)| a != b && infra.adjacent(a, b))
                .map(|(a, b)| LinkFile {
                    a,
                    b,
                    capacity: infra.link_capacity(a, b).finite(),
                })
                .collect(),
        };
        ScenarioFile {
            infrastructure: InfraFile {
                servers: infra
                    .servers()
                    .iter()
                    .map(|sv| ServerFile {
                        id: sv.id,
                        cpu: sv.cpu_capacity,
                        mem: sv.mem_capacity,
                    })
                    .collect(),
                links,
                full_mesh: uniform.is_some(),
                mesh_capacity: uniform.and_then(LinkCapacity::finite),
            },
            procedures: s
                .procedures
                .iter()
                .map(|p| ProcedureFile {
                    id: p.id(),
                    name: p.name().map(str::to_owned),
                    ms: p
                        .ms()
                        .iter()
                        .map(|m| MsFile {
                            id: m.id,
                            cpu: m.cpu_footprint,
                            mem: m.mem_footprint,
                            load: m.max_load,
                            remote_penalty_s: m.remote_penalty,
                        })
                        .collect(),
                    edges: p
                        .edges()
                        .iter()
                        .map(|e| EdgeFile {
                            src: e.src,
                            dst: e.dst,
                            base_time_s: e.base_time,
                        })
                        .collect(),
                })
                .collect(),
            workload: s
                .workload
                .iter()
                .map(|(procedure, requests)| WorkloadEntry {
                    procedure,
                    requests,
                })
                .collect(),
            normalize: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignmentEntry {
    pub procedure: usize,
    pub ms: usize,
    pub replica: usize,
    pub server: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkFlowEntry {
    pub a: usize,
    pub b: usize,
    pub flow: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilizationEntry {
    pub server: usize,
    /// Fraction of the capacity in use; null for a zero-capacity server.
    pub cpu: Option<f64>,
    pub mem: Option<f64>,
}

/// Serialized form of a solved assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentFile {
    pub assignment: Vec<AssignmentEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(default)]
    pub link_flows: Vec<LinkFlowEntry>,
    #[serde(default)]
    pub per_server_utilization: Vec<UtilizationEntry>,
}

impl AssignmentFile {
    /// Derives flows, cost and utilization of `assignment`.
    pub fn build(scenario: &Scenario, assignment: &Assignment) -> Result<Self> {
        let plan = scenario.plan()?;
        let flows = link_flows(&scenario.infra, &scenario.procedures, &plan, assignment)?;
        let n = scenario.infra.len();
        let mut load = vec![[0.0f64; 2]; n];
        for (k, s) in assignment.iter() {
            if let Some(p) = scenario.procedures.iter().find(|p| p.id() == k.procedure) {
                let m = &p.ms()[k.ms];
                load[s][0] += m.cpu_footprint;
                load[s][1] += m.mem_footprint;
            }
        }
        let frac = |l: f64, c: f64| if c > 0.0 { Some(l / c) } else { (l == 0.0).then_some(0.0) };
        Ok(AssignmentFile {
            assignment: assignment
                .iter()
                .map(|(k, server)| AssignmentEntry {
                    procedure: k.procedure,
                    ms: k.ms,
                    replica: k.replica,
                    server,
                })
                .collect(),
            psi: Some(objective_psi(&flows)),
            link_flows: flows
                .nonzero()
                .map(|(a, b, flow)| LinkFlowEntry { a, b, flow })
                .collect(),
            per_server_utilization: (0..n)
                .map(|s| UtilizationEntry {
                    server: s,
                    cpu: frac(load[s][0], scenario.infra.capacity(s, Resource::Cpu)),
                    mem: frac(load[s][1], scenario.infra.capacity(s, Resource::Mem)),
                })
                .collect(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    /// Accepts either the full object or a bare array of entries.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Either {
            Full(AssignmentFile),
            Bare(Vec<AssignmentEntry>),
        }
        Ok(match serde_json::from_str(text)? {
            Either::Full(f) => f,
            Either::Bare(assignment) => AssignmentFile {
                assignment,
                psi: None,
                link_flows: Vec::new(),
                per_server_utilization: Vec::new(),
            },
        })
    }

    /// The mapping, plus every instance listed more than once.
    pub fn to_assignment(&self) -> (Assignment, Vec<InstanceKey>) {
        let mut a = Assignment::new();
        let mut dup = Vec::new();
        for e in &self.assignment {
            let key = InstanceKey::new(e.procedure, e.ms, e.replica);
            if a.insert(key, e.server).is_some() {
                dup.push(key);
            }
        }
        (a, dup)
    }
}

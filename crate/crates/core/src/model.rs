//! Domain types: the server farm, control-plane procedures as microservice
//! graphs, the requested load and the replica plan derived from it, and
//! instance-to-server assignments.
//!
//! All values are immutable once constructed. Constructors validate the
//! invariants, so downstream code never re-checks them.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Capacity of a directed server-to-server link, in PDUs per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkCapacity {
    Finite(f64),
    /// Intra-server communication never saturates.
    Unbounded,
}

impl LinkCapacity {
    /// Whether `flow` fits, with a relative tolerance of [`crate::TOL`].
    pub fn admits(self, flow: f64) -> bool {
        match self {
            LinkCapacity::Unbounded => true,
            LinkCapacity::Finite(cap) => flow <= cap + crate::TOL * cap.abs().max(1.0),
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            LinkCapacity::Finite(c) => Some(c),
            LinkCapacity::Unbounded => None,
        }
    }

    /// Remaining capacity after `used` has been allocated.
    pub fn residual(self, used: f64) -> LinkCapacity {
        match self {
            LinkCapacity::Finite(c) => LinkCapacity::Finite(c - used),
            LinkCapacity::Unbounded => LinkCapacity::Unbounded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerSpec {
    pub id: usize,
    pub cpu_capacity: f64,
    pub mem_capacity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resource {
    Cpu,
    Mem,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resource::Cpu => f.write_str("cpu"),
            Resource::Mem => f.write_str("mem"),
        }
    }
}

/// Servers, their adjacency and the directed link capacities.
///
/// Self links are always adjacent and [`LinkCapacity::Unbounded`]; links
/// between non-adjacent servers have capacity zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Infrastructure {
    servers: Vec<ServerSpec>,
    adjacency: Vec<bool>,
    link_capacity: Vec<LinkCapacity>,
}

impl Infrastructure {
    /// Starts a farm with no inter-server links.
    pub fn builder(servers: Vec<ServerSpec>) -> InfrastructureBuilder {
        let n = servers.len();
        let mut adjacency = vec![false; n * n];
        let mut link_capacity = vec![LinkCapacity::Finite(0.0); n * n];
        for a in 0..n {
            adjacency[a * n + a] = true;
            link_capacity[a * n + a] = LinkCapacity::Unbounded;
        }
        InfrastructureBuilder {
            servers,
            adjacency,
            link_capacity,
            bad_link: None,
        }
    }

    pub fn len(&self) -> usize {
        self.servers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.servers.is_empty()
    }

    pub fn servers(&self) -> &[ServerSpec] {
        &self.servers
    }

    pub fn server(&self, id: usize) -> &ServerSpec {
        &self.servers[id]
    }

    pub fn capacity(&self, server: usize, resource: Resource) -> f64 {
        let s = &self.servers[server];
        match resource {
            Resource::Cpu => s.cpu_capacity,
            Resource::Mem => s.mem_capacity,
        }
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a * self.len() + b]
    }

    pub fn link_capacity(&self, a: usize, b: usize) -> LinkCapacity {
        self.link_capacity[a * self.len() + b]
    }

    pub fn is_full_mesh(&self) -> bool {
        self.adjacency.iter().all(|&e| e)
    }

    pub fn total_capacity(&self, resource: Resource) -> f64 {
        (0..self.len()).map(|s| self.capacity(s, resource)).sum()
    }

    /// Servers that can be swapped with each other without changing the
    /// farm: equal capacities, and the transposition is an automorphism of
    /// the adjacency and link-capacity matrices. Returns a class label per
    /// server; equal labels mean interchangeable.
    pub fn interchangeable_classes(&self) -> Vec<usize> {
        let n = self.len();
        let mut class = vec![usize::MAX; n];
        let mut next = 0;
        for a in 0..n {
            if class[a] != usize::MAX {
                continue;
            }
            class[a] = next;
            for b in a + 1..n {
                if class[b] == usize::MAX && self.swappable(a, b) {
                    class[b] = next;
                }
            }
            next += 1;
        }
        class
    }

    fn swappable(&self, a: usize, b: usize) -> bool {
        let (sa, sb) = (&self.servers[a], &self.servers[b]);
        if sa.cpu_capacity != sb.cpu_capacity || sa.mem_capacity != sb.mem_capacity {
            return false;
        }
        let swap = |x: usize| {
            if x == a {
                b
            } else if x == b {
                a
            } else {
                x
            }
        };
        let n = self.len();
        (0..n).all(|x| {
            (0..n).all(|y| {
                self.adjacent(x, y) == self.adjacent(swap(x), swap(y))
                    && self.link_capacity(x, y) == self.link_capacity(swap(x), swap(y))
            })
        })
    }
}

pub struct InfrastructureBuilder {
    servers: Vec<ServerSpec>,
    adjacency: Vec<bool>,
    link_capacity: Vec<LinkCapacity>,
    bad_link: Option<(usize, usize)>,
}

impl InfrastructureBuilder {
    /// Connects every pair of distinct servers with `capacity` in both
    /// directions.
    pub fn full_mesh(mut self, capacity: LinkCapacity) -> Self {
        let n = self.servers.len();
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    self.adjacency[a * n + b] = true;
                    self.link_capacity[a * n + b] = capacity;
                }
            }
        }
        self
    }

    /// Marks `a` and `b` adjacent and sets the capacity of the directed link
    /// `a -> b`. The reverse direction keeps whatever it had, or receives
    /// the same capacity if it was not yet connected.
    pub fn link(mut self, a: usize, b: usize, capacity: LinkCapacity) -> Self {
        let n = self.servers.len();
        if a < n && b < n && a != b {
            if !self.adjacency[b * n + a] {
                self.link_capacity[b * n + a] = capacity;
            }
            self.adjacency[a * n + b] = true;
            self.adjacency[b * n + a] = true;
            self.link_capacity[a * n + b] = capacity;
        } else if self.bad_link.is_none() {
            self.bad_link = Some((a, b));
        }
        self
    }

    pub fn build(self) -> Result<Infrastructure> {
        let InfrastructureBuilder {
            servers,
            adjacency,
            link_capacity,
            bad_link,
        } = self;
        if let Some((a, b)) = bad_link {
            return Err(Error::config(format!(
                "invalid link {a} -> {b}: endpoints must be distinct known servers"
            )));
        }
        for (pos, s) in servers.iter().enumerate() {
            if s.id != pos {
                return Err(Error::config(format!(
                    "server ids must be 0..{} in order, found {} at position {pos}",
                    servers.len(),
                    s.id
                )));
            }
            if !(s.cpu_capacity >= 0.0 && s.cpu_capacity.is_finite())
                || !(s.mem_capacity >= 0.0 && s.mem_capacity.is_finite())
            {
                return Err(Error::config(format!(
                    "server {pos} has a negative or non-finite capacity"
                )));
            }
        }
        for cap in &link_capacity {
            if let LinkCapacity::Finite(c) = cap {
                if !(*c >= 0.0 && c.is_finite()) {
                    return Err(Error::config(format!("link capacity {c} is negative or non-finite")));
                }
            }
        }
        let n = servers.len();
        for a in 0..n {
            if link_capacity[a * n + a] != LinkCapacity::Unbounded || !adjacency[a * n + a] {
                return Err(Error::config(format!("self link of server {a} must be unbounded")));
            }
        }
        Ok(Infrastructure {
            servers,
            adjacency,
            link_capacity,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsSpec {
    pub id: usize,
    pub cpu_footprint: f64,
    pub mem_footprint: f64,
    /// Extra seconds per request when the output goes to another server.
    pub remote_penalty: f64,
    /// Concurrent requests one instance can serve.
    pub max_load: u64,
}

impl MsSpec {
    pub fn footprint(&self, resource: Resource) -> f64 {
        match resource {
            Resource::Cpu => self.cpu_footprint,
            Resource::Mem => self.mem_footprint,
        }
    }
}

/// Directed interaction `src -> dst` taking `base_time` seconds per request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsEdge {
    pub src: usize,
    pub dst: usize,
    pub base_time: f64,
}

/// A control-plane procedure: microservices and their directed
/// interactions. Absent pairs simply have no edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CpProcedure {
    id: usize,
    name: Option<String>,
    ms: Vec<MsSpec>,
    edges: Vec<MsEdge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl CpProcedure {
    pub fn new(id: usize, ms: Vec<MsSpec>, mut edges: Vec<MsEdge>) -> Result<Self> {
        for (pos, m) in ms.iter().enumerate() {
            if m.id != pos {
                return Err(Error::config(format!(
                    "procedure {id}: microservice ids must be 0..{} in order, found {} at {pos}",
                    ms.len(),
                    m.id
                )));
            }
            let finite_nonneg = |x: f64| x >= 0.0 && x.is_finite();
            if !finite_nonneg(m.cpu_footprint)
                || !finite_nonneg(m.mem_footprint)
                || !finite_nonneg(m.remote_penalty)
            {
                return Err(Error::config(format!(
                    "procedure {id}, microservice {pos}: footprints and remote penalty must be >= 0"
                )));
            }
            if m.max_load == 0 {
                return Err(Error::config(format!(
                    "procedure {id}, microservice {pos}: max load must be >= 1"
                )));
            }
        }
        edges.sort_by_key(|e| (e.src, e.dst));
        for w in edges.windows(2) {
            if (w[0].src, w[0].dst) == (w[1].src, w[1].dst) {
                return Err(Error::config(format!(
                    "procedure {id}: duplicate edge {} -> {}",
                    w[0].src, w[0].dst
                )));
            }
        }
        let n = ms.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            if e.src >= n || e.dst >= n {
                return Err(Error::config(format!(
                    "procedure {id}: edge {} -> {} references an unknown microservice",
                    e.src, e.dst
                )));
            }
            if e.src == e.dst {
                return Err(Error::config(format!("procedure {id}: self edge on {}", e.src)));
            }
            if !(e.base_time > 0.0 && e.base_time.is_finite()) {
                return Err(Error::config(format!(
                    "procedure {id}: edge {} -> {} needs a positive base time",
                    e.src, e.dst
                )));
            }
            out_edges[e.src].push(k);
            in_edges[e.dst].push(k);
        }
        Ok(CpProcedure {
            id,
            name: None,
            ms,
            edges,
            out_edges,
            in_edges,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn ms(&self) -> &[MsSpec] {
        &self.ms
    }

    pub fn ms_count(&self) -> usize {
        self.ms.len()
    }

    /// Edges sorted by `(src, dst)`.
    pub fn edges(&self) -> &[MsEdge] {
        &self.edges
    }

    pub fn edge(&self, src: usize, dst: usize) -> Option<&MsEdge> {
        self.out_edges
            .get(src)?
            .iter()
            .map(|&k| &self.edges[k])
            .find(|e| e.dst == dst)
    }

    pub fn out_edges(&self, ms: usize) -> impl Iterator<Item = &MsEdge> + '_ {
        self.out_edges[ms].iter().map(move |&k| &self.edges[k])
    }

    pub fn in_edges(&self, ms: usize) -> impl Iterator<Item = &MsEdge> + '_ {
        self.in_edges[ms].iter().map(move |&k| &self.edges[k])
    }
}

/// Looks a procedure up by id.
pub fn find_procedure(procedures: &[CpProcedure], id: usize) -> Option<&CpProcedure> {
    procedures.iter().find(|p| p.id == id)
}

/// Requested concurrent user requests per procedure id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    requests: BTreeMap<usize, u64>,
}

impl Workload {
    pub fn new() -> Self {
        Self::default()
    }

    /// The same load for every procedure.
    pub fn uniform(procedures: &[CpProcedure], requests: u64) -> Self {
        Workload {
            requests: procedures.iter().map(|p| (p.id(), requests)).collect(),
        }
    }

    pub fn with(mut self, procedure: usize, requests: u64) -> Self {
        self.requests.insert(procedure, requests);
        self
    }

    pub fn get(&self, procedure: usize) -> Option<u64> {
        self.requests.get(&procedure).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.requests.iter().map(|(&k, &v)| (k, v))
    }
}

/// Identifies one replica of one microservice of one procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstanceKey {
    pub procedure: usize,
    pub ms: usize,
    pub replica: usize,
}

impl InstanceKey {
    pub fn new(procedure: usize, ms: usize, replica: usize) -> Self {
        InstanceKey {
            procedure,
            ms,
            replica,
        }
    }
}

impl fmt::Display for InstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(t={}, ms={}, r={})", self.procedure, self.ms, self.replica)
    }
}

/// Replica counts per microservice, keyed by procedure id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplicaPlan {
    counts: BTreeMap<usize, Vec<u64>>,
}

impl ReplicaPlan {
    pub fn from_counts(counts: BTreeMap<usize, Vec<u64>>) -> Self {
        ReplicaPlan { counts }
    }

    pub fn replicas(&self, procedure: usize, ms: usize) -> u64 {
        self.counts
            .get(&procedure)
            .and_then(|v| v.get(ms))
            .copied()
            .unwrap_or(0)
    }

    pub fn procedure_counts(&self, procedure: usize) -> Option<&[u64]> {
        self.counts.get(&procedure).map(Vec::as_slice)
    }

    pub fn procedure_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts.keys().copied()
    }

    pub fn total_instances(&self) -> u64 {
        self.counts.values().flatten().sum()
    }

    pub fn contains(&self, key: &InstanceKey) -> bool {
        (key.replica as u64) < self.replicas(key.procedure, key.ms)
    }

    /// Every instance in canonical (procedure, ms, replica) order.
    pub fn instances(&self) -> impl Iterator<Item = InstanceKey> + '_ {
        self.counts.iter().flat_map(|(&t, taus)| {
            taus.iter().enumerate().flat_map(move |(i, &tau)| {
                (0..tau as usize).map(move |r| InstanceKey::new(t, i, r))
            })
        })
    }
}

/// Derives per-microservice replica counts `ceil(U / max_load)`.
pub fn replica_counts(procedures: &[CpProcedure], workload: &Workload) -> Result<ReplicaPlan> {
    let mut counts = BTreeMap::new();
    for p in procedures {
        let u = workload.get(p.id()).ok_or_else(|| {
            Error::config(format!("workload has no entry for procedure {}", p.id()))
        })?;
        let taus = p.ms().iter().map(|m| u.div_ceil(m.max_load)).collect();
        if counts.insert(p.id(), taus).is_some() {
            return Err(Error::config(format!("duplicate procedure id {}", p.id())));
        }
    }
    Ok(ReplicaPlan { counts })
}

/// Instance-to-server mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    map: BTreeMap<InstanceKey, usize>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the previous server if the instance was already placed.
    pub fn insert(&mut self, key: InstanceKey, server: usize) -> Option<usize> {
        self.map.insert(key, server)
    }

    pub fn get(&self, key: &InstanceKey) -> Option<usize> {
        self.map.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (InstanceKey, usize)> + '_ {
        self.map.iter().map(|(&k, &s)| (k, s))
    }

    pub fn extend(&mut self, other: &Assignment) {
        self.map.extend(other.map.iter().map(|(&k, &s)| (k, s)));
    }

    /// Placed replica count of `(procedure, ms)` per server, sorted by server.
    pub fn servers_of(&self, procedure: usize, ms: usize) -> Vec<(usize, u64)> {
        let lo = InstanceKey::new(procedure, ms, 0);
        let hi = InstanceKey::new(procedure, ms, usize::MAX);
        let mut per: BTreeMap<usize, u64> = BTreeMap::new();
        for (_, &s) in self.map.range(lo..=hi) {
            *per.entry(s).or_default() += 1;
        }
        per.into_iter().collect()
    }
}

impl FromIterator<(InstanceKey, usize)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (InstanceKey, usize)>>(iter: I) -> Self {
        Assignment {
            map: iter.into_iter().collect(),
        }
    }
}

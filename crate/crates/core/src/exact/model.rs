//! Linearized binary program.
//!
//! Every product of two placement variables `x1 * x2` appearing in the
//! adjacency or link-flow constraints is replaced by an auxiliary binary
//! `y` tied to its factors by the three McCormick rows
//! `y <= x1`, `y <= x2`, `y >= x1 + x2 - 1`.

use std::fmt::Write as _;

use crate::flow::replica_pair_rate;
use crate::model::{
    find_procedure, CpProcedure, Infrastructure, InstanceKey, LinkCapacity, ReplicaPlan, Resource,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Instance `key` runs on `server`.
    Place { key: InstanceKey, server: usize },
    /// Product of two placement variables.
    Product { left: usize, right: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Each instance on exactly one server.
    Placement,
    /// Linking an auxiliary product to its factors.
    McCormick,
    /// Forbids communicating instances on non-adjacent servers.
    Adjacency,
    Capacity { server: usize, resource: Resource },
    LinkFlow { from: usize, to: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub kind: RowKind,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn is_satisfied(&self, values: &[bool]) -> bool {
        let lhs: f64 = self
            .terms
            .iter()
            .filter(|(v, _)| values[*v])
            .map(|(_, c)| c)
            .sum();
        let slack = crate::TOL * self.rhs.abs().max(1.0);
        match self.sense {
            Sense::Le => lhs <= self.rhs + slack,
            Sense::Ge => lhs >= self.rhs - slack,
            Sense::Eq => (lhs - self.rhs).abs() <= slack,
        }
    }
}

/// Communicating instance pair, with the cheapest remote cost over all
/// server pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct InstancePair {
    pub a: usize,
    pub b: usize,
    pub remote_cost: f64,
}

#[derive(Debug, Clone)]
pub struct IlpModel {
    vars: Vec<Var>,
    rows: Vec<Row>,
    objective: Vec<(usize, f64)>,
    servers: usize,
    instances: Vec<InstanceKey>,
    /// `place[k * servers + s]` is the variable placing instance `k` on `s`.
    place: Vec<usize>,
    pub(crate) pairs: Vec<InstancePair>,
    pub(crate) server_classes: Vec<usize>,
}

impl IlpModel {
    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn instances(&self) -> &[InstanceKey] {
        &self.instances
    }

    pub fn place_var(&self, instance: usize, server: usize) -> usize {
        self.place[instance * self.servers + server]
    }

    pub fn product_count(&self) -> usize {
        self.vars
            .iter()
            .filter(|v| matches!(v, Var::Product { .. }))
            .count()
    }

    /// Objective value of a full 0/1 vector.
    pub fn evaluate(&self, values: &[bool]) -> f64 {
        self.objective
            .iter()
            .filter(|(v, _)| values[*v])
            .map(|(_, c)| c)
            .sum()
    }

    /// Completes placement values with the products they imply.
    pub fn with_products(&self, mut values: Vec<bool>) -> Vec<bool> {
        for (v, var) in self.vars.iter().enumerate() {
            if let Var::Product { left, right } = *var {
                values[v] = values[left] && values[right];
            }
        }
        values
    }

    /// Standard CPLEX-style LP text, for cross-checking with external MILP
    /// solvers. Placement variables are named `x_t_i_r_s`, products `y_k`.
    pub fn to_lp(&self) -> String {
        let mut names = Vec::with_capacity(self.vars.len());
        let mut y = 0;
        for v in &self.vars {
            names.push(match v {
                Var::Place { key, server } => {
                    format!("x_{}_{}_{}_{}", key.procedure, key.ms, key.replica, server)
                }
                Var::Product { .. } => {
                    y += 1;
                    format!("y_{}", y - 1)
                }
            });
        }
        let mut out = String::from("\\ linearized core optimization model\nMinimize\n obj:");
        write_terms(&mut out, &self.objective, &names);
        if self.objective.is_empty() {
            out.push_str(" 0 ");
            out.push_str(&names[0]);
        }
        out.push_str("\nSubject To\n");
        for (r, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " c{r}:");
            write_terms(&mut out, &row.terms, &names);
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        out.push_str("Binary\n");
        for n in &names {
            let _ = writeln!(out, " {n}");
        }
        out.push_str("End\n");
        out
    }
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], names: &[String]) {
    for (k, (v, c)) in terms.iter().enumerate() {
        if k > 0 && k % 8 == 0 {
            out.push_str("\n   ");
        }
        if *c < 0.0 {
            let _ = write!(out, " - {} {}", -c, names[*v]);
        } else if k == 0 {
            let _ = write!(out, " {} {}", c, names[*v]);
        } else {
            let _ = write!(out, " + {} {}", c, names[*v]);
        }
    }
}

/// Number of binaries and number of rows.
pub fn model_stats(model: &IlpModel) -> (usize, usize) {
    (model.vars.len(), model.rows.len())
}

/// Builds the linear program for placing every instance of `plan`.
pub fn linearize(infra: &Infrastructure, procedures: &[CpProcedure], plan: &ReplicaPlan) -> IlpModel {
    let servers = infra.len();
    let instances: Vec<InstanceKey> = plan.instances().collect();
    let mut vars = Vec::new();
    let mut rows = Vec::new();
    let mut place = Vec::with_capacity(instances.len() * servers);

    for &key in &instances {
        let mut terms = Vec::with_capacity(servers);
        for server in 0..servers {
            place.push(vars.len());
            terms.push((vars.len(), 1.0));
            vars.push(Var::Place { key, server });
        }
        rows.push(Row {
            kind: RowKind::Placement,
            terms,
            sense: Sense::Eq,
            rhs: 1.0,
        });
    }

    let index_of = |key: &InstanceKey| instances.binary_search(key).ok();
    let footprint = |key: &InstanceKey, r: Resource| {
        find_procedure(procedures, key.procedure)
            .map(|p| p.ms()[key.ms].footprint(r))
            .unwrap_or(0.0)
    };

    for server in 0..servers {
        for resource in [Resource::Cpu, Resource::Mem] {
            let terms = instances
                .iter()
                .enumerate()
                .map(|(k, key)| (place[k * servers + server], footprint(key, resource)))
                .collect();
            rows.push(Row {
                kind: RowKind::Capacity { server, resource },
                terms,
                sense: Sense::Le,
                rhs: infra.capacity(server, resource),
            });
        }
    }

    let mut objective = Vec::new();
    let mut flow_terms: Vec<Vec<(usize, f64)>> = vec![Vec::new(); servers * servers];
    let mut pairs = Vec::new();
    for t in plan.procedure_ids() {
        let Some(p) = find_procedure(procedures, t) else {
            continue;
        };
        for e in p.edges() {
            let (tau_src, tau_dst) = (plan.replicas(t, e.src), plan.replicas(t, e.dst));
            if tau_src == 0 || tau_dst == 0 {
                continue;
            }
            let rate = replica_pair_rate(e.base_time, p.ms()[e.src].remote_penalty, tau_dst, false);
            for l in 0..tau_src as usize {
                for q in 0..tau_dst as usize {
                    let ka = index_of(&InstanceKey::new(t, e.src, l)).expect("planned instance");
                    let kb = index_of(&InstanceKey::new(t, e.dst, q)).expect("planned instance");
                    pairs.push(InstancePair {
                        a: ka,
                        b: kb,
                        remote_cost: rate,
                    });
                    for a in 0..servers {
                        for b in 0..servers {
                            if a == b {
                                continue;
                            }
                            let left = place[ka * servers + a];
                            let right = place[kb * servers + b];
                            let y = vars.len();
                            vars.push(Var::Product { left, right });
                            rows.push(Row {
                                kind: RowKind::McCormick,
                                terms: vec![(y, 1.0), (left, -1.0)],
                                sense: Sense::Le,
                                rhs: 0.0,
                            });
                            rows.push(Row {
                                kind: RowKind::McCormick,
                                terms: vec![(y, 1.0), (right, -1.0)],
                                sense: Sense::Le,
                                rhs: 0.0,
                            });
                            rows.push(Row {
                                kind: RowKind::McCormick,
                                terms: vec![(y, 1.0), (left, -1.0), (right, -1.0)],
                                sense: Sense::Ge,
                                rhs: -1.0,
                            });
                            if !infra.adjacent(a, b) {
                                rows.push(Row {
                                    kind: RowKind::Adjacency,
                                    terms: vec![(y, 1.0)],
                                    sense: Sense::Le,
                                    rhs: 0.0,
                                });
                            }
                            if infra.link_capacity(a, b) != LinkCapacity::Unbounded {
                                flow_terms[a * servers + b].push((y, rate));
                            }
                            objective.push((y, rate));
                        }
                    }
                }
            }
        }
    }

    for a in 0..servers {
        for b in 0..servers {
            let terms = std::mem::take(&mut flow_terms[a * servers + b]);
            if terms.is_empty() {
                continue;
            }
            if let LinkCapacity::Finite(cap) = infra.link_capacity(a, b) {
                rows.push(Row {
                    kind: RowKind::LinkFlow { from: a, to: b },
                    terms,
                    sense: Sense::Le,
                    rhs: cap,
                });
            }
        }
    }

    IlpModel {
        vars,
        rows,
        objective,
        servers,
        instances,
        place,
        pairs,
        server_classes: infra.interchangeable_classes(),
    }
}

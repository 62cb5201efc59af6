//! Depth-first branch-and-bound over the placement variables of an
//! [`IlpModel`], without LP relaxations.
//!
//! Branching fixes one instance to one server at a time (the placement row
//! of that instance then holds by construction) and derives every product
//! variable from its factors, so the McCormick rows never need checking.
//! The remaining `<=` rows have nonnegative coefficients, so a partial
//! assignment whose row activity already exceeds the right-hand side can
//! be pruned.
//!
//! Bounding uses the cost of already-fixed products plus, for every
//! communicating pair not yet fully fixed, zero if the pair could still
//! share a server and its cheapest remote cost otherwise.

use std::time::{Duration, Instant};

use serde::Serialize;

use super::model::{IlpModel, RowKind, Sense, Var};
use crate::error::{Error, Result};
use crate::model::{Assignment, Resource};
use crate::TOL;

/// Default per-instance time budget, in seconds.
pub const DEFAULT_TIME_LIMIT_S: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::TimeLimit => "time_limit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub assignment: Option<Assignment>,
    pub best_psi: Option<f64>,
    /// Proven lower bound on the optimum; infinite when infeasible.
    pub lower_bound: f64,
    pub nodes: u64,
    pub wall_time: Duration,
}

struct Compiled {
    n: usize,
    servers: usize,
    /// Per placement variable: `(row, coef)` over checked rows.
    place_rows: Vec<Vec<(usize, f64)>>,
    /// Per placement variable: `(product var, other factor)`.
    products: Vec<Vec<(usize, usize)>>,
    product_rows: Vec<Vec<(usize, f64)>>,
    objective: Vec<f64>,
    rhs: Vec<f64>,
    capacity_row: Vec<[Option<usize>; 2]>,
    footprint: Vec<[f64; 2]>,
    /// Var index -> (instance, server) for placement vars.
    owner: Vec<Option<(usize, usize)>>,
    place: Vec<usize>,
    pair_list: Vec<(usize, usize, f64)>,
    order: Vec<usize>,
    classes: Vec<usize>,
}

impl Compiled {
    fn new(model: &IlpModel) -> Result<Self> {
        let n = model.instances().len();
        let servers = model.servers();
        let nv = model.vars().len();
        let mut owner = vec![None; nv];
        for k in 0..n {
            for s in 0..servers {
                owner[model.place_var(k, s)] = Some((k, s));
            }
        }
        let mut objective = vec![0.0; nv];
        for &(v, c) in model.objective() {
            if owner[v].is_some() && c != 0.0 {
                return Err(Error::config("objective terms on placement variables are not supported"));
            }
            objective[v] += c;
        }
        let mut products = vec![Vec::new(); nv];
        for (v, var) in model.vars().iter().enumerate() {
            if let Var::Product { left, right } = *var {
                products[left].push((v, right));
                products[right].push((v, left));
            }
        }

        let mut place_rows = vec![Vec::new(); nv];
        let mut product_rows = vec![Vec::new(); nv];
        let mut rhs = Vec::new();
        let mut capacity_row = vec![[None; 2]; servers];
        let mut footprint = vec![[0.0; 2]; n];
        for row in model.rows() {
            match row.kind {
                RowKind::Placement | RowKind::McCormick => continue,
                _ => {}
            }
            if row.sense != Sense::Le || row.terms.iter().any(|&(_, c)| c < 0.0) {
                return Err(Error::config(
                    "only <= rows with nonnegative coefficients can be bounded combinatorially",
                ));
            }
            let r = rhs.len();
            rhs.push(row.rhs);
            if let RowKind::Capacity { server, resource } = row.kind {
                let slot = resource_slot(resource);
                capacity_row[server][slot] = Some(r);
                for &(v, c) in &row.terms {
                    if let Some((k, _)) = owner[v] {
                        footprint[k][slot] = c;
                    }
                }
            }
            for &(v, c) in &row.terms {
                if c == 0.0 {
                    continue;
                }
                if owner[v].is_some() {
                    place_rows[v].push((r, c));
                } else {
                    product_rows[v].push((r, c));
                }
            }
        }

        let pair_list: Vec<(usize, usize, f64)> = model
            .pairs
            .iter()
            .map(|p| (p.a, p.b, p.remote_cost))
            .collect();
        let mut weight = vec![0.0; n];
        for &(a, b, w) in &pair_list {
            weight[a] += w;
            weight[b] += w;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| weight[y].total_cmp(&weight[x]).then(x.cmp(&y)));

        Ok(Compiled {
            n,
            servers,
            place_rows,
            products,
            product_rows,
            objective,
            rhs,
            capacity_row,
            footprint,
            owner,
            place: (0..n * servers).map(|i| model.place_var(i / servers, i % servers)).collect(),
            pair_list,
            order,
            classes: model.server_classes.clone(),
        })
    }
}

fn resource_slot(r: Resource) -> usize {
    match r {
        Resource::Cpu => 0,
        Resource::Mem => 1,
    }
}

fn exceeds(activity: f64, rhs: f64) -> bool {
    activity > rhs + TOL * rhs.abs().max(1.0)
}

struct Search<'a> {
    c: &'a Compiled,
    chosen: Vec<Option<usize>>,
    used: Vec<u32>,
    activity: Vec<f64>,
    cost: f64,
    best: Option<(f64, Vec<Option<usize>>)>,
    nodes: u64,
    deadline: Instant,
    timed_out: bool,
}

impl<'a> Search<'a> {
    fn residual(&self, server: usize, slot: usize) -> f64 {
        match self.c.capacity_row[server][slot] {
            Some(r) => self.c.rhs[r] - self.activity[r],
            None => f64::INFINITY,
        }
    }

    fn fits(&self, k: usize, server: usize) -> bool {
        (0..2).all(|slot| {
            let need = self.c.footprint[k][slot];
            need == 0.0 || !exceeds(need, self.residual(server, slot))
        })
    }

    fn fits_both(&self, a: usize, b: usize, server: usize) -> bool {
        (0..2).all(|slot| {
            let need = self.c.footprint[a][slot] + self.c.footprint[b][slot];
            need == 0.0 || !exceeds(need, self.residual(server, slot))
        })
    }

    /// Fixes instance `k` on `server`; false if a row breaks.
    fn assign(&mut self, k: usize, server: usize, var: usize) -> bool {
        self.chosen[k] = Some(server);
        self.used[server] += 1;
        let mut ok = true;
        for &(r, coef) in &self.c.place_rows[var] {
            self.activity[r] += coef;
            ok &= !exceeds(self.activity[r], self.c.rhs[r]);
        }
        for &(y, other) in &self.c.products[var] {
            let (ko, so) = self.c.owner[other].expect("product factors are placement variables");
            if self.chosen[ko] != Some(so) {
                continue;
            }
            self.cost += self.c.objective[y];
            for &(r, coef) in &self.c.product_rows[y] {
                self.activity[r] += coef;
                ok &= !exceeds(self.activity[r], self.c.rhs[r]);
            }
        }
        ok
    }

    fn remaining_bound(&self) -> Option<f64> {
        // Aggregate capacity must cover what is left to place.
        for slot in 0..2 {
            let need: f64 = (0..self.c.n)
                .filter(|&k| self.chosen[k].is_none())
                .map(|k| self.c.footprint[k][slot])
                .sum();
            if need > 0.0 {
                let room: f64 = (0..self.c.servers)
                    .map(|s| self.residual(s, slot).max(0.0))
                    .sum();
                if exceeds(need, room) {
                    return None;
                }
            }
        }
        for k in (0..self.c.n).filter(|&k| self.chosen[k].is_none()) {
            if !(0..self.c.servers).any(|s| self.fits(k, s)) {
                return None;
            }
        }
        let mut lb = 0.0;
        for &(a, b, w) in &self.c.pair_list {
            let can_share = match (self.chosen[a], self.chosen[b]) {
                (Some(_), Some(_)) => continue,
                (Some(s), None) => self.fits(b, s),
                (None, Some(s)) => self.fits(a, s),
                (None, None) => (0..self.c.servers).any(|s| self.fits_both(a, b, s)),
            };
            if !can_share {
                lb += w;
            }
        }
        Some(lb)
    }

    fn skip_symmetric(&self, server: usize) -> bool {
        self.used[server] == 0
            && (0..server).any(|s| self.used[s] == 0 && self.c.classes[s] == self.c.classes[server])
    }

    fn dfs(&mut self, depth: usize) {
        if self.timed_out {
            return;
        }
        self.nodes += 1;
        if self.nodes % 2048 == 1 && Instant::now() >= self.deadline {
            self.timed_out = true;
            return;
        }
        if depth == self.c.n {
            let better = self.best.as_ref().is_none_or(|(b, _)| self.cost < b - TOL);
            if better {
                self.best = Some((self.cost, self.chosen.clone()));
            }
            return;
        }
        let k = self.c.order[depth];
        for server in 0..self.c.servers {
            if self.skip_symmetric(server) || !self.fits(k, server) {
                continue;
            }
            let saved_activity = self.activity.clone();
            let saved_cost = self.cost;
            let var = self.c.place[k * self.c.servers + server];
            if self.assign(k, server, var) {
                if let Some(rest) = self.remaining_bound() {
                    let bound = self.cost + rest;
                    let promising = self
                        .best
                        .as_ref()
                        .is_none_or(|(b, _)| bound < b - TOL);
                    if promising {
                        self.dfs(depth + 1);
                    }
                }
            }
            self.activity = saved_activity;
            self.cost = saved_cost;
            self.chosen[k] = None;
            self.used[server] -= 1;
            if self.timed_out {
                return;
            }
        }
    }
}

/// Solves `model` to proven optimality, or until `time_limit_s` elapses.
pub fn solve_bnb(model: &IlpModel, time_limit_s: f64) -> Result<SolveOutcome> {
    if !(time_limit_s > 0.0) {
        return Err(Error::config(format!("time limit must be positive, got {time_limit_s}")));
    }
    let start = Instant::now();
    let compiled = Compiled::new(model)?;
    let mut search = Search {
        c: &compiled,
        chosen: vec![None; compiled.n],
        used: vec![0; compiled.servers],
        activity: vec![0.0; compiled.rhs.len()],
        cost: 0.0,
        best: None,
        nodes: 0,
        deadline: start + Duration::from_secs_f64(time_limit_s.min(1e9)),
        timed_out: false,
    };
    let root_bound = search.remaining_bound();
    if root_bound.is_some() {
        search.dfs(0);
    }
    let to_assignment = |chosen: &[Option<usize>]| -> Assignment {
        model
            .instances()
            .iter()
            .zip(chosen)
            .map(|(&key, s)| (key, s.expect("leaf assigns every instance")))
            .collect()
    };
    let (status, lower_bound) = match (&search.best, search.timed_out) {
        (_, true) => (SolveStatus::TimeLimit, root_bound.unwrap_or(0.0)),
        (Some((psi, _)), false) => (SolveStatus::Optimal, *psi),
        (None, false) => (SolveStatus::Infeasible, f64::INFINITY),
    };
    Ok(SolveOutcome {
        status,
        assignment: search.best.as_ref().map(|(_, c)| to_assignment(c)),
        best_psi: search.best.as_ref().map(|(psi, _)| *psi),
        lower_bound,
        nodes: search.nodes,
        wall_time: start.elapsed(),
    })
}

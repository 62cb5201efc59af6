//! Graph partitioning of a fragment into two parts along the cut carrying
//! the least flow.
//!
//! Edge weights are symmetrized remote flows, `w{i,j} = f(i->j) + f(j->i)`
//! with `f(i->j) = 1 / (tau_j (a_ij + c_i))`. Disconnected fragments are
//! split along their components first; connected ones go through an exact
//! global minimum cut (Stoer-Wagner).

use crate::error::{Error, Result};
use crate::flow::replica_pair_rate;
use crate::model::{CpProcedure, ReplicaPlan};
use crate::TOL;

use super::Fragment;

/// A bipartition and the symmetrized flow across it.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    pub value: f64,
}

/// Symmetrized remote-flow weights among `members`, as a dense matrix.
pub fn cut_weights(procedure: &CpProcedure, plan: &ReplicaPlan, members: &[usize]) -> Vec<Vec<f64>> {
    let n = members.len();
    let pos = |ms: usize| members.binary_search(&ms).ok();
    let mut w = vec![vec![0.0; n]; n];
    for &i in members {
        for e in procedure.out_edges(i) {
            let Some(b) = pos(e.dst) else { continue };
            let tau = plan.replicas(procedure.id(), e.dst);
            if tau == 0 {
                continue;
            }
            let a = pos(i).expect("member");
            let f = replica_pair_rate(e.base_time, procedure.ms()[i].remote_penalty, tau, false);
            w[a][b] += f;
            w[b][a] += f;
        }
    }
    w
}

/// Total flow leaving `part` toward any other microservice of the
/// procedure, at the remote rate.
pub fn outgoing_flow(procedure: &CpProcedure, plan: &ReplicaPlan, part: &[usize]) -> f64 {
    let mut out = 0.0;
    for &i in part {
        for e in procedure.out_edges(i) {
            if part.binary_search(&e.dst).is_ok() {
                continue;
            }
            let tau = plan.replicas(procedure.id(), e.dst);
            if tau > 0 {
                out += replica_pair_rate(e.base_time, procedure.ms()[i].remote_penalty, tau, false);
            }
        }
    }
    out
}

/// Splits `fragment` in two along a minimum cut. The larger side comes
/// first; on equal sizes, the side holding the smallest id.
pub fn gp_partition(
    procedure: &CpProcedure,
    plan: &ReplicaPlan,
    fragment: &Fragment,
) -> Result<(Fragment, Fragment, f64)> {
    if fragment.members.len() < 2 {
        return Err(Error::domain("cannot partition a fragment with fewer than two microservices"));
    }
    let w = cut_weights(procedure, plan, &fragment.members);
    let cut = min_cut(&w);
    let to_ids = |side: &[usize]| -> Vec<usize> {
        let mut v: Vec<usize> = side.iter().map(|&k| fragment.members[k]).collect();
        v.sort_unstable();
        v
    };
    let (mut a, mut b) = (to_ids(&cut.first), to_ids(&cut.second));
    if b.len() > a.len() || (b.len() == a.len() && b[0] < a[0]) {
        std::mem::swap(&mut a, &mut b);
    }
    let fa = Fragment {
        out_flow: outgoing_flow(procedure, plan, &a),
        members: a,
    };
    let fb = Fragment {
        out_flow: outgoing_flow(procedure, plan, &b),
        members: b,
    };
    Ok((fa, fb, cut.value))
}

/// Global minimum cut of a symmetric nonnegative weight matrix with at
/// least two vertices. Sides are vertex indices into `w`.
///
/// A disconnected graph is cut between the component of vertex 0 and the
/// rest. Otherwise ties between equal-valued cuts go to the one whose
/// smaller side is lexicographically smallest.
pub fn min_cut(w: &[Vec<f64>]) -> Cut {
    let n = w.len();
    assert!(n >= 2, "min_cut needs at least two vertices");
    let comp = component_of_first(w);
    if comp.len() < n {
        let rest = (0..n).filter(|v| comp.binary_search(v).is_err()).collect();
        return Cut {
            first: comp,
            second: rest,
            value: 0.0,
        };
    }
    stoer_wagner(w)
}

fn component_of_first(w: &[Vec<f64>]) -> Vec<usize> {
    let n = w.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for u in 0..n {
            if !seen[u] && w[v][u] > 0.0 {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    (0..n).filter(|&v| seen[v]).collect()
}

/// Canonical key of a bipartition: the smaller side, or the
/// lexicographically smaller one if both have the same size.
fn canonical_side(side: &[usize], n: usize) -> Vec<usize> {
    let mut a = side.to_vec();
    a.sort_unstable();
    let b: Vec<usize> = (0..n).filter(|v| a.binary_search(v).is_err()).collect();
    match a.len().cmp(&b.len()) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => a.min(b),
    }
}

fn stoer_wagner(w: &[Vec<f64>]) -> Cut {
    let n = w.len();
    let mut g: Vec<Vec<f64>> = w.to_vec();
    // Original vertices merged into each super vertex.
    let mut groups: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;

    while alive.len() > 1 {
        let m = alive.len();
        let mut in_a = vec![false; n];
        let mut conn = vec![0.0; n];
        let mut prev = alive[0];
        let mut last = alive[0];
        in_a[alive[0]] = true;
        for &v in &alive {
            conn[v] = g[alive[0]][v];
        }
        let mut cut_of_phase = 0.0;
        for step in 1..m {
            // Most tightly connected vertex; lowest id on ties.
            let mut pick = usize::MAX;
            for &v in &alive {
                if !in_a[v] && (pick == usize::MAX || conn[v] > conn[pick]) {
                    pick = v;
                }
            }
            in_a[pick] = true;
            prev = last;
            last = pick;
            if step == m - 1 {
                cut_of_phase = conn[pick];
            }
            for &v in &alive {
                if !in_a[v] {
                    conn[v] += g[pick][v];
                }
            }
        }

        let side = canonical_side(&groups[last], n);
        let better = match &best {
            None => true,
            Some((value, key)) => {
                let scale = value.abs().max(1.0);
                cut_of_phase < value - TOL * scale
                    || ((cut_of_phase - value).abs() <= TOL * scale && side < *key)
            }
        };
        if better {
            best = Some((cut_of_phase, side));
        }

        // Merge `last` into `prev`.
        let moved = std::mem::take(&mut groups[last]);
        groups[prev].extend(moved);
        for &v in &alive {
            if v != last && v != prev {
                g[prev][v] += g[last][v];
                g[v][prev] = g[prev][v];
            }
        }
        alive.retain(|&v| v != last);
    }

    let (value, first) = best.expect("at least one phase ran");
    let second = (0..n).filter(|v| first.binary_search(v).is_err()).collect();
    Cut {
        first,
        second,
        value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{replica_counts, MsEdge, MsSpec, Workload};
    use crate::testutil::assert_close;

    fn ms(n: usize) -> Vec<MsSpec> {
        (0..n)
            .map(|id| MsSpec {
                id,
                cpu_footprint: 1.0,
                mem_footprint: 1.0,
                remote_penalty: 0.0005,
                max_load: 1,
            })
            .collect()
    }

    fn edge(src: usize, dst: usize, base_time: f64) -> MsEdge {
        MsEdge { src, dst, base_time }
    }

    fn brute_min_cut(w: &[Vec<f64>]) -> f64 {
        let n = w.len();
        let mut best = f64::INFINITY;
        for mask in 1..(1u32 << n) - 1 {
            let mut v = 0.0;
            for a in 0..n {
                for b in 0..n {
                    if mask >> a & 1 == 1 && mask >> b & 1 == 0 {
                        v += w[a][b];
                    }
                }
            }
            best = best.min(v);
        }
        best
    }

    #[test]
    fn chain_of_three_cuts_an_end_edge() {
        let p = CpProcedure::new(0, ms(3), vec![edge(0, 1, 0.001), edge(1, 2, 0.001)]).unwrap();
        let plan = replica_counts(std::slice::from_ref(&p), &Workload::new().with(0, 1)).unwrap();
        let frag = Fragment::root(&p, &plan);
        let (a, b, value) = gp_partition(&p, &plan, &frag).unwrap();
        assert_close(value, 2000.0 / 3.0, 1e-9);
        assert_eq!(a.members, vec![1, 2]);
        assert_eq!(b.members, vec![0]);
        // {0} sends its whole output to 1.
        assert_close(b.out_flow, 2000.0 / 3.0, 1e-9);
        assert_eq!(a.out_flow, 0.0);
        assert_close(
            brute_min_cut(&cut_weights(&p, &plan, &frag.members)),
            value,
            1e-12,
        );
    }

    #[test]
    fn two_members_have_a_unique_bipartition() {
        let p = CpProcedure::new(0, ms(2), vec![edge(0, 1, 0.001)]).unwrap();
        let plan = replica_counts(std::slice::from_ref(&p), &Workload::new().with(0, 1)).unwrap();
        let (a, b, _) = gp_partition(&p, &plan, &Fragment::root(&p, &plan)).unwrap();
        assert_eq!((a.members, b.members), (vec![0], vec![1]));
    }

    #[test]
    fn weighted_star_cuts_the_lightest_spoke() {
        let mut specs = ms(4);
        for m in &mut specs {
            m.remote_penalty = 0.0;
        }
        // Remote rates 100, 200, 300 PDU/s.
        let edges = vec![edge(0, 1, 0.01), edge(0, 2, 0.005), edge(0, 3, 1.0 / 300.0)];
        let p = CpProcedure::new(0, specs, edges).unwrap();
        let plan = replica_counts(std::slice::from_ref(&p), &Workload::new().with(0, 1)).unwrap();
        let frag = Fragment::root(&p, &plan);
        let (a, b, value) = gp_partition(&p, &plan, &frag).unwrap();
        assert_close(value, 100.0, 1e-9);
        assert_eq!(a.members, vec![0, 2, 3]);
        assert_eq!(b.members, vec![1]);
        assert_close(brute_min_cut(&cut_weights(&p, &plan, &frag.members)), 100.0, 1e-9);
    }

    #[test]
    fn disconnected_fragment_splits_along_components() {
        let p = CpProcedure::new(0, ms(4), vec![edge(0, 2, 0.001), edge(1, 3, 0.001)]).unwrap();
        let plan = replica_counts(std::slice::from_ref(&p), &Workload::new().with(0, 1)).unwrap();
        let (a, b, value) = gp_partition(&p, &plan, &Fragment::root(&p, &plan)).unwrap();
        assert_eq!(value, 0.0);
        assert_eq!((a.members, b.members), (vec![0, 2], vec![1, 3]));
    }

    #[test]
    fn singleton_is_a_domain_error() {
        let p = CpProcedure::new(0, ms(1), vec![]).unwrap();
        let plan = replica_counts(std::slice::from_ref(&p), &Workload::new().with(0, 1)).unwrap();
        assert!(gp_partition(&p, &plan, &Fragment::root(&p, &plan)).is_err());
    }

    #[test]
    fn equal_cuts_prefer_the_lexicographically_smallest_side() {
        // 4-cycle with unit weights: every cut separating two adjacent
        // vertices from the others has value 2, as do singletons.
        let mut w = vec![vec![0.0; 4]; 4];
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            w[a][b] = 1.0;
            w[b][a] = 1.0;
        }
        let cut = min_cut(&w);
        assert_eq!(cut.value, 2.0);
        assert_eq!(cut.first, vec![0]);
    }
}

mod common;

use common::*;
use msplace::exact::{brute_force_oracle, linearize, RowKind, Var};
use msplace::flow::replica_pair_rate;
use msplace::generate::{gen_random_procedure, RandomGraphConfig};
use msplace::mm::{gp_partition, map_all, Fragment, Trace};
use msplace::{
    check_constraints, link_flows, objective_psi, replica_counts, Assignment, InstanceKey,
    LinkCapacity, Workload, TOL,
};
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * a.abs().max(b.abs()).max(1.0)
}

/// Every instance of `plan` assigned from `choice`, wrapping around the
/// server count.
fn assignment_from(plan: &msplace::ReplicaPlan, servers: usize, choice: &[usize]) -> Assignment {
    plan.instances()
        .zip(choice.iter().cycle())
        .map(|(k, &c)| (k, c % servers))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn remote_rate_is_below_colocated(base in 1e-4f64..1e-1, penalty in 1e-6f64..1e-1, tau in 1u64..50) {
        prop_assert!(replica_pair_rate(base, penalty, tau, false) < replica_pair_rate(base, penalty, tau, true));
    }

    #[test]
    fn psi_is_invariant_under_relabeling_servers(
        m in 2usize..7,
        pi in 0.2f64..1.0,
        seed in 0u64..1000,
        choice in prop::collection::vec(0usize..4, 7),
        shift in 1usize..4,
    ) {
        let procs = vec![gen_random_procedure(&RandomGraphConfig::unit(m, pi, seed), 0).unwrap()];
        let plan = one_request(&procs);
        let infra = mesh(&[(10.0, 10.0); 4], LinkCapacity::Unbounded);
        let a = assignment_from(&plan, 4, &choice);
        let relabeled: Assignment = a.iter().map(|(k, s)| (k, (s + shift) % 4)).collect();
        let psi = objective_psi(&link_flows(&infra, &procs, &plan, &a).unwrap());
        let psi2 = objective_psi(&link_flows(&infra, &procs, &plan, &relabeled).unwrap());
        prop_assert!(close(psi, psi2), "{} vs {}", psi, psi2);
    }

    #[test]
    fn psi_is_additive_over_procedures(
        seeds in (0u64..1000, 0u64..1000),
        loads in (1u64..4, 1u64..4),
        choice in prop::collection::vec(0usize..3, 1..40),
    ) {
        let mut first = RandomGraphConfig::unit(4, 0.6, seeds.0);
        first.max_load = 2;
        let procs = vec![
            gen_random_procedure(&first, 0).unwrap(),
            gen_random_procedure(&RandomGraphConfig::unit(3, 0.6, seeds.1), 1).unwrap(),
        ];
        let plan = replica_counts(&procs, &Workload::new().with(0, loads.0).with(1, loads.1)).unwrap();
        let infra = mesh(&[(100.0, 100.0); 3], LinkCapacity::Unbounded);
        let a = assignment_from(&plan, 3, &choice);
        let total = objective_psi(&link_flows(&infra, &procs, &plan, &a).unwrap());
        let mut parts = 0.0;
        for t in 0..2 {
            let one = std::slice::from_ref(&procs[t]);
            let sub: Assignment = a.iter().filter(|(k, _)| k.procedure == t).collect();
            let sub_plan = replica_counts(one, &Workload::new().with(t, [loads.0, loads.1][t])).unwrap();
            parts += objective_psi(&link_flows(&infra, one, &sub_plan, &sub).unwrap());
        }
        prop_assert!(close(total, parts), "{} vs {}", total, parts);
    }

    #[test]
    fn colocating_everything_costs_nothing(m in 1usize..9, pi in 0.0f64..=1.0, seed in 0u64..1000) {
        let procs = vec![gen_random_procedure(&RandomGraphConfig::unit(m, pi, seed), 0).unwrap()];
        let plan = one_request(&procs);
        let infra = mesh(&[(m as f64, m as f64), (m as f64, m as f64)], LinkCapacity::Finite(1.0));
        let a = map_all(&infra, &procs, &plan, None).unwrap();
        prop_assert_eq!(objective_psi(&link_flows(&infra, &procs, &plan, &a).unwrap()), 0.0);
    }

    #[test]
    fn mccormick_rows_hold_exactly_on_consistent_products(choice in prop::collection::vec(0usize..3, 6)) {
        let infra = mesh(&[(2.0, 2.0); 3], LinkCapacity::Finite(1500.0));
        let procs = vec![chain(0, 3)];
        let plan = one_request(&procs);
        let model = linearize(&infra, &procs, &plan);
        let a = assignment_from(&plan, 3, &choice);
        let mut values = vec![false; model.vars().len()];
        for (i, k) in model.instances().iter().enumerate() {
            values[model.place_var(i, a.get(k).unwrap())] = true;
        }
        let values = model.with_products(values);
        for row in model.rows().iter().filter(|r| r.kind == RowKind::McCormick) {
            prop_assert!(row.is_satisfied(&values));
        }
        // Flipping any product breaks one of its linking rows.
        for (y, var) in model.vars().iter().enumerate() {
            if let Var::Product { .. } = var {
                let mut flipped = values.clone();
                flipped[y] = !flipped[y];
                let broken = model
                    .rows()
                    .iter()
                    .filter(|r| r.kind == RowKind::McCormick)
                    .any(|r| !r.is_satisfied(&flipped));
                prop_assert!(broken);
            }
        }
        let psi = objective_psi(&link_flows(&infra, &procs, &plan, &a).unwrap());
        prop_assert!(close(model.evaluate(&values), psi));
    }

    #[test]
    fn heuristic_output_is_feasible_and_no_better_than_optimal(seed in 0u64..5000) {
        let inst = micro_instance(seed, 2e4);
        let oracle = brute_force_oracle(&inst.infra, &inst.procedures, &inst.plan).unwrap();
        if let Ok(a) = map_all(&inst.infra, &inst.procedures, &inst.plan, None) {
            let report = check_constraints(&inst.infra, &inst.procedures, &inst.plan, &a);
            prop_assert!(report.all_pass(), "{:?}", report);
            let psi = objective_psi(&link_flows(&inst.infra, &inst.procedures, &inst.plan, &a).unwrap());
            let best = oracle.best_psi.expect("the heuristic found a placement");
            prop_assert!(best <= psi + TOL * psi.max(1.0));
        }
    }

    #[test]
    fn heuristic_is_deterministic(seed in 0u64..5000) {
        let inst = micro_instance(seed, 1e6);
        let mut t1 = Trace::new();
        let mut t2 = Trace::new();
        let a = map_all(&inst.infra, &inst.procedures, &inst.plan, Some(&mut t1));
        let b = map_all(&inst.infra, &inst.procedures, &inst.plan, Some(&mut t2));
        prop_assert_eq!(a.is_ok(), b.is_ok());
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert_eq!(a, b);
        }
        prop_assert_eq!(t1.to_jsonl(), t2.to_jsonl());
    }

    #[test]
    fn partition_sides_are_disjoint_and_cover(m in 2usize..10, pi in 0.0f64..=1.0, seed in 0u64..1000) {
        let procs = vec![gen_random_procedure(&RandomGraphConfig::unit(m, pi, seed), 0).unwrap()];
        let plan = one_request(&procs);
        let (a, b, _) = gp_partition(&procs[0], &plan, &Fragment::of((0..m).collect())).unwrap();
        prop_assert!(!a.members.is_empty() && !b.members.is_empty());
        prop_assert!(a.members.len() >= b.members.len());
        let mut all: Vec<usize> = a.members.iter().chain(&b.members).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..m).collect::<Vec<_>>());
    }

    #[test]
    fn every_placed_replica_is_counted_once(seed in 0u64..5000) {
        let inst = micro_instance(seed, 1e6);
        if let Ok(a) = map_all(&inst.infra, &inst.procedures, &inst.plan, None) {
            prop_assert_eq!(a.len() as u64, inst.plan.total_instances());
            for k in inst.plan.instances() {
                prop_assert!(a.get(&k).is_some());
            }
            prop_assert!(a.get(&InstanceKey::new(9, 0, 0)).is_none());
        }
    }
}

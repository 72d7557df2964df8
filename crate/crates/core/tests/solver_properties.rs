mod common;

use common::grid_instance;
use proptest::prelude::*;
use rasc_core::{
    build_p1, build_p2, lp_relax, solve, validate_solution, EnergyParams, NodeRef, SolveStatus, SolverConfig,
    DEPOT,
};

const N_RASCS: usize = 15;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn optimal_answers_validate_and_form_paths(
        flows in 1usize..=3,
        gamma in 0.5f64..3.0,
        seed in any::<u64>(),
    ) {
        let inst = grid_instance(flows, gamma, seed);
        for model in [
            build_p1(&inst.scenario, &inst.links, &inst.demands, N_RASCS).unwrap(),
            build_p2(&inst.scenario, &inst.links, &inst.demands, N_RASCS, &EnergyParams::default(), 1e-6).unwrap(),
        ] {
            let sol = solve(&model, &SolverConfig::default()).unwrap();
            prop_assert_eq!(sol.status, SolveStatus::Optimal);
            let report = validate_solution(&model, &sol.assignment);
            prop_assert!(report.passed(), "{:?}", report.violations);
            for (f, path) in sol.paths.iter().enumerate() {
                prop_assert_eq!(path[0], NodeRef::Hotspot(f));
                prop_assert_eq!(*path.last().unwrap(), NodeRef::Site(DEPOT));
                let mut seen = path.clone();
                seen.sort();
                seen.dedup();
                prop_assert_eq!(seen.len(), path.len(), "path revisits a node");
                for node in &path[1..path.len() - 1] {
                    let NodeRef::Site(s) = node else { panic!("hotspot inside a path") };
                    prop_assert!(sol.placements.contains_key(s));
                }
            }
        }
    }

    #[test]
    fn relaxation_bounds_the_integer_optimum(flows in 1usize..=2, gamma in 0.5f64..3.0, seed in any::<u64>()) {
        let inst = grid_instance(flows, gamma, seed);
        let model = build_p1(&inst.scenario, &inst.links, &inst.demands, N_RASCS).unwrap();
        let cfg = SolverConfig::default();
        let lp = lp_relax(&model, &cfg).unwrap();
        let ip = solve(&model, &cfg).unwrap();
        prop_assert!(lp.bound <= ip.objective + 1e-7);
    }

    #[test]
    fn raising_demand_never_lowers_the_optimum(flows in 1usize..=2, seed in any::<u64>(), lo in 0.5f64..2.5, step in 0.0f64..2.0) {
        // Hotspot positions depend only on the seed, so both instances share them.
        let a = grid_instance(flows, lo, seed);
        let b = grid_instance(flows, lo + step, seed);
        let cfg = SolverConfig::default();
        let sa = solve(&build_p1(&a.scenario, &a.links, &a.demands, N_RASCS).unwrap(), &cfg).unwrap();
        let sb = solve(&build_p1(&b.scenario, &b.links, &b.demands, N_RASCS).unwrap(), &cfg).unwrap();
        prop_assert!(sa.objective <= sb.objective + 1e-9);
    }

    #[test]
    fn energy_presolve_preserves_the_optimum(flows in 1usize..=2, gamma in 0.5f64..3.0, seed in any::<u64>()) {
        let inst = grid_instance(flows, gamma, seed);
        let model = build_p2(&inst.scenario, &inst.links, &inst.demands, N_RASCS, &EnergyParams::default(), 1e-6).unwrap();
        let on = solve(&model, &SolverConfig::default()).unwrap();
        let off = solve(&model, &SolverConfig { presolve_energy: false, ..SolverConfig::default() }).unwrap();
        prop_assert!((on.objective - off.objective).abs() <= 1e-9 * on.objective.abs().max(1.0));
    }

    #[test]
    fn spare_rascs_do_not_change_the_optimum(flows in 1usize..=2, gamma in 0.5f64..3.0, seed in any::<u64>()) {
        let inst = grid_instance(flows, gamma, seed);
        let cfg = SolverConfig::default();
        let tight = solve(&build_p1(&inst.scenario, &inst.links, &inst.demands, 8).unwrap(), &cfg).unwrap();
        let loose = solve(&build_p1(&inst.scenario, &inst.links, &inst.demands, N_RASCS).unwrap(), &cfg).unwrap();
        prop_assert_eq!(tight.objective, loose.objective);
    }
}

#[test]
fn p2_energy_only_breaks_ties() {
    let inst = grid_instance(3, 3.0, 11);
    let p1 = solve(
        &build_p1(&inst.scenario, &inst.links, &inst.demands, N_RASCS).unwrap(),
        &SolverConfig::default(),
    )
    .unwrap();
    let p2 = solve(
        &build_p2(&inst.scenario, &inst.links, &inst.demands, N_RASCS, &EnergyParams::default(), 1e-6)
            .unwrap(),
        &SolverConfig::default(),
    )
    .unwrap();
    // The energy term is a tie-breaker below one unit of hops or RASCs.
    assert_eq!((p2.objective - p1.objective).floor(), 0.0);
    assert!(p2.total_energy() > 0.0);
}

#[test]
fn unreachable_demand_is_infeasible() {
    let inst = grid_instance(1, 4.9, 3);
    let model = build_p1(&inst.scenario, &inst.links, &inst.demands, N_RASCS).unwrap();
    let sol = solve(&model, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
    assert!(sol.assignment.is_empty());
}

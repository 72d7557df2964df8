mod common;

use common::{instance, SMALL_SHAPES};
use proptest::prelude::*;
use rasc_core::solver::BruteForceConfig;
use rasc_core::{brute_force, build_p1, solve, SolveStatus, SolverConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn branch_and_bound_matches_enumeration(
        shape in 0..SMALL_SHAPES.len(),
        flows in 1usize..=2,
        gamma in 0.5f64..4.8,
        seed in any::<u64>(),
        range in prop::sample::select(vec![60.0, 120.0, 200.0]),
    ) {
        let inst = instance(SMALL_SHAPES[shape], flows, gamma, seed, range);
        let n = inst.scenario.lampposts().count();
        let model = build_p1(&inst.scenario, &inst.links, &inst.demands, n).unwrap();
        let bnb = solve(&model, &SolverConfig::default()).unwrap();
        let cfg = BruteForceConfig { hop_cap: 6.max(n + 1), ..BruteForceConfig::default() };
        let oracle = brute_force(&inst.scenario, &inst.links, &inst.demands, n, &cfg).unwrap();
        prop_assert_eq!(bnb.status, oracle.status);
        if bnb.status == SolveStatus::Optimal {
            prop_assert!((bnb.objective - oracle.objective).abs() < 1e-9,
                "bnb {} vs oracle {}", bnb.objective, oracle.objective);
        }
    }
}

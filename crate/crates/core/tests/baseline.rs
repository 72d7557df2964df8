mod common;

use common::grid_instance;
use proptest::prelude::*;
use rasc_core::{
    build_link_table, evaluate_fsc, generate_manhattan, plan_fsc, ChannelParams, Error, FscParams, FscPlan,
    GridParams, SolverConfig, DEPOT,
};

fn plan(gamma: f64, params: &FscParams) -> rasc_core::Result<FscPlan> {
    let grid = generate_manhattan(&GridParams::default()).unwrap();
    let channel = ChannelParams::default();
    let links = build_link_table(&grid, &channel).unwrap();
    plan_fsc(&grid, &links, &channel, gamma, params)
}

#[test]
fn count_is_nondecreasing_in_demand() {
    let params = FscParams::default();
    let counts: Vec<usize> = (1..=19).map(|i| plan(0.25 * i as f64, &params).unwrap().count()).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
}

#[test]
fn plan_excludes_depot_and_records_its_level() {
    let p = plan(3.0, &FscParams::default()).unwrap();
    assert!(!p.placements.contains(&DEPOT));
    assert!(p.placements.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(p.counts.len(), 1);
    assert_eq!(p.counts[0].count, p.count());
    assert!(p.coverage_radius > 0.0 && p.coverage_radius <= ChannelParams::default().access_range_m);
}

#[test]
fn demand_above_the_efficiency_cap_is_infeasible() {
    assert!(matches!(plan(4.9, &FscParams::default()), Err(Error::Infeasible(_))));
}

#[test]
fn design_load_adds_capacity_only_when_links_cannot_share() {
    let coverage_only = FscParams { design_load: 0, ..FscParams::default() };
    // Saturated links make coverage alone blind to the demand level.
    assert_eq!(plan(2.25, &coverage_only).unwrap().count(), plan(3.0, &coverage_only).unwrap().count());
    // Two flows share a 4.8 bps/Hz link at 2.25 but not at 2.5.
    let loaded = FscParams::default();
    assert!(plan(2.25, &loaded).unwrap().count() < plan(2.5, &loaded).unwrap().count());
}

#[test]
fn zero_radius_vicinity_needs_only_lamppost_points() {
    let params = FscParams { vicinity_radius: 0.0, ..FscParams::default() };
    let p = plan(3.0, &params).unwrap();
    assert!(p.count() <= plan(3.0, &FscParams::default()).unwrap().count());
}

#[test]
fn no_hotspots_is_trivially_routable() {
    let grid = generate_manhattan(&GridParams::default()).unwrap();
    let links = build_link_table(&grid, &ChannelParams::default()).unwrap();
    let p = plan(3.0, &FscParams::default()).unwrap();
    let eval = evaluate_fsc(&p, &grid, &links, &[], &SolverConfig::default()).unwrap();
    assert!(eval.feasible && eval.solution.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn layout_carries_any_design_load(flows in 1usize..=2, seed in any::<u64>(), gamma in prop::sample::select(vec![1.0, 2.25, 2.5, 3.0])) {
        let inst = grid_instance(flows, gamma, seed);
        let p = plan(gamma, &FscParams::default()).unwrap();
        let eval = evaluate_fsc(&p, &inst.scenario, &inst.links, &inst.demands, &SolverConfig::default()).unwrap();
        prop_assert!(eval.feasible);
        prop_assert!(eval.unroutable_flows.is_empty());
        prop_assert!(eval.active.iter().all(|s| p.contains(*s)));
    }
}

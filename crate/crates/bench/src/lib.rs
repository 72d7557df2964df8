//! Fixed instances shared by the benchmarks.

use rasc_core::{
    build_link_table, build_p1, build_p2, generate_manhattan, place_hotspots_seeded, ChannelParams,
    EnergyParams, GridParams, HotspotParams, IlpModel, LinkTable, Scenario,
};

/// Default grid with `flows` hotspots of demand `gamma`, drawn from `seed`.
pub fn instance(flows: usize, gamma: f64, seed: u64) -> (Scenario, LinkTable) {
    let grid = generate_manhattan(&GridParams::default()).expect("default grid");
    let scenario = place_hotspots_seeded(&grid, flows, gamma, &HotspotParams::default(), seed)
        .expect("hotspot placement");
    let links = build_link_table(&scenario, &ChannelParams::default()).expect("links");
    (scenario, links)
}

pub fn p1_model(flows: usize, gamma: f64, seed: u64) -> IlpModel {
    let (s, t) = instance(flows, gamma, seed);
    build_p1(&s, &t, &vec![gamma; flows], 15).expect("P1 model")
}

pub fn p2_model(flows: usize, gamma: f64, seed: u64) -> IlpModel {
    let (s, t) = instance(flows, gamma, seed);
    build_p2(&s, &t, &vec![gamma; flows], 15, &EnergyParams::default(), 1e-6).expect("P2 model")
}

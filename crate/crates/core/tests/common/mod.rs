#![allow(dead_code)]

use rasc_core::{
    build_link_table, generate_manhattan, place_hotspots_seeded, ChannelParams, GridParams, HotspotParams,
    LinkTable, Scenario,
};

/// Grid shapes with at most 8 sites, as (blocks_x, blocks_y).
pub const SMALL_SHAPES: [(usize, usize); 5] = [(1, 1), (1, 2), (2, 1), (3, 1), (1, 3)];

pub struct Instance {
    pub scenario: Scenario,
    pub links: LinkTable,
    pub demands: Vec<f64>,
}

pub fn instance(blocks: (usize, usize), flows: usize, gamma: f64, seed: u64, range_m: f64) -> Instance {
    let grid =
        generate_manhattan(&GridParams { blocks_x: blocks.0, blocks_y: blocks.1, ..GridParams::default() })
            .unwrap();
    let scenario = place_hotspots_seeded(&grid, flows, gamma, &HotspotParams::default(), seed).unwrap();
    let channel =
        ChannelParams { max_link_range_m: range_m, access_range_m: range_m, ..ChannelParams::default() };
    let links = build_link_table(&scenario, &channel).unwrap();
    Instance { scenario, links, demands: vec![gamma; flows] }
}

/// Default 4x4-site grid instance.
pub fn grid_instance(flows: usize, gamma: f64, seed: u64) -> Instance {
    instance((3, 3), flows, gamma, seed, ChannelParams::default().max_link_range_m)
}

use rasc_core::{
    generate_manhattan, place_hotspots_seeded, run_sweep, trial_seed, ExperimentConfig, GridParams,
    HotspotParams, Scenario,
};

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.sweep.gammas = vec![2.5, 3.0];
    cfg.sweep.n_e = vec![1, 2];
    cfg.sweep.trials = 3;
    cfg
}

fn csv_bytes(cfg: &ExperimentConfig) -> Vec<u8> {
    let mut out = Vec::new();
    run_sweep(cfg).unwrap().write_trials_csv(&mut out).unwrap();
    out
}

#[test]
fn repeated_sweeps_write_identical_csv() {
    let cfg = small();
    assert_eq!(csv_bytes(&cfg), csv_bytes(&cfg));
}

#[test]
fn thread_count_does_not_change_results() {
    let mut one = small();
    one.sweep.threads = 1;
    let mut four = small();
    four.sweep.threads = 4;
    assert_eq!(csv_bytes(&one), csv_bytes(&four));
}

#[test]
fn rows_come_in_cell_order_with_fixed_columns() {
    let cfg = small();
    let result = run_sweep(&cfg).unwrap();
    assert_eq!(result.records.len(), 2 * 2 * 3);
    assert_eq!(result.cells.len(), 4);
    let keys: Vec<(f64, usize, usize)> = result.records.iter().map(|r| (r.gamma, r.n_e, r.trial)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted);
    let mut out = Vec::new();
    result.write_trials_csv(&mut out).unwrap();
    let header = String::from_utf8(out).unwrap().lines().next().unwrap().to_string();
    assert_eq!(
        header,
        "trial,seed,gamma,n_e,p1_count,p1_obj,p2_count,p2_obj,p2_energy_j,fsc_count,status,bnb_nodes,wall_ms"
    );
    for r in &result.records {
        assert_eq!(r.p1_violations + r.p2_violations, 0);
        assert!(r.p1_count.unwrap() <= r.fsc_count.unwrap());
        assert_eq!(r.wall_ms, 0.0);
    }
}

#[test]
fn trial_seeds_depend_on_every_coordinate() {
    let base = trial_seed(42, 3.0, 2, 5);
    assert_eq!(base, trial_seed(42, 3.0, 2, 5));
    for other in [
        trial_seed(43, 3.0, 2, 5),
        trial_seed(42, 2.75, 2, 5),
        trial_seed(42, 3.0, 3, 5),
        trial_seed(42, 3.0, 2, 6),
    ] {
        assert_ne!(base, other);
    }
}

#[test]
fn trial_hotspots_follow_from_the_recorded_seed() {
    let cfg = small();
    let result = run_sweep(&cfg).unwrap();
    let grid = generate_manhattan(&GridParams::default()).unwrap();
    let r = &result.records[4];
    let s: Scenario =
        place_hotspots_seeded(&grid, r.n_e, r.gamma, &HotspotParams::default(), r.seed).unwrap();
    assert_eq!(s.num_hotspots(), r.n_e);
    assert_eq!(r.seed, trial_seed(cfg.sweep.master_seed, r.gamma, r.n_e, r.trial));
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = small();
    let text = cfg.to_toml().unwrap();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    let shipped = include_str!("../../../configs/default.toml");
    assert_eq!(ExperimentConfig::from_toml(shipped).unwrap(), ExperimentConfig::default());
}

#[test]
fn bad_configs_are_rejected() {
    assert!(ExperimentConfig::from_toml("[sweep]\ntrials = 0\n").is_err());
    assert!(ExperimentConfig::from_toml("[sweep]\ngammas = [-1.0]\n").is_err());
    assert!(ExperimentConfig::from_toml("[sweep]\nunknown = [\n").is_err());
}

#[test]
fn outputs_land_in_the_directory() {
    let dir = std::env::temp_dir().join(format!("rasc-sweep-{}", std::process::id()));
    let mut cfg = small();
    cfg.sweep.trials = 1;
    run_sweep(&cfg).unwrap().write_outputs(&dir).unwrap();
    for f in ["trials.csv", "summary.csv", "summary.json", "fsc.csv"] {
        assert!(dir.join(f).is_file(), "{f} missing");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

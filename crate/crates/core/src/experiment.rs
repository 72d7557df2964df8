//! Monte Carlo sweeps over demand level and hotspot count.
//!
//! Every trial draws its own hotspots from a seed hashed out of the master
//! seed and the cell coordinates, solves P1 and P2, and routes the same
//! hotspots over the FSC layout planned for that demand level. Trials run in
//! parallel; rows come back in (gamma, n_e, trial) order regardless.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{evaluate_fsc, plan_fsc, FscCount, FscParams, FscPlan};
use crate::channel::{build_link_table, ChannelParams};
use crate::energy::EnergyParams;
use crate::error::{Error, Result};
use crate::ilp::{build_p1, build_p2, validate_solution};
use crate::scenario::{generate_manhattan, place_hotspots_seeded, GridParams, HotspotParams, Scenario};
use crate::solver::{solve, Solution, SolveStatus, SolverConfig};

pub const TRIAL_COLUMNS: [&str; 13] = [
    "trial",
    "seed",
    "gamma",
    "n_e",
    "p1_count",
    "p1_obj",
    "p2_count",
    "p2_obj",
    "p2_energy_j",
    "fsc_count",
    "status",
    "bnb_nodes",
    "wall_ms",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepParams {
    pub gammas: Vec<f64>,
    pub n_e: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    /// Available RASCs; 0 means one per lamppost.
    pub n_rascs: usize,
    /// Weight on Joules in the P2 objective.
    pub energy_weight: f64,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    /// Write measured times into `wall_ms`. Off by default so that repeated
    /// runs produce identical files.
    pub record_wall_time: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            gammas: (0..=10).map(|i| 0.5 + 0.25 * i as f64).collect(),
            n_e: vec![1, 2, 3],
            trials: 100,
            master_seed: 42,
            n_rascs: 0,
            energy_weight: 1e-6,
            threads: 0,
            record_wall_time: false,
            out_dir: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scenario: GridParams,
    pub hotspots: HotspotParams,
    pub channel: ChannelParams,
    pub energy: EnergyParams,
    pub solver: SolverConfig,
    pub fsc: FscParams,
    pub sweep: SweepParams,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let s = &self.sweep;
        if s.trials == 0 {
            return bad("sweep.trials must be at least 1".into());
        }
        if s.gammas.is_empty() || s.n_e.is_empty() {
            return bad("sweep needs at least one gamma and one n_e".into());
        }
        if let Some(g) = s.gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return bad(format!("gamma values must be positive, got {g}"));
        }
        if s.n_e.contains(&0) {
            return bad("n_e values must be at least 1".into());
        }
        if !(s.energy_weight >= 0.0 && s.energy_weight.is_finite()) {
            return bad("sweep.energy_weight must be non-negative".into());
        }
        self.channel.validate()?;
        self.solver.validate()?;
        self.fsc.validate()?;
        Ok(())
    }
}

/// One trial of one (gamma, n_e) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub gamma: f64,
    pub n_e: usize,
    pub p1_count: Option<usize>,
    pub p1_obj: Option<f64>,
    pub p2_count: Option<usize>,
    pub p2_obj: Option<f64>,
    pub p2_energy_j: Option<f64>,
    pub fsc_count: Option<usize>,
    /// `ok`, or `;`-separated problems such as `p1:node_limit`.
    pub status: String,
    pub bnb_nodes: usize,
    pub wall_ms: f64,
    /// Constraint violations found when re-validating the P1 and P2 answers.
    pub p1_violations: usize,
    pub p2_violations: usize,
    /// Whether the FSC layout could carry this realization.
    pub fsc_routable: Option<bool>,
}

impl TrialRecord {
    fn csv_row(&self) -> [String; 13] {
        let opt = |v: Option<String>| v.unwrap_or_default();
        [
            self.trial.to_string(),
            self.seed.to_string(),
            self.gamma.to_string(),
            self.n_e.to_string(),
            opt(self.p1_count.map(|v| v.to_string())),
            opt(self.p1_obj.map(|v| v.to_string())),
            opt(self.p2_count.map(|v| v.to_string())),
            opt(self.p2_obj.map(|v| v.to_string())),
            opt(self.p2_energy_j.map(|v| format!("{v:.3}"))),
            opt(self.fsc_count.map(|v| v.to_string())),
            self.status.clone(),
            self.bnb_nodes.to_string(),
            format!("{:.3}", self.wall_ms),
        ]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return Self::default();
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var =
            if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Self {
            n: v.len(),
            mean,
            std: var.sqrt(),
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub gamma: f64,
    pub n_e: usize,
    pub trials: usize,
    /// Trials without an optimal P1 or P2 answer.
    pub failed: usize,
    /// Trials the FSC layout could not carry.
    pub fsc_unroutable: usize,
    pub p1_count: Stat,
    pub p2_count: Stat,
    pub fsc_count: Stat,
    pub p2_energy_j: Stat,
    /// Mean of (fsc - p1) / fsc over trials with both counts.
    pub savings: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
    pub fsc: Vec<FscPlan>,
}

impl SweepResult {
    pub fn cell(&self, gamma: f64, n_e: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.gamma == gamma && c.n_e == n_e)
    }

    pub fn fsc_counts(&self) -> Vec<FscCount> {
        self.fsc.iter().map(|p| FscCount { gamma: p.gamma, count: p.count() }).collect()
    }

    pub fn write_trials_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRIAL_COLUMNS)?;
        for r in &self.records {
            w.write_record(r.csv_row())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "gamma".to_string(),
            "n_e".into(),
            "trials".into(),
            "failed".into(),
            "fsc_unroutable".into(),
        ];
        for name in ["p1_count", "p2_count", "fsc_count", "p2_energy_j"] {
            for s in ["mean", "std", "min", "max"] {
                header.push(format!("{name}_{s}"));
            }
        }
        header.push("savings".into());
        w.write_record(&header)?;
        for c in &self.cells {
            let mut row = vec![
                c.gamma.to_string(),
                c.n_e.to_string(),
                c.trials.to_string(),
                c.failed.to_string(),
                c.fsc_unroutable.to_string(),
            ];
            for s in [&c.p1_count, &c.p2_count, &c.fsc_count, &c.p2_energy_j] {
                row.extend([s.mean, s.std, s.min, s.max].map(|v| format!("{v:.6}")));
            }
            row.push(format!("{:.6}", c.savings));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `trials.csv`, `summary.csv`, `summary.json` and `fsc.csv` into
    /// `dir`, creating it if needed.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.write_trials_csv(fs::File::create(dir.join("trials.csv"))?)?;
        self.write_summary_csv(fs::File::create(dir.join("summary.csv"))?)?;
        let summary = serde_json::json!({ "cells": self.cells, "fsc": self.fsc });
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
        crate::baseline::write_count_csv(&self.fsc_counts(), fs::File::create(dir.join("fsc.csv"))?)?;
        Ok(())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial. Depends only on its own coordinates, so adding grid
/// points leaves every other cell's hotspots unchanged.
pub fn trial_seed(master: u64, gamma: f64, n_e: usize, trial: usize) -> u64 {
    [gamma.to_bits(), n_e as u64, trial as u64].into_iter().fold(splitmix(master), |h, v| splitmix(h ^ v))
}

fn status_name(s: SolveStatus) -> String {
    s.to_string()
}

fn run_trial(
    cfg: &ExperimentConfig,
    grid: &Scenario,
    plan: Option<&FscPlan>,
    gamma: f64,
    n_e: usize,
    trial: usize,
) -> TrialRecord {
    let start = std::time::Instant::now();
    let seed = trial_seed(cfg.sweep.master_seed, gamma, n_e, trial);
    let mut rec = TrialRecord {
        trial,
        seed,
        gamma,
        n_e,
        p1_count: None,
        p1_obj: None,
        p2_count: None,
        p2_obj: None,
        p2_energy_j: None,
        fsc_count: plan.map(FscPlan::count),
        status: String::new(),
        bnb_nodes: 0,
        wall_ms: 0.0,
        p1_violations: 0,
        p2_violations: 0,
        fsc_routable: None,
    };
    let mut issues: Vec<String> = Vec::new();
    if let Err(e) = trial_body(cfg, grid, plan, seed, &mut rec, &mut issues) {
        issues.push(format!("error:{e}"));
    }
    if plan.is_none() {
        issues.push("fsc:infeasible".into());
    }
    rec.status = if issues.is_empty() { "ok".into() } else { issues.join(";") };
    if cfg.sweep.record_wall_time {
        rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    }
    rec
}

fn trial_body(
    cfg: &ExperimentConfig,
    grid: &Scenario,
    plan: Option<&FscPlan>,
    seed: u64,
    rec: &mut TrialRecord,
    issues: &mut Vec<String>,
) -> Result<()> {
    let gamma = rec.gamma;
    let scenario = place_hotspots_seeded(grid, rec.n_e, gamma, &cfg.hotspots, seed)?;
    let links = build_link_table(&scenario, &cfg.channel)?;
    let demands = vec![gamma; rec.n_e];
    let n_rascs = match cfg.sweep.n_rascs {
        0 => scenario.lampposts().count(),
        n => n,
    };

    let mut take = |tag: &str, sol: &Solution| {
        rec.bnb_nodes += sol.stats.bnb_nodes;
        if sol.status != SolveStatus::Optimal {
            issues.push(format!("{tag}:{}", status_name(sol.status)));
        }
    };

    let p1 = build_p1(&scenario, &links, &demands, n_rascs)?;
    let s1 = solve(&p1, &cfg.solver)?;
    take("p1", &s1);
    if s1.status == SolveStatus::Optimal {
        rec.p1_count = Some(s1.n_rascs());
        rec.p1_obj = Some(s1.objective);
        rec.p1_violations = validate_solution(&p1, &s1.assignment).violations.len();
    }

    let p2 = build_p2(&scenario, &links, &demands, n_rascs, &cfg.energy, cfg.sweep.energy_weight)?;
    let s2 = solve(&p2, &cfg.solver)?;
    take("p2", &s2);
    if s2.status == SolveStatus::Optimal {
        rec.p2_count = Some(s2.n_rascs());
        rec.p2_obj = Some(s2.objective);
        rec.p2_energy_j = Some(s2.total_energy());
        rec.p2_violations = validate_solution(&p2, &s2.assignment).violations.len();
    }

    if let Some(plan) = plan {
        let eval = evaluate_fsc(plan, &scenario, &links, &demands, &cfg.solver)?;
        rec.fsc_routable = Some(eval.feasible);
        if !eval.feasible {
            issues.push("fsc:unroutable".into());
        }
    }
    if rec.p1_violations > 0 || rec.p2_violations > 0 {
        issues.push("invalid".into());
    }
    Ok(())
}

fn summarize(gamma: f64, n_e: usize, rows: &[TrialRecord]) -> CellSummary {
    let stat = |f: &dyn Fn(&TrialRecord) -> Option<f64>| Stat::of(rows.iter().filter_map(f));
    let savings = Stat::of(rows.iter().filter_map(|r| {
        let (p1, fsc) = (r.p1_count? as f64, r.fsc_count? as f64);
        (fsc > 0.0).then(|| (fsc - p1) / fsc)
    }));
    CellSummary {
        gamma,
        n_e,
        trials: rows.len(),
        failed: rows.iter().filter(|r| r.p1_count.is_none() || r.p2_count.is_none()).count(),
        fsc_unroutable: rows.iter().filter(|r| r.fsc_routable == Some(false)).count(),
        p1_count: stat(&|r| r.p1_count.map(|v| v as f64)),
        p2_count: stat(&|r| r.p2_count.map(|v| v as f64)),
        fsc_count: stat(&|r| r.fsc_count.map(|v| v as f64)),
        p2_energy_j: stat(&|r| r.p2_energy_j),
        savings: savings.mean,
    }
}

/// Runs every (gamma, n_e, trial) of the sweep. Trial failures are recorded
/// in the row status; only configuration and grid errors abort.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let grid = generate_manhattan(&cfg.scenario)?;
    let grid_links = build_link_table(&grid, &cfg.channel)?;

    let mut plans: Vec<Option<FscPlan>> = Vec::with_capacity(cfg.sweep.gammas.len());
    for &gamma in &cfg.sweep.gammas {
        match plan_fsc(&grid, &grid_links, &cfg.channel, gamma, &cfg.fsc) {
            Ok(p) => plans.push(Some(p)),
            Err(Error::Infeasible(_)) => plans.push(None),
            Err(e) => return Err(e),
        }
    }

    let jobs: Vec<(usize, usize, usize)> = (0..cfg.sweep.gammas.len())
        .flat_map(|g| cfg.sweep.n_e.iter().flat_map(move |&n| (0..cfg.sweep.trials).map(move |t| (g, n, t))))
        .collect();
    let work = || -> Vec<TrialRecord> {
        jobs.par_iter()
            .map(|&(g, n, t)| run_trial(cfg, &grid, plans[g].as_ref(), cfg.sweep.gammas[g], n, t))
            .collect()
    };
    let records = if cfg.sweep.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.sweep.threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work)
    } else {
        work()
    };

    let mut cells = Vec::new();
    for chunk in records.chunks(cfg.sweep.trials) {
        cells.push(summarize(chunk[0].gamma, chunk[0].n_e, chunk));
    }
    let fsc = plans.into_iter().flatten().collect();
    Ok(SweepResult { records, cells, fsc })
}

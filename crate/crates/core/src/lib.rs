//! Planning mmWave multi-hop backhaul with robotic aerial small cells (RASCs)
//! that perch on lampposts of a Manhattan street grid.
//!
//! The pipeline is: generate a [`Scenario`], evaluate its links into a
//! [`LinkTable`], build a P1/P2 [`IlpModel`], and [`solve`] it exactly. The
//! [`baseline`] module plans the fixed small cell deployment used for
//! comparison and [`experiment`] runs Monte Carlo sweeps over both.

// Validation uses `!(x > 0.0)` on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod channel;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod ilp;
pub mod scenario;
pub mod solver;

pub use baseline::{evaluate_fsc, fsc_count_table, plan_fsc, FscCount, FscEvaluation, FscParams, FscPlan};
pub use channel::{build_link_table, ChannelParams, Link, LinkTable};
pub use energy::{EnergyBreakdown, EnergyParams};
pub use error::{Error, Result};
pub use experiment::{
    run_sweep, trial_seed, CellSummary, ExperimentConfig, SweepParams, SweepResult, TrialRecord,
};
pub use ilp::{build_p1, build_p2, validate_solution, IlpModel, Problem, VarIndex, VarKind};
pub use scenario::{
    generate_manhattan, place_hotspots, place_hotspots_seeded, GridParams, Hotspot, HotspotParams, NodeRef,
    NodeSite, Point2D, Scenario, DEPOT,
};
pub use solver::{brute_force, lp_relax, solve, Solution, SolveStatus, SolverConfig};

//! Exact solution of the backhaul programs: LP-based branch-and-bound on a
//! built-in simplex, plus an enumeration oracle for small instances.

mod bnb;
mod brute;
mod simplex;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::energy::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::ilp::{IlpModel, Problem, VarKind};
use crate::scenario::NodeRef;

pub use brute::{brute_force, BruteForceConfig};
pub use simplex::LpStatus;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchRule {
    /// Most fractional binary, lowest column on ties.
    MostFractional,
    /// Product of estimated up/down degradations, falling back to most
    /// fractional for columns without history.
    PseudoCost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub integrality_tolerance: f64,
    pub lp_tolerance: f64,
    pub node_limit: usize,
    pub branching: BranchRule,
    /// When false, `time_limit_s` is honored, which makes results depend on
    /// machine speed.
    pub deterministic_order: bool,
    pub time_limit_s: Option<f64>,
    /// Open nodes that keep a copy of their parent's tableau; others are
    /// re-solved from scratch.
    pub warm_start_limit: usize,
    /// Solve P2 models with their energy columns folded into the placement
    /// and arc costs, then recompute the energy columns exactly.
    pub presolve_energy: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            integrality_tolerance: 1e-6,
            lp_tolerance: 1e-9,
            node_limit: 200_000,
            branching: BranchRule::MostFractional,
            deterministic_order: true,
            time_limit_s: None,
            warm_start_limit: 32,
            presolve_energy: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.integrality_tolerance > 0.0 && self.integrality_tolerance < 0.5) {
            return Err(Error::InvalidParameter("integrality tolerance must be in (0, 0.5)".into()));
        }
        if !(self.lp_tolerance > 0.0 && self.lp_tolerance < 1e-3) {
            return Err(Error::InvalidParameter("LP tolerance must be positive and small".into()));
        }
        if self.node_limit == 0 {
            return Err(Error::InvalidParameter("node limit must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    NodeLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::NodeLimit => "node_limit",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub bnb_nodes: usize,
    pub lp_iterations: usize,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub problem: Problem,
    pub status: SolveStatus,
    pub objective: f64,
    /// Best proven lower bound.
    pub bound: f64,
    /// Column values, empty when no feasible point was found.
    pub assignment: Vec<f64>,
    pub paths: Vec<Vec<NodeRef>>,
    pub placements: BTreeMap<usize, usize>,
    pub energies: BTreeMap<usize, EnergyBreakdown>,
    pub stats: SolverStats,
}

impl Solution {
    fn empty(model: &IlpModel, status: SolveStatus, stats: SolverStats) -> Self {
        Solution {
            problem: model.problem,
            status,
            objective: f64::INFINITY,
            bound: f64::INFINITY,
            assignment: Vec::new(),
            paths: Vec::new(),
            placements: BTreeMap::new(),
            energies: BTreeMap::new(),
            stats,
        }
    }

    pub(crate) fn from_assignment(
        model: &IlpModel,
        status: SolveStatus,
        assignment: Vec<f64>,
        bound: f64,
        stats: SolverStats,
    ) -> Self {
        Solution {
            problem: model.problem,
            status,
            objective: model.objective_value(&assignment),
            bound,
            paths: model.extract_paths(&assignment),
            placements: model.placements(&assignment),
            energies: model.energies(&assignment),
            assignment,
            stats,
        }
    }

    pub fn n_rascs(&self) -> usize {
        self.placements.len()
    }

    /// Total links used over all flows.
    pub fn hops(&self) -> usize {
        self.paths.iter().map(|p| p.len().saturating_sub(1)).sum()
    }

    pub fn total_energy(&self) -> f64 {
        self.energies.values().map(|e| e.e_total).sum()
    }

    /// Nonzero columns by name.
    pub fn named_values(&self, model: &IlpModel) -> BTreeMap<String, f64> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(c, &v)| (model.kind(c).name(), v))
            .collect()
    }

    /// One `path` row per hop and one `rasc` row per placement.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "record",
            "flow",
            "step",
            "from",
            "to",
            "site",
            "rasc",
            "e_fly_j",
            "e_grasp_j",
            "e_comm_j",
            "e_total_j",
        ])?;
        for (f, path) in self.paths.iter().enumerate() {
            for (step, pair) in path.windows(2).enumerate() {
                w.write_record([
                    "path".to_string(),
                    f.to_string(),
                    step.to_string(),
                    pair[0].to_string(),
                    pair[1].to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ])?;
            }
        }
        for (&site, &rasc) in &self.placements {
            let e = self.energies.get(&site);
            let field = |v: Option<f64>| v.map(|v| format!("{v:.3}")).unwrap_or_default();
            w.write_record([
                "rasc".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                site.to_string(),
                rasc.to_string(),
                field(e.map(|e| e.e_fly)),
                field(e.map(|e| e.e_grasp)),
                field(e.map(|e| e.e_comm)),
                field(e.map(|e| e.e_total)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Optimal vertex of the relaxation with binaries in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct LpRelaxation {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub bound: f64,
    pub iterations: usize,
}

pub fn lp_relax(model: &IlpModel, config: &SolverConfig) -> Result<LpRelaxation> {
    config.validate()?;
    let mut lp = simplex::Lp::new(model, config.lp_tolerance)?;
    let status = lp.solve()?;
    let (values, bound) = match status {
        LpStatus::Optimal => (lp.values(), lp.objective()),
        LpStatus::Infeasible => (Vec::new(), f64::INFINITY),
        LpStatus::Unbounded => (Vec::new(), f64::NEG_INFINITY),
    };
    Ok(LpRelaxation { status, values, bound, iterations: lp.iterations })
}

/// Solves the model to optimality by branch-and-bound.
pub fn solve(model: &IlpModel, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    let start = std::time::Instant::now();
    let reduced =
        if config.presolve_energy && energy_columns_free(model) { model.energy_presolved() } else { None };
    let out = bnb::branch_and_bound(reduced.as_ref().unwrap_or(model), config, start)?;
    let stats = SolverStats {
        bnb_nodes: out.nodes,
        lp_iterations: out.iterations,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok(match out.incumbent {
        Some(mut values) => {
            if reduced.is_some() {
                values.resize(model.num_vars(), 0.0);
                model.polish(&mut values);
            }
            Solution::from_assignment(model, out.status, values, out.bound, stats)
        }
        None => Solution::empty(model, out.status, stats),
    })
}

fn energy_columns_free(model: &IlpModel) -> bool {
    model.vars().all(|v| {
        !matches!(v.kind, VarKind::E { .. })
            || (model.lower_bounds()[v.column] == 0.0 && model.upper_bounds()[v.column] == f64::INFINITY)
    })
}

/// Number of `y` arcs valued at one.
pub fn count_arcs(model: &IlpModel, values: &[f64]) -> usize {
    model.vars().filter(|v| matches!(v.kind, VarKind::Y { .. }) && values[v.column] > 0.5).count()
}

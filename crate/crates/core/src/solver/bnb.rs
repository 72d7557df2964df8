//! Depth-first branch-and-bound.
//!
//! Plain binaries are branched on individually. Placement columns of one site
//! are branched on as a group: the site either holds no RASC (all its columns
//! fixed to 0) or holds the lowest RASC id not yet committed elsewhere. Since
//! RASC ids are interchangeable this loses no optimum, and it avoids
//! enumerating the same placement under every relabeling of ids.

use std::time::Instant;

use super::simplex::{Lp, LpStatus};
use super::{BranchRule, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::ilp::{validate_solution, IlpModel, Integrality};

/// Column fixings `(col, value)` that define a node.
type Fixes = Vec<(usize, f64)>;

pub(crate) struct Outcome {
    pub status: SolveStatus,
    pub incumbent: Option<Vec<f64>>,
    pub bound: f64,
    pub nodes: usize,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
enum Target {
    Column(usize),
    Group(usize),
}

/// A branching candidate; `key` orders candidates for tie-breaks and indexes
/// the pseudo-cost table.
#[derive(Clone, Copy, Debug)]
struct Candidate {
    key: usize,
    target: Target,
}

struct Node {
    lp: Option<Box<Lp>>,
    /// Bound fixings from the root, in order.
    fixes: Vec<(usize, f64)>,
    parent_obj: f64,
    /// Candidate key, direction (up = true) and fractional part at the parent.
    branch: Option<(usize, bool, f64)>,
}

#[derive(Default, Clone, Copy)]
struct PseudoCost {
    sum: [f64; 2],
    count: [u32; 2],
}

struct Search<'a> {
    model: &'a IlpModel,
    config: &'a SolverConfig,
    integral_objective: bool,
    incumbent: Option<(f64, Vec<f64>)>,
    pseudo: Vec<PseudoCost>,
    candidates: Vec<Candidate>,
    groups: Vec<Vec<usize>>,
    /// Position of a column within its group.
    group_pos: Vec<Option<usize>>,
}

impl<'a> Search<'a> {
    fn new(model: &'a IlpModel, config: &'a SolverConfig) -> Self {
        let groups = model.placement_groups();
        let mut group_pos = vec![None; model.num_vars()];
        for g in &groups {
            for (p, &c) in g.iter().enumerate() {
                group_pos[c] = Some(p);
            }
        }
        let mut candidates: Vec<Candidate> = model
            .integrality()
            .iter()
            .enumerate()
            .filter(|(c, i)| **i == Integrality::Binary && group_pos[*c].is_none())
            .map(|(c, _)| Candidate { key: c, target: Target::Column(c) })
            .collect();
        candidates.extend(
            groups.iter().enumerate().map(|(g, cols)| Candidate { key: cols[0], target: Target::Group(g) }),
        );
        candidates.sort_by_key(|c| c.key);
        Search {
            model,
            config,
            integral_objective: model.has_integral_objective(),
            incumbent: None,
            pseudo: vec![PseudoCost::default(); model.num_vars()],
            candidates,
            groups,
            group_pos,
        }
    }

    fn pruned(&self, bound: f64) -> bool {
        match &self.incumbent {
            None => false,
            Some((best, _)) if self.integral_objective => {
                bound > best - 1.0 + self.config.integrality_tolerance
            }
            Some((best, _)) => bound >= best - 1e-9 * best.abs().max(1.0),
        }
    }

    fn offer(&mut self, values: &[f64]) {
        let mut v = values.to_vec();
        self.model.polish(&mut v);
        let report = validate_solution(self.model, &v);
        if !report.passed() {
            return;
        }
        let better = self
            .incumbent
            .as_ref()
            .is_none_or(|(best, _)| report.objective < best - 1e-9 * best.abs().max(1.0));
        if better {
            self.incumbent = Some((report.objective, v));
        }
    }

    fn value(&self, target: Target, values: &[f64]) -> f64 {
        match target {
            Target::Column(c) => values[c],
            Target::Group(g) => self.groups[g].iter().map(|&c| values[c]).sum(),
        }
    }

    /// Picks the branching candidate, or `None` when the point is integral
    /// on every plain binary and every group total.
    fn select(&self, values: &[f64]) -> Option<(Candidate, f64)> {
        let tol = self.config.integrality_tolerance;
        let mut pick: Option<(Candidate, f64, f64)> = None;
        for &cand in &self.candidates {
            let v = self.value(cand.target, values);
            let f = v - v.floor();
            let dist = f.min(1.0 - f);
            if dist <= tol {
                continue;
            }
            let score = match self.config.branching {
                BranchRule::MostFractional => dist,
                BranchRule::PseudoCost => {
                    let pc = self.pseudo[cand.key];
                    if pc.count[0] == 0 || pc.count[1] == 0 {
                        dist
                    } else {
                        let down = pc.sum[0] / pc.count[0] as f64 * f;
                        let up = pc.sum[1] / pc.count[1] as f64 * (1.0 - f);
                        1.0 + down.max(1e-6) * up.max(1e-6)
                    }
                }
            };
            if pick.is_none_or(|(_, _, s)| score > s + 1e-12) {
                pick = Some((cand, v, score));
            }
        }
        pick.map(|(c, v, _)| (c, v))
    }

    fn record(&mut self, branch: Option<(usize, bool, f64)>, parent: f64, obj: f64) {
        if let Some((key, up, frac)) = branch {
            let dist = if up { 1.0 - frac } else { frac };
            if dist > 0.0 && obj.is_finite() {
                let k = usize::from(up);
                self.pseudo[key].sum[k] += (obj - parent).max(0.0) / dist;
                self.pseudo[key].count[k] += 1;
            }
        }
    }

    /// Fixings for the down and up child of `target` at a node with `fixes`.
    /// The up child is `None` when no RASC id is left.
    fn children(&self, target: Target, fixes: &[(usize, f64)]) -> (Fixes, Option<Fixes>) {
        match target {
            Target::Column(c) => (vec![(c, 0.0)], Some(vec![(c, 1.0)])),
            Target::Group(g) => {
                let cols = &self.groups[g];
                let down = cols.iter().map(|&c| (c, 0.0)).collect();
                let mut taken = vec![false; cols.len()];
                for &(c, v) in fixes {
                    if v == 1.0 {
                        if let Some(p) = self.group_pos[c] {
                            if p < taken.len() {
                                taken[p] = true;
                            }
                        }
                    }
                }
                let up = taken.iter().position(|t| !t).map(|p| vec![(cols[p], 1.0)]);
                (down, up)
            }
        }
    }
}

pub(crate) fn branch_and_bound(model: &IlpModel, config: &SolverConfig, start: Instant) -> Result<Outcome> {
    let mut search = Search::new(model, config);
    if let Some(start) = model.greedy_routing() {
        search.offer(&start);
    }
    let mut stack = vec![Node {
        lp: Some(Box::new(Lp::new(model, config.lp_tolerance)?)),
        fixes: Vec::new(),
        parent_obj: f64::NEG_INFINITY,
        branch: None,
    }];
    let mut warm = 0usize;
    let mut nodes = 0usize;
    let mut iterations = 0usize;
    let mut limited = false;

    while let Some(node) = stack.pop() {
        if node.lp.is_some() && !node.fixes.is_empty() {
            warm = warm.saturating_sub(1);
        }
        if search.pruned(node.parent_obj) {
            continue;
        }
        let out_of_time = !config.deterministic_order
            && config.time_limit_s.is_some_and(|t| start.elapsed().as_secs_f64() > t);
        if nodes >= config.node_limit || out_of_time {
            stack.push(node);
            limited = true;
            break;
        }
        nodes += 1;

        let mut lp = match node.lp {
            Some(lp) => lp,
            None => {
                let mut lp = Box::new(Lp::new(model, config.lp_tolerance)?);
                for &(j, v) in &node.fixes {
                    lp.set_bounds(j, v, v);
                }
                lp
            }
        };
        let before = lp.iterations;
        let status = lp.solve()?;
        iterations += lp.iterations - before;
        match status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(Error::Numerical("unbounded relaxation".into()));
            }
            LpStatus::Optimal => {}
        }
        let obj = lp.objective();
        search.record(node.branch, node.parent_obj, obj);
        if search.pruned(obj) {
            continue;
        }
        let values = lp.values();
        search.offer(&values);
        let Some((cand, v)) = search.select(&values) else {
            // Integral on every candidate: the repaired point attains the
            // node bound.
            continue;
        };
        if search.pruned(obj) {
            continue;
        }

        let frac = v - v.floor();
        let up_first = frac >= 0.5;
        let (down, up) = search.children(cand.target, &node.fixes);
        let mut kids: Vec<(bool, Vec<(usize, f64)>)> = vec![(false, down)];
        if let Some(up) = up {
            kids.push((true, up));
        }
        if up_first {
            kids.reverse();
        }
        // Push the far child first so the near one is explored next.
        let mut kids = kids.into_iter();
        let near = kids.next().expect("down child always exists");
        if let Some((dir, extra)) = kids.next() {
            let mut fixes = node.fixes.clone();
            fixes.extend_from_slice(&extra);
            let far_lp = if warm < config.warm_start_limit {
                warm += 1;
                let mut c = lp.clone();
                for &(j, val) in &extra {
                    c.set_bounds(j, val, val);
                }
                Some(c)
            } else {
                None
            };
            stack.push(Node { lp: far_lp, fixes, parent_obj: obj, branch: Some((cand.key, dir, frac)) });
        }
        let (dir, extra) = near;
        let mut fixes = node.fixes;
        fixes.extend_from_slice(&extra);
        for &(j, val) in &extra {
            lp.set_bounds(j, val, val);
        }
        warm += 1;
        stack.push(Node { lp: Some(lp), fixes, parent_obj: obj, branch: Some((cand.key, dir, frac)) });
    }

    let open_bound = stack.iter().map(|n| n.parent_obj).fold(f64::INFINITY, f64::min);
    let (status, bound) = match (&search.incumbent, limited) {
        (Some((best, _)), false) => (SolveStatus::Optimal, *best),
        (None, false) => (SolveStatus::Infeasible, f64::INFINITY),
        (Some((best, _)), true) => (SolveStatus::NodeLimit, open_bound.min(*best)),
        (None, true) => (SolveStatus::NodeLimit, open_bound),
    };
    Ok(Outcome { status, incumbent: search.incumbent.map(|(_, v)| v), bound, nodes, iterations })
}

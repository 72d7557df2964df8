//! Fixed-small-cell (FSC) comparison.
//!
//! An FSC layout is a static set of lampposts chosen once per demand level:
//! it must serve every point where a hotspot could appear and reach the
//! depot through its own members. The smallest such set is found by
//! enumerating lamppost subsets in order of size.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::channel::{evaluate_access_link, ChannelParams, LinkTable};
use crate::error::{Error, Result};
use crate::ilp::{build_p1, VarKind};
use crate::scenario::{distance, NodeRef, Point2D, Scenario, DEPOT};
use crate::solver::{solve, Solution, SolveStatus, SolverConfig};

/// Lamppost sets are bit masks.
const MAX_CANDIDATES: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FscParams {
    /// Radius of the hotspot region around each lamppost, in meters.
    pub vicinity_radius: f64,
    /// Spacing of the sample grid laid over each vicinity disc, in meters.
    pub sample_step: f64,
    /// Points sampled on each disc boundary.
    pub boundary_samples: usize,
    /// Number of simultaneous hotspots, each demanding the planning level,
    /// that the layout must carry wherever they appear. 0 checks coverage
    /// and connectivity only.
    pub design_load: usize,
}

impl Default for FscParams {
    fn default() -> Self {
        Self { vicinity_radius: 15.0, sample_step: 1.0, boundary_samples: 72, design_load: 2 }
    }
}

impl FscParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.vicinity_radius >= 0.0 && self.vicinity_radius.is_finite()) {
            return Err(Error::InvalidParameter("fsc vicinity radius must be a non-negative number".into()));
        }
        if !(self.sample_step > 0.0 && self.sample_step.is_finite()) {
            return Err(Error::InvalidParameter("fsc sample step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FscCount {
    pub gamma: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FscPlan {
    pub gamma: f64,
    /// Lamppost ids, ascending. Never contains the depot.
    pub placements: Vec<usize>,
    /// Farthest distance from a sampled hotspot point to its nearest serving
    /// member of the plan.
    pub coverage_radius: f64,
    /// Count per demand level; holds at least this plan's own level.
    pub counts: Vec<FscCount>,
}

impl FscPlan {
    pub fn count(&self) -> usize {
        self.placements.len()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.placements.binary_search(&site).is_ok()
    }
}

/// Candidate hotspot positions: a grid over each lamppost disc plus its
/// boundary and center, restricted to the open street area.
fn sample_points(scenario: &Scenario, params: &FscParams) -> Vec<Point2D> {
    let r = params.vicinity_radius;
    let step = params.sample_step;
    let n = (r / step).floor() as i64;
    let mut pts = Vec::new();
    for site in scenario.lampposts() {
        let c = scenario.sites[site].position;
        for i in -n..=n {
            for j in -n..=n {
                let (dx, dy) = (i as f64 * step, j as f64 * step);
                if dx * dx + dy * dy <= r * r {
                    pts.push(Point2D::new(c.x + dx, c.y + dy));
                }
            }
        }
        for b in 0..params.boundary_samples {
            let t = std::f64::consts::TAU * b as f64 / params.boundary_samples as f64;
            pts.push(Point2D::new(c.x + r * t.cos(), c.y + r * t.sin()));
        }
    }
    pts.retain(|&p| scenario.inside_area(p) && !scenario.inside_building(p));
    pts
}

/// Serving masks (bit per lamppost index) of the sampled points, reduced to
/// the inclusion-minimal ones. Covering those covers every point.
fn coverage_masks(
    scenario: &Scenario,
    channel: &ChannelParams,
    lampposts: &[usize],
    gamma: f64,
    points: &[Point2D],
) -> Result<Vec<u32>> {
    let mut masks: Vec<u32> = points
        .iter()
        .map(|&p| {
            lampposts.iter().enumerate().fold(0u32, |m, (b, &site)| {
                let link = evaluate_access_link(scenario, channel, p, scenario.sites[site].position);
                if link.s_eff >= gamma {
                    m | 1 << b
                } else {
                    m
                }
            })
        })
        .collect();
    masks.sort_unstable();
    masks.dedup();
    if masks.first() == Some(&0) {
        return Err(Error::Infeasible(format!(
            "some hotspot positions have no lamppost with access efficiency >= {gamma}"
        )));
    }
    let minimal: Vec<u32> =
        masks.iter().copied().filter(|&m| !masks.iter().any(|&o| o != m && o & m == o)).collect();
    Ok(minimal)
}

/// True when every member of `set` reaches the depot over links inside
/// `set` that each support `gamma`.
fn connected(adj: &[u32], depot_adj: u32, set: u32) -> bool {
    let mut reached = depot_adj & set;
    let mut frontier = reached;
    while frontier != 0 {
        let b = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let new = adj[b] & set & !reached;
        reached |= new;
        frontier |= new;
    }
    reached == set
}

/// All multisets of `load` mask indices out of `masks`, as sorted lists.
fn load_patterns(masks: usize, load: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(load);
    fn rec(start: usize, masks: usize, load: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == load {
            out.push(cur.clone());
            return;
        }
        for m in start..masks {
            cur.push(m);
            rec(m, masks, load, cur, out);
            cur.pop();
        }
    }
    if load > 0 {
        rec(0, masks, load, &mut cur, &mut out);
    }
    out
}

/// Maximum number of unit flows from the hotspot slots to the depot. Slot
/// `t` may enter the layout at any lamppost in `slots[t]`; lamppost links
/// are undirected with `cap` units, and `depot_cap` units reach the depot.
fn max_flow(slots: &[u32], cap: &[Vec<u32>], depot_cap: &[u32], set: u32) -> u32 {
    // Nodes: 0 source, 1..=T slots, then lampposts, then the sink.
    let t = slots.len();
    let n = cap.len();
    let sink = 1 + t + n;
    let size = sink + 1;
    let mut res = vec![vec![0i64; size]; size];
    for (k, &mask) in slots.iter().enumerate() {
        res[0][1 + k] = 1;
        for b in 0..n {
            if mask >> b & 1 == 1 {
                res[1 + k][1 + t + b] = 1;
            }
        }
    }
    for a in 0..n {
        if set >> a & 1 == 0 {
            continue;
        }
        res[1 + t + a][sink] = i64::from(depot_cap[a]);
        for b in 0..n {
            if set >> b & 1 == 1 {
                res[1 + t + a][1 + t + b] = i64::from(cap[a][b]);
            }
        }
    }
    let mut flow = 0;
    loop {
        let mut prev = vec![usize::MAX; size];
        prev[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for v in 0..size {
                if prev[v] == usize::MAX && res[u][v] > 0 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[sink] == usize::MAX {
            return flow;
        }
        let mut v = sink;
        while v != 0 {
            let u = prev[v];
            res[u][v] -= 1;
            res[v][u] += 1;
            v = u;
        }
        flow += 1;
    }
}

/// First `size`-subset of `0..n`, in lexicographic order of sorted index
/// lists, accepted by `accept`.
fn first_combination(n: usize, size: usize, accept: &impl Fn(u32) -> bool) -> Option<u32> {
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        let set = idx.iter().fold(0u32, |m, &b| m | 1 << b);
        if accept(set) {
            return Some(set);
        }
        let mut i = size;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if idx[i] < n - size + i {
                break;
            }
        }
        idx[i] += 1;
        for k in i + 1..size {
            idx[k] = idx[k - 1] + 1;
        }
    }
}

/// Smallest lamppost set that serves every candidate hotspot position at
/// access efficiency `gamma`, reaches the depot through itself over links
/// supporting `gamma`, and carries `design_load` hotspots of demand `gamma`
/// wherever they appear. Ties go to the set whose lowest-index members come
/// first.
///
/// With equal demands and one sink, a load is routable exactly when the
/// single-commodity max-flow with link capacities `floor(s_eff / gamma)`
/// reaches the load size, so each load is one max-flow check.
pub fn plan_fsc(
    scenario: &Scenario,
    links: &LinkTable,
    channel: &ChannelParams,
    gamma: f64,
    params: &FscParams,
) -> Result<FscPlan> {
    params.validate()?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let lampposts: Vec<usize> = scenario.lampposts().collect();
    if lampposts.len() > MAX_CANDIDATES {
        return Err(Error::InvalidParameter(format!(
            "fsc enumeration supports at most {MAX_CANDIDATES} lampposts, got {}",
            lampposts.len()
        )));
    }
    let points = sample_points(scenario, params);
    let masks = coverage_masks(scenario, channel, &lampposts, gamma, &points)?;

    let supports = |a: usize, b: usize| links.s_eff(NodeRef::Site(a), NodeRef::Site(b)) >= gamma;
    let adj: Vec<u32> = lampposts
        .iter()
        .map(|&a| {
            lampposts
                .iter()
                .enumerate()
                .fold(0u32, |m, (b, &s)| if s != a && supports(a, s) { m | 1 << b } else { m })
        })
        .collect();
    let depot_adj =
        lampposts.iter().enumerate().fold(0u32, |m, (b, &s)| if supports(DEPOT, s) { m | 1 << b } else { m });

    let n = lampposts.len();
    // Link capacities in whole flows at this demand level.
    let units = |a: usize, b: usize| (links.s_eff(NodeRef::Site(a), NodeRef::Site(b)) / gamma).floor() as u32;
    let cap: Vec<Vec<u32>> = lampposts
        .iter()
        .map(|&a| lampposts.iter().map(|&b| if a == b { 0 } else { units(a, b) }).collect())
        .collect();
    let depot_cap: Vec<u32> = lampposts.iter().map(|&a| units(a, DEPOT)).collect();
    let loads = load_patterns(masks.len(), params.design_load);
    // Load patterns that sank an earlier candidate are retried first.
    let failing = std::cell::RefCell::new(Vec::<usize>::new());
    let carries = |set: u32, pattern: &[usize]| {
        let slots: Vec<u32> = pattern.iter().map(|&m| masks[m] & set).collect();
        max_flow(&slots, &cap, &depot_cap, set) >= slots.len() as u32
    };
    let feasible = |set: u32| {
        if !(masks.iter().all(|&m| m & set != 0) && connected(&adj, depot_adj, set)) {
            return false;
        }
        if failing.borrow().iter().any(|&p| !carries(set, &loads[p])) {
            return false;
        }
        match loads.iter().position(|p| !carries(set, p)) {
            Some(p) => {
                failing.borrow_mut().push(p);
                false
            }
            None => true,
        }
    };
    let best = (1..=n).find_map(|size| first_combination(n, size, &feasible));
    let set =
        best.ok_or_else(|| Error::Infeasible(format!("no lamppost set covers the area at gamma {gamma}")))?;
    let placements: Vec<usize> = (0..n).filter(|b| set >> b & 1 == 1).map(|b| lampposts[b]).collect();

    let coverage_radius = points
        .iter()
        .map(|&p| {
            placements
                .iter()
                .map(|&s| scenario.sites[s].position)
                .filter(|&q| evaluate_access_link(scenario, channel, p, q).s_eff >= gamma)
                .map(|q| distance(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);

    Ok(FscPlan {
        gamma,
        counts: vec![FscCount { gamma, count: placements.len() }],
        placements,
        coverage_radius,
    })
}

/// Plans one layout per demand level and returns the count table. Levels
/// that no layout can serve are skipped.
pub fn fsc_count_table(
    scenario: &Scenario,
    links: &LinkTable,
    channel: &ChannelParams,
    gammas: &[f64],
    params: &FscParams,
) -> Result<Vec<FscCount>> {
    let mut out = Vec::new();
    for &gamma in gammas {
        match plan_fsc(scenario, links, channel, gamma, params) {
            Ok(plan) => out.push(FscCount { gamma, count: plan.count() }),
            Err(Error::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn write_count_csv<W: Write>(counts: &[FscCount], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["gamma", "fsc_count"])?;
    for c in counts {
        w.write_record([format!("{}", c.gamma), c.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Routing of one hotspot realization over a fixed layout.
#[derive(Clone, Debug)]
pub struct FscEvaluation {
    pub feasible: bool,
    /// Flows with no route to the depot over the layout even on their own.
    pub unroutable_flows: Vec<usize>,
    /// Members that carry traffic; the others sit idle for coverage.
    pub active: Vec<usize>,
    /// `None` when there are no hotspots to route.
    pub solution: Option<Solution>,
}

/// Routes the hotspots of `scenario` over `plan` with the P1 machinery, with
/// relays outside the plan switched off.
pub fn evaluate_fsc(
    plan: &FscPlan,
    scenario: &Scenario,
    links: &LinkTable,
    demands: &[f64],
    config: &SolverConfig,
) -> Result<FscEvaluation> {
    if scenario.num_hotspots() == 0 {
        return Ok(FscEvaluation {
            feasible: true,
            unroutable_flows: Vec::new(),
            active: Vec::new(),
            solution: None,
        });
    }
    let mut model = build_p1(scenario, links, demands, plan.count().max(1))?;
    let cols: Vec<(usize, VarKind)> = model.vars().map(|v| (v.column, v.kind)).collect();
    for (c, kind) in cols {
        let site = match kind {
            VarKind::X { site, .. } => site,
            VarKind::Y { from: NodeRef::Site(site), .. } => site,
            _ => continue,
        };
        if !plan.contains(site) {
            model.fix_bounds(c, 0.0, 0.0);
        }
    }
    let solution = solve(&model, config)?;
    let feasible = solution.status == SolveStatus::Optimal;
    let unroutable_flows =
        (0..scenario.num_hotspots()).filter(|&f| !routable(plan, scenario, links, f, demands[f])).collect();
    let active = solution.placements.keys().copied().collect();
    Ok(FscEvaluation { feasible, unroutable_flows, active, solution: Some(solution) })
}

/// Single-flow reachability over plan members on links that fit `demand`.
fn routable(plan: &FscPlan, scenario: &Scenario, links: &LinkTable, flow: usize, demand: f64) -> bool {
    let fits = |a: NodeRef, b: NodeRef| links.s_eff(a, b) >= demand;
    let mut seen = vec![false; scenario.num_sites()];
    let mut stack: Vec<usize> =
        plan.placements.iter().copied().filter(|&s| fits(NodeRef::Hotspot(flow), NodeRef::Site(s))).collect();
    while let Some(s) = stack.pop() {
        if std::mem::replace(&mut seen[s], true) {
            continue;
        }
        if fits(NodeRef::Site(s), NodeRef::Site(DEPOT)) {
            return true;
        }
        stack.extend(
            plan.placements.iter().copied().filter(|&t| !seen[t] && fits(NodeRef::Site(s), NodeRef::Site(t))),
        );
    }
    false
}

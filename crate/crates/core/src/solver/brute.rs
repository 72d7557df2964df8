//! Exhaustive P1 oracle: enumerate simple paths per flow, try every
//! combination, keep the cheapest one that respects link capacities.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Solution, SolveStatus, SolverStats};
use crate::channel::LinkTable;
use crate::error::{Error, Result};
use crate::ilp::{build_p1, VarKind};
use crate::scenario::{NodeRef, Scenario, DEPOT};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceConfig {
    /// Maximum links on one path, hotspot arc included.
    pub hop_cap: usize,
    pub max_sites: usize,
    pub max_flows: usize,
    /// Upper limit on enumerated path combinations.
    pub max_combinations: u64,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        Self { hop_cap: 6, max_sites: 10, max_flows: 2, max_combinations: 20_000_000 }
    }
}

fn paths_for(
    scenario: &Scenario,
    links: &LinkTable,
    flow: usize,
    hop_cap: usize,
    limit: u64,
) -> Result<Vec<Vec<NodeRef>>> {
    fn extend(
        links: &LinkTable,
        lampposts: &[usize],
        path: &mut Vec<NodeRef>,
        hop_cap: usize,
        out: &mut Vec<Vec<NodeRef>>,
        limit: u64,
    ) -> Result<()> {
        let last = *path.last().unwrap();
        let hops = path.len() - 1;
        if hops >= hop_cap {
            return Ok(());
        }
        if hops >= 1 && links.usable(last, NodeRef::Site(DEPOT)) {
            path.push(NodeRef::Site(DEPOT));
            out.push(path.clone());
            path.pop();
            if out.len() as u64 > limit {
                return Err(Error::EnumerationBudget(format!("more than {limit} paths")));
            }
        }
        for &l in lampposts {
            let n = NodeRef::Site(l);
            if !path.contains(&n) && links.usable(last, n) {
                path.push(n);
                extend(links, lampposts, path, hop_cap, out, limit)?;
                path.pop();
            }
        }
        Ok(())
    }
    let lampposts: Vec<usize> = scenario.lampposts().collect();
    let mut out = Vec::new();
    let mut path = vec![NodeRef::Hotspot(flow)];
    extend(links, &lampposts, &mut path, hop_cap, &mut out, limit)?;
    Ok(out)
}

fn edge(a: NodeRef, b: NodeRef) -> (NodeRef, NodeRef) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Exact P1 optimum by enumeration. The returned assignment indexes the
/// columns of `build_p1` on the same inputs, with RASC ids handed out in
/// ascending site order.
pub fn brute_force(
    scenario: &Scenario,
    links: &LinkTable,
    demands: &[f64],
    n_rascs: usize,
    config: &BruteForceConfig,
) -> Result<Solution> {
    let model = build_p1(scenario, links, demands, n_rascs)?;
    if scenario.num_sites() > config.max_sites || demands.len() > config.max_flows {
        return Err(Error::EnumerationBudget(format!(
            "{} sites and {} flows exceed the limits of {} and {}",
            scenario.num_sites(),
            demands.len(),
            config.max_sites,
            config.max_flows
        )));
    }
    let mut per_flow = Vec::with_capacity(demands.len());
    let mut combos: u64 = 1;
    for f in 0..demands.len() {
        let paths = paths_for(scenario, links, f, config.hop_cap, config.max_combinations)?;
        combos = combos.saturating_mul(paths.len() as u64);
        per_flow.push(paths);
    }
    if combos > config.max_combinations {
        return Err(Error::EnumerationBudget(format!("{combos} path combinations")));
    }

    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut pick = vec![0usize; demands.len()];
    if combos > 0 {
        'outer: loop {
            let mut load: BTreeMap<(NodeRef, NodeRef), f64> = BTreeMap::new();
            let mut relays: BTreeSet<usize> = BTreeSet::new();
            let mut arcs = 0;
            for (f, &p) in pick.iter().enumerate() {
                let path = &per_flow[f][p];
                arcs += path.len() - 1;
                for pair in path.windows(2) {
                    *load.entry(edge(pair[0], pair[1])).or_default() += demands[f];
                }
                for n in &path[1..path.len() - 1] {
                    if let NodeRef::Site(s) = n {
                        relays.insert(*s);
                    }
                }
            }
            let fits = load.iter().all(|(&(a, b), &l)| l <= links.s_eff(a, b) + 1e-9);
            if fits && relays.len() <= n_rascs {
                let obj = arcs + relays.len();
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, pick.clone()));
                }
            }
            // Odometer increment.
            for f in (0..pick.len()).rev() {
                pick[f] += 1;
                if pick[f] < per_flow[f].len() {
                    continue 'outer;
                }
                pick[f] = 0;
            }
            break;
        }
    }

    let stats = SolverStats::default();
    let Some((_, pick)) = best else {
        return Ok(Solution::empty(&model, SolveStatus::Infeasible, stats));
    };
    let mut values = vec![0.0; model.num_vars()];
    let mut relays = BTreeSet::new();
    for (f, &p) in pick.iter().enumerate() {
        let path = &per_flow[f][p];
        for pair in path.windows(2) {
            let col = model
                .column(VarKind::Y { from: pair[0], to: pair[1], flow: f })
                .expect("enumerated arcs are model columns");
            values[col] = 1.0;
        }
        for n in &path[1..path.len() - 1] {
            if let NodeRef::Site(s) = n {
                relays.insert(*s);
            }
        }
    }
    for (k, s) in relays.into_iter().enumerate() {
        let col = model.column(VarKind::X { site: s, rasc: k }).expect("lamppost column");
        values[col] = 1.0;
    }
    let objective = model.objective_value(&values);
    Ok(Solution::from_assignment(&model, SolveStatus::Optimal, values, objective, stats))
}

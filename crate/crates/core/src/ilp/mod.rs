//! Solver-independent assembly of the P1 (hops + RASCs) and P2 (hops + RASCs
//! + energy) integer programs.
//!
//! Columns are laid out as all `y` arcs (flow-major), then all `x` placements,
//! then (P2 only) the continuous energy columns. Arcs exist only where a link
//! is usable: hotspots feed lampposts of their own flow, lampposts feed
//! lampposts or the depot, and nothing leaves the depot.

mod lp_format;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::channel::LinkTable;
use crate::energy::{comm_energy, grasp_energy, travel_energy, EnergyBreakdown, EnergyParams};
use crate::error::{Error, Result};
use crate::scenario::{distance, NodeRef, Scenario, DEPOT};

pub use lp_format::write_lp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    P1,
    P2,
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Problem::P1 => "p1",
            Problem::P2 => "p2",
        })
    }
}

/// Structured identity of a column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    /// Flow `flow` uses the arc `from -> to`.
    Y { from: NodeRef, to: NodeRef, flow: usize },
    /// RASC `rasc` perches on site `site`.
    X { site: usize, rasc: usize },
    /// Total energy of RASC `rasc` at site `site`, in joules.
    E { site: usize, rasc: usize },
}

impl VarKind {
    pub fn name(&self) -> String {
        match self {
            VarKind::Y { from, to, flow } => format!("y_{from}_{to}_{flow}"),
            VarKind::X { site, rasc } => format!("x_{site}_{rasc}"),
            VarKind::E { site, rasc } => format!("e_{site}_{rasc}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarIndex {
    pub kind: VarKind,
    pub column: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrality {
    Binary,
    Continuous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(&self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(c, a)| a * values[c]).sum()
    }
}

/// Energy constants baked into a P2 model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    /// Flight energy from the depot, indexed by site.
    pub fly: Vec<f64>,
    pub grasp: f64,
    /// Per forwarded flow-link.
    pub comm: f64,
    /// Objective weight per joule.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IlpModel {
    pub problem: Problem,
    pub num_sites: usize,
    pub num_hotspots: usize,
    pub n_rascs: usize,
    pub demands: Vec<f64>,
    vars: Vec<VarKind>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    integrality: Vec<Integrality>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    energy: Option<EnergyTerms>,
    #[serde(skip)]
    lookup: HashMap<VarKind, usize>,
}

impl IlpModel {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarIndex> + '_ {
        self.vars.iter().enumerate().map(|(column, &kind)| VarIndex { kind, column })
    }

    pub fn kind(&self, column: usize) -> VarKind {
        self.vars[column]
    }

    pub fn column(&self, kind: VarKind) -> Option<usize> {
        self.lookup.get(&kind).copied()
    }

    pub fn column_by_name(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|k| k.name() == name)
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn integrality(&self) -> &[Integrality] {
        &self.integrality
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    pub fn energy_terms(&self) -> Option<&EnergyTerms> {
        self.energy.as_ref()
    }

    /// Tightens the bounds of one column.
    pub fn fix_bounds(&mut self, column: usize, lower: f64, upper: f64) {
        self.lower[column] = lower;
        self.upper[column] = upper;
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, v)| c * v).sum()
    }

    /// True when every integer-feasible point has an integral objective.
    pub fn has_integral_objective(&self) -> bool {
        self.objective.iter().zip(&self.integrality).all(|(&c, integ)| match integ {
            Integrality::Binary => c.fract() == 0.0,
            Integrality::Continuous => c == 0.0,
        })
    }

    pub fn count(&self, pred: impl Fn(&VarKind) -> bool) -> usize {
        self.vars.iter().filter(|k| pred(k)).count()
    }

    /// For a P2 model: the same program with the energy columns substituted
    /// out. On integer points the energy of site `i` is
    /// `(E_fly(d_0i) + E_grasp) * sum_k x_ik + E_comm * sum_jf y_ijf`, so the
    /// weighted energy folds into the `x` and `y` costs exactly. Energy
    /// columns and rows come last, so the reduced model's columns are a
    /// prefix of this model's.
    pub fn energy_presolved(&self) -> Option<IlpModel> {
        let terms = self.energy.as_ref()?;
        let keep = self.vars.iter().position(|k| matches!(k, VarKind::E { .. })).unwrap_or(self.vars.len());
        let mut objective = self.objective[..keep].to_vec();
        for (c, kind) in self.vars[..keep].iter().enumerate() {
            match *kind {
                VarKind::X { site, .. } => {
                    objective[c] += terms.weight * (terms.fly[site] + terms.grasp);
                }
                VarKind::Y { from: NodeRef::Site(_), .. } => objective[c] += terms.weight * terms.comm,
                _ => {}
            }
        }
        let constraints =
            self.constraints.iter().filter(|r| r.coeffs.iter().all(|&(c, _)| c < keep)).cloned().collect();
        let mut m = IlpModel {
            problem: self.problem,
            num_sites: self.num_sites,
            num_hotspots: self.num_hotspots,
            n_rascs: self.n_rascs,
            demands: self.demands.clone(),
            vars: self.vars[..keep].to_vec(),
            objective,
            constraints,
            integrality: self.integrality[..keep].to_vec(),
            lower: self.lower[..keep].to_vec(),
            upper: self.upper[..keep].to_vec(),
            energy: None,
            lookup: HashMap::new(),
        };
        m.rebuild_lookup();
        Some(m)
    }

    /// Routes flows one at a time on fewest-hop paths that fit the remaining
    /// link capacity, trying every flow order (up to 6 flows, else only the
    /// given one). Returns the cheapest polished point that validates.
    pub fn greedy_routing(&self) -> Option<Vec<f64>> {
        if self.num_hotspots == 0 {
            return None;
        }
        // Capacity rows: undirected link -> (rhs, coefficient per column).
        let mut link_of: HashMap<usize, usize> = HashMap::new();
        let mut residual_init: Vec<f64> = Vec::new();
        for row in &self.constraints {
            if row.name.starts_with("cap_") && row.sense == Sense::Le {
                let id = residual_init.len();
                residual_init.push(row.rhs);
                for &(c, _) in &row.coeffs {
                    link_of.insert(c, id);
                }
            }
        }
        let mut out: HashMap<(usize, NodeRef), Vec<(usize, NodeRef)>> = HashMap::new();
        for (c, kind) in self.vars.iter().enumerate() {
            if let VarKind::Y { from, to, flow } = *kind {
                if self.upper[c] > 0.5 {
                    out.entry((flow, from)).or_default().push((c, to));
                }
            }
        }
        let mut orders: Vec<Vec<usize>> = vec![(0..self.num_hotspots).collect()];
        if self.num_hotspots <= 6 {
            orders = permutations(self.num_hotspots);
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        'order: for order in orders {
            let mut residual = residual_init.clone();
            let mut values = vec![0.0; self.vars.len()];
            for &f in &order {
                let demand = self.demands[f];
                let start = NodeRef::Hotspot(f);
                let mut prev: HashMap<NodeRef, (usize, NodeRef)> = HashMap::new();
                let mut queue = std::collections::VecDeque::from([start]);
                let mut seen = std::collections::HashSet::from([start]);
                while let Some(n) = queue.pop_front() {
                    if n == NodeRef::Site(DEPOT) {
                        break;
                    }
                    for &(c, to) in out.get(&(f, n)).map(Vec::as_slice).unwrap_or(&[]) {
                        let fits = link_of.get(&c).is_none_or(|&l| residual[l] + 1e-9 >= demand);
                        if fits && seen.insert(to) {
                            prev.insert(to, (c, n));
                            queue.push_back(to);
                        }
                    }
                }
                let mut n = NodeRef::Site(DEPOT);
                if !prev.contains_key(&n) {
                    continue 'order;
                }
                while n != start {
                    let (c, p) = prev[&n];
                    values[c] = 1.0;
                    if let Some(&l) = link_of.get(&c) {
                        residual[l] -= demand;
                    }
                    n = p;
                }
            }
            self.polish(&mut values);
            let report = validate_solution(self, &values);
            if report.passed() && best.as_ref().is_none_or(|(b, _)| report.objective < *b) {
                best = Some((report.objective, values));
            }
        }
        best.map(|(_, v)| v)
    }

    /// Placement columns grouped by site, each group indexed by RASC id.
    /// RASC ids are interchangeable: every row and cost treats them alike.
    pub fn placement_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        if self.num_hotspots == 0 {
            return Vec::new();
        }
        for (c, kind) in self.vars.iter().enumerate() {
            if let VarKind::X { site, rasc } = *kind {
                groups.entry(site).or_default().push((rasc, c));
            }
        }
        groups
            .into_values()
            .map(|mut g| {
                g.sort();
                g.into_iter().map(|(_, c)| c).collect()
            })
            .collect()
    }

    /// Rounds binaries, gives every forwarding lamppost exactly one RASC (and
    /// idle ones none), then recomputes energy columns from the placements.
    /// Feasible integral points keep their arcs and never get more expensive.
    pub fn polish(&self, values: &mut [f64]) {
        for (v, integ) in values.iter_mut().zip(&self.integrality) {
            if *integ == Integrality::Binary {
                *v = v.round().clamp(0.0, 1.0);
            }
        }
        self.repair_placements(values);
        if self.energy.is_some() {
            for (col, kind) in self.vars.iter().enumerate() {
                if let VarKind::E { site, rasc } = *kind {
                    values[col] = self.expected_energy(values, site, rasc);
                }
            }
        }
    }

    fn repair_placements(&self, values: &mut [f64]) {
        if self.num_hotspots == 0 {
            return;
        }
        let mut needs = vec![false; self.num_sites];
        let mut held: Vec<Vec<usize>> = vec![Vec::new(); self.num_sites];
        for (c, kind) in self.vars.iter().enumerate() {
            match *kind {
                VarKind::Y { from: NodeRef::Site(i), .. } if values[c] > 0.5 => needs[i] = true,
                VarKind::X { site, rasc } if values[c] > 0.5 => held[site].push(rasc),
                _ => {}
            }
        }
        let mut used = vec![false; self.n_rascs];
        let mut keep: Vec<Option<usize>> = vec![None; self.num_sites];
        for i in 0..self.num_sites {
            if needs[i] {
                if let Some(&k) = held[i].iter().find(|&&k| !used[k]) {
                    keep[i] = Some(k);
                    used[k] = true;
                }
            }
        }
        for i in 0..self.num_sites {
            if needs[i] && keep[i].is_none() {
                if let Some(k) = (0..self.n_rascs).find(|&k| !used[k]) {
                    keep[i] = Some(k);
                    used[k] = true;
                }
            }
        }
        for (c, kind) in self.vars.iter().enumerate() {
            if let VarKind::X { site, rasc } = *kind {
                values[c] = if keep[site] == Some(rasc) { 1.0 } else { 0.0 };
            }
        }
    }

    fn forwarded_flows(&self, values: &[f64], site: usize) -> f64 {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, k)| matches!(k, VarKind::Y { from: NodeRef::Site(i), .. } if *i == site))
            .map(|(c, _)| values[c])
            .sum()
    }

    fn expected_energy(&self, values: &[f64], site: usize, rasc: usize) -> f64 {
        let Some(terms) = &self.energy else {
            return 0.0;
        };
        let x = self.column(VarKind::X { site, rasc }).map_or(0.0, |c| values[c]);
        x * (terms.fly[site] + terms.grasp + terms.comm * self.forwarded_flows(values, site))
    }

    /// Ordered node lists per flow, from the hotspot to the depot, following
    /// arcs valued at 1. A flow whose arcs do not reach the depot yields the
    /// partial walk.
    pub fn extract_paths(&self, values: &[f64]) -> Vec<Vec<NodeRef>> {
        let mut next: Vec<HashMap<NodeRef, NodeRef>> = vec![HashMap::new(); self.num_hotspots];
        for (col, kind) in self.vars.iter().enumerate() {
            if let VarKind::Y { from, to, flow } = *kind {
                if values[col] > 0.5 {
                    next[flow].entry(from).or_insert(to);
                }
            }
        }
        next.iter()
            .enumerate()
            .map(|(f, succ)| {
                let mut path = vec![NodeRef::Hotspot(f)];
                let mut cur = NodeRef::Hotspot(f);
                while let Some(&n) = succ.get(&cur) {
                    if path.contains(&n) {
                        break;
                    }
                    path.push(n);
                    if n == NodeRef::Site(DEPOT) {
                        break;
                    }
                    cur = n;
                }
                path
            })
            .collect()
    }

    /// Site -> RASC id for every placement valued at 1.
    pub fn placements(&self, values: &[f64]) -> BTreeMap<usize, usize> {
        self.vars
            .iter()
            .enumerate()
            .filter_map(|(col, kind)| match *kind {
                VarKind::X { site, rasc } if values[col] > 0.5 => Some((site, rasc)),
                _ => None,
            })
            .collect()
    }

    /// Energy breakdown of each placed RASC (P2 models only).
    pub fn energies(&self, values: &[f64]) -> BTreeMap<usize, EnergyBreakdown> {
        let Some(terms) = &self.energy else {
            return BTreeMap::new();
        };
        self.placements(values)
            .into_keys()
            .map(|site| {
                let flows = self.forwarded_flows(values, site);
                let e_comm = terms.comm * flows;
                let e = EnergyBreakdown {
                    e_fly: terms.fly[site],
                    e_grasp: terms.grasp,
                    e_comm,
                    e_total: terms.fly[site] + terms.grasp + e_comm,
                };
                (site, e)
            })
            .collect()
    }

    fn rebuild_lookup(&mut self) {
        self.lookup = self.vars.iter().enumerate().map(|(c, &k)| (k, c)).collect();
    }

    fn push_var(&mut self, kind: VarKind, cost: f64, integ: Integrality, upper: f64) -> usize {
        let col = self.vars.len();
        self.vars.push(kind);
        self.objective.push(cost);
        self.integrality.push(integ);
        self.lower.push(0.0);
        self.upper.push(upper);
        self.lookup.insert(kind, col);
        col
    }
}

impl IlpModel {
    /// Generic model with one placeholder column kind per column; used to
    /// exercise the solver on hand-written programs.
    #[doc(hidden)]
    pub fn from_parts(
        objective: Vec<f64>,
        constraints: Vec<Constraint>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        integrality: Vec<Integrality>,
    ) -> Self {
        let vars = (0..objective.len()).map(|j| VarKind::X { site: j, rasc: 0 }).collect();
        let mut m = IlpModel {
            problem: Problem::P1,
            num_sites: 0,
            num_hotspots: 0,
            n_rascs: 0,
            demands: Vec::new(),
            vars,
            objective,
            constraints,
            integrality,
            lower,
            upper,
            energy: None,
            lookup: HashMap::new(),
        };
        m.rebuild_lookup();
        m
    }

    /// Deserializes a model and restores its column lookup.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut m: IlpModel = serde_json::from_str(text)?;
        m.rebuild_lookup();
        Ok(m)
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn check_inputs(scenario: &Scenario, links: &LinkTable, demands: &[f64], n_rascs: usize) -> Result<()> {
    if demands.is_empty() {
        return Err(Error::EmptyDemands);
    }
    if demands.len() != scenario.num_hotspots() {
        return Err(Error::InvalidParameter(format!(
            "{} demands for {} hotspots",
            demands.len(),
            scenario.num_hotspots()
        )));
    }
    if let Some(d) = demands.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidParameter(format!("demand {d} is not positive")));
    }
    if n_rascs == 0 {
        return Err(Error::InvalidParameter("need at least one RASC".into()));
    }
    if links.num_sites() != scenario.num_sites() || links.num_hotspots() != scenario.num_hotspots() {
        return Err(Error::InvalidParameter("link table does not match the scenario".into()));
    }
    Ok(())
}

/// Builds P1: minimize total arcs used plus RASCs placed.
pub fn build_p1(scenario: &Scenario, links: &LinkTable, demands: &[f64], n_rascs: usize) -> Result<IlpModel> {
    check_inputs(scenario, links, demands, n_rascs)?;
    let lampposts: Vec<usize> = scenario.lampposts().collect();
    let mut m = IlpModel {
        problem: Problem::P1,
        num_sites: scenario.num_sites(),
        num_hotspots: scenario.num_hotspots(),
        n_rascs,
        demands: demands.to_vec(),
        vars: Vec::new(),
        objective: Vec::new(),
        constraints: Vec::new(),
        integrality: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
        energy: None,
        lookup: HashMap::new(),
    };

    // Arc columns, flow-major.
    let mut arcs: Vec<(NodeRef, NodeRef)> = Vec::new();
    for &i in &lampposts {
        for j in 0..scenario.num_sites() {
            if j != i && links.usable(NodeRef::Site(i), NodeRef::Site(j)) {
                arcs.push((NodeRef::Site(i), NodeRef::Site(j)));
            }
        }
    }
    for f in 0..demands.len() {
        let h = NodeRef::Hotspot(f);
        for &j in &lampposts {
            if links.usable(h, NodeRef::Site(j)) {
                m.push_var(
                    VarKind::Y { from: h, to: NodeRef::Site(j), flow: f },
                    1.0,
                    Integrality::Binary,
                    1.0,
                );
            }
        }
        for &(from, to) in &arcs {
            m.push_var(VarKind::Y { from, to, flow: f }, 1.0, Integrality::Binary, 1.0);
        }
    }
    for &i in &lampposts {
        for k in 0..n_rascs {
            m.push_var(VarKind::X { site: i, rasc: k }, 1.0, Integrality::Binary, 1.0);
        }
    }

    let y_cols: Vec<(usize, NodeRef, NodeRef, usize)> = m
        .vars
        .iter()
        .enumerate()
        .filter_map(|(c, k)| match *k {
            VarKind::Y { from, to, flow } => Some((c, from, to, flow)),
            _ => None,
        })
        .collect();

    // Each flow leaves its hotspot on exactly one arc.
    for f in 0..demands.len() {
        let coeffs = y_cols
            .iter()
            .filter(|(_, from, _, flow)| *flow == f && *from == NodeRef::Hotspot(f))
            .map(|&(c, ..)| (c, 1.0))
            .collect();
        m.constraints.push(Constraint { name: format!("src_{f}"), coeffs, sense: Sense::Eq, rhs: 1.0 });
    }
    // Each flow ends at the depot.
    for f in 0..demands.len() {
        let coeffs = y_cols
            .iter()
            .filter(|(_, _, to, flow)| *flow == f && *to == NodeRef::Site(DEPOT))
            .map(|&(c, ..)| (c, 1.0))
            .collect();
        m.constraints.push(Constraint { name: format!("sink_{f}"), coeffs, sense: Sense::Eq, rhs: 1.0 });
    }
    // Conservation at every lamppost; inflow includes the hotspot arc.
    for f in 0..demands.len() {
        for &i in &lampposts {
            let node = NodeRef::Site(i);
            let mut coeffs = Vec::new();
            for &(c, from, to, flow) in &y_cols {
                if flow != f {
                    continue;
                }
                if from == node {
                    coeffs.push((c, 1.0));
                } else if to == node {
                    coeffs.push((c, -1.0));
                }
            }
            if coeffs.is_empty() {
                continue;
            }
            coeffs.sort_by_key(|&(c, _)| c);
            m.constraints.push(Constraint {
                name: format!("cons_{i}_{f}"),
                coeffs,
                sense: Sense::Eq,
                rhs: 0.0,
            });
        }
    }
    // At most one RASC per lamppost.
    for &i in &lampposts {
        let coeffs = (0..n_rascs).map(|k| (m.lookup[&VarKind::X { site: i, rasc: k }], 1.0)).collect();
        m.constraints.push(Constraint { name: format!("one_rasc_{i}"), coeffs, sense: Sense::Le, rhs: 1.0 });
    }
    // Each RASC perches at most once.
    for k in 0..n_rascs {
        let coeffs = lampposts.iter().map(|&i| (m.lookup[&VarKind::X { site: i, rasc: k }], 1.0)).collect();
        m.constraints.push(Constraint { name: format!("rasc_once_{k}"), coeffs, sense: Sense::Le, rhs: 1.0 });
    }
    // Any arc leaving a lamppost needs a RASC there.
    for &(c, from, to, f) in &y_cols {
        if let NodeRef::Site(i) = from {
            let mut coeffs: Vec<(usize, f64)> =
                (0..n_rascs).map(|k| (m.lookup[&VarKind::X { site: i, rasc: k }], 1.0)).collect();
            coeffs.insert(0, (c, -1.0));
            m.constraints.push(Constraint {
                name: format!("act_{i}_{to}_{f}"),
                coeffs,
                sense: Sense::Ge,
                rhs: 0.0,
            });
        }
    }
    // Shared capacity of each undirected link, in bps/Hz.
    let mut by_link: BTreeMap<(NodeRef, NodeRef), Vec<(usize, f64)>> = BTreeMap::new();
    for &(c, from, to, f) in &y_cols {
        let key = if from <= to { (from, to) } else { (to, from) };
        by_link.entry(key).or_default().push((c, demands[f]));
    }
    for ((a, b), mut coeffs) in by_link {
        coeffs.sort_by_key(|&(c, _)| c);
        m.constraints.push(Constraint {
            name: format!("cap_{a}_{b}"),
            coeffs,
            sense: Sense::Le,
            rhs: links.s_eff(a, b),
        });
    }
    Ok(m)
}

/// Builds P2: P1 plus per-RASC energy columns charged to the objective with
/// weight `energy_weight` per joule.
///
/// The energy link for RASC `k` at site `i` is the big-M form of
/// `E_ik = x_ik * (E_fly(d_0i) + E_grasp + E_comm * sum_jf y_ijf)`, which
/// minimization tightens to equality for placed RASCs and to zero otherwise.
pub fn build_p2(
    scenario: &Scenario,
    links: &LinkTable,
    demands: &[f64],
    n_rascs: usize,
    energy: &EnergyParams,
    energy_weight: f64,
) -> Result<IlpModel> {
    energy.validate()?;
    if !(energy_weight >= 0.0 && energy_weight.is_finite()) {
        return Err(Error::InvalidParameter("energy weight must be non-negative".into()));
    }
    let mut m = build_p1(scenario, links, demands, n_rascs)?;
    m.problem = Problem::P2;

    let depot = scenario.depot().position;
    let fly: Vec<f64> =
        scenario.sites.iter().map(|s| travel_energy(energy, distance(depot, s.position))).collect();
    let grasp = grasp_energy(energy);
    let comm = comm_energy(energy);

    let lampposts: Vec<usize> = scenario.lampposts().collect();
    let mut out_arcs: HashMap<usize, Vec<usize>> = HashMap::new();
    for (c, k) in m.vars.iter().enumerate() {
        if let VarKind::Y { from: NodeRef::Site(i), .. } = k {
            out_arcs.entry(*i).or_default().push(c);
        }
    }
    for &i in &lampposts {
        for k in 0..n_rascs {
            let e = m.push_var(
                VarKind::E { site: i, rasc: k },
                energy_weight,
                Integrality::Continuous,
                f64::INFINITY,
            );
            let x = m.lookup[&VarKind::X { site: i, rasc: k }];
            let arcs = out_arcs.get(&i).map(Vec::as_slice).unwrap_or(&[]);
            let big_m = comm * arcs.len() as f64;
            let mut coeffs = vec![(x, -(fly[i] + grasp + big_m))];
            coeffs.extend(arcs.iter().map(|&c| (c, -comm)));
            coeffs.push((e, 1.0));
            coeffs.sort_by_key(|&(c, _)| c);
            m.constraints.push(Constraint {
                name: format!("energy_{i}_{k}"),
                coeffs,
                sense: Sense::Ge,
                rhs: -big_m,
            });
            m.constraints.push(Constraint {
                name: format!("energy_base_{i}_{k}"),
                coeffs: vec![(x, -(fly[i] + grasp)), (e, 1.0)],
                sense: Sense::Ge,
                rhs: 0.0,
            });
        }
        // Valid for every integer point (a site forwarding anything holds
        // exactly one RASC) and keeps the relaxation from splitting x across
        // RASC ids to dodge the big-M term.
        let arcs = out_arcs.get(&i).map(Vec::as_slice).unwrap_or(&[]);
        let mut coeffs: Vec<(usize, f64)> = (0..n_rascs)
            .flat_map(|k| {
                [
                    (m.lookup[&VarKind::X { site: i, rasc: k }], -(fly[i] + grasp)),
                    (m.lookup[&VarKind::E { site: i, rasc: k }], 1.0),
                ]
            })
            .collect();
        coeffs.extend(arcs.iter().map(|&c| (c, -comm)));
        coeffs.sort_by_key(|&(c, _)| c);
        m.constraints.push(Constraint {
            name: format!("energy_site_{i}"),
            coeffs,
            sense: Sense::Ge,
            rhs: 0.0,
        });
    }
    m.energy = Some(EnergyTerms { fly, grasp, comm, weight: energy_weight });
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ViolationKind {
    Row,
    Bound,
    Integrality,
    EnergyLink,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub name: String,
    pub kind: ViolationKind,
    /// Observed value (row activity or variable value).
    pub value: f64,
    /// The bound it should respect.
    pub target: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} violation in {}: value {} vs {}", self.kind, self.name, self.value, self.target)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub objective: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Absolute tolerance used by [`validate_solution`], scaled by `max(1, |rhs|)`.
pub const VALIDATION_TOLERANCE: f64 = 1e-6;

/// Checks every row, bound, integrality requirement and (for P2) energy link.
pub fn validate_solution(model: &IlpModel, values: &[f64]) -> ValidationReport {
    let mut violations = Vec::new();
    if values.len() != model.num_vars() {
        violations.push(Violation {
            name: "assignment_length".into(),
            kind: ViolationKind::Bound,
            value: values.len() as f64,
            target: model.num_vars() as f64,
        });
        return ValidationReport { violations, objective: f64::NAN };
    }
    let tol = |t: f64| VALIDATION_TOLERANCE * t.abs().max(1.0);
    for (c, &v) in values.iter().enumerate() {
        let name = model.vars[c].name();
        if v < model.lower[c] - tol(model.lower[c]) {
            violations.push(Violation {
                name: name.clone(),
                kind: ViolationKind::Bound,
                value: v,
                target: model.lower[c],
            });
        }
        if v > model.upper[c] + tol(model.upper[c]) {
            violations.push(Violation {
                name: name.clone(),
                kind: ViolationKind::Bound,
                value: v,
                target: model.upper[c],
            });
        }
        if model.integrality[c] == Integrality::Binary && (v - v.round()).abs() > VALIDATION_TOLERANCE {
            violations.push(Violation {
                name,
                kind: ViolationKind::Integrality,
                value: v,
                target: v.round(),
            });
        }
    }
    for row in &model.constraints {
        let act = row.activity(values);
        let t = tol(row.rhs);
        let bad = match row.sense {
            Sense::Le => act > row.rhs + t,
            Sense::Ge => act < row.rhs - t,
            Sense::Eq => (act - row.rhs).abs() > t,
        };
        if bad {
            violations.push(Violation {
                name: row.name.clone(),
                kind: ViolationKind::Row,
                value: act,
                target: row.rhs,
            });
        }
    }
    if model.energy.is_some() {
        for (c, kind) in model.vars.iter().enumerate() {
            if let VarKind::E { site, rasc } = *kind {
                let expected = model.expected_energy(values, site, rasc);
                if (values[c] - expected).abs() > tol(expected) {
                    violations.push(Violation {
                        name: format!("energy_link_{site}_{rasc}"),
                        kind: ViolationKind::EnergyLink,
                        value: values[c],
                        target: expected,
                    });
                }
            }
        }
    }
    ValidationReport { violations, objective: model.objective_value(values) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_link_table, ChannelParams};
    use crate::scenario::{generate_manhattan, place_hotspots_seeded, GridParams, HotspotParams};

    fn instance(n: usize, demand: f64, seed: u64) -> (Scenario, LinkTable) {
        let s = generate_manhattan(&GridParams::default()).unwrap();
        let s = place_hotspots_seeded(&s, n, demand, &HotspotParams::default(), seed).unwrap();
        let t = build_link_table(&s, &ChannelParams::default()).unwrap();
        (s, t)
    }

    #[test]
    fn column_counts_match_enumeration() {
        let (s, t) = instance(1, 3.0, 11);
        let m = build_p1(&s, &t, &[3.0], 15).unwrap();
        // Independent count of usable arcs.
        let mut arcs = 0;
        for i in 1..16 {
            for j in 0..16 {
                if i != j && t.usable(NodeRef::Site(i), NodeRef::Site(j)) {
                    arcs += 1;
                }
            }
        }
        let hotspot_arcs = (1..16).filter(|&j| t.usable(NodeRef::Hotspot(0), NodeRef::Site(j))).count();
        assert_eq!(m.count(|k| matches!(k, VarKind::Y { .. })), arcs + hotspot_arcs);
        assert_eq!(m.count(|k| matches!(k, VarKind::X { .. })), 15 * 15);
        assert!(m.column(VarKind::X { site: DEPOT, rasc: 0 }).is_none());
        for v in m.vars() {
            assert_eq!(m.column(v.kind), Some(v.column));
            if let VarKind::Y { from, to, .. } = v.kind {
                assert_ne!(from, to);
                assert!(t.usable(from, to));
                assert_ne!(from, NodeRef::Site(DEPOT));
                assert!(!(matches!(from, NodeRef::Hotspot(_)) && to == NodeRef::Site(DEPOT)));
            }
        }
    }

    #[test]
    fn rejects_empty_demands() {
        let (s, t) = instance(1, 1.0, 2);
        let mut empty = s.clone();
        empty.hotspots.clear();
        let t0 = build_link_table(&empty, &ChannelParams::default()).unwrap();
        assert!(matches!(build_p1(&empty, &t0, &[], 15), Err(Error::EmptyDemands)));
        assert!(build_p1(&s, &t, &[1.0, 2.0], 15).is_err());
        assert!(build_p1(&s, &t, &[1.0], 0).is_err());
    }

    #[test]
    fn flow_rows_repeat_per_flow() {
        let (s, t) = instance(3, 3.0, 5);
        let m = build_p1(&s, &t, &[3.0, 3.0, 3.0], 15).unwrap();
        for prefix in ["src_", "sink_"] {
            assert_eq!(m.constraints().iter().filter(|c| c.name.starts_with(prefix)).count(), 3);
        }
        let cons = |f: usize| {
            m.constraints()
                .iter()
                .filter(|c| c.name.starts_with("cons_") && c.name.ends_with(&format!("_{f}")))
                .count()
        };
        assert!(cons(0) > 0);
        assert_eq!(cons(0), cons(1));
    }

    #[test]
    fn p2_adds_one_energy_column_per_placement() {
        let (s, t) = instance(2, 2.0, 8);
        let p1 = build_p1(&s, &t, &[2.0, 2.0], 15).unwrap();
        let p2 = build_p2(&s, &t, &[2.0, 2.0], 15, &EnergyParams::default(), 1e-6).unwrap();
        let xs = p1.count(|k| matches!(k, VarKind::X { .. }));
        assert_eq!(p2.num_vars(), p1.num_vars() + xs);
        assert_eq!(p2.count(|k| matches!(k, VarKind::E { .. })), xs);
        for v in p2.vars() {
            if matches!(v.kind, VarKind::E { .. }) {
                assert_eq!(p2.integrality()[v.column], Integrality::Continuous);
                assert_eq!(p2.upper_bounds()[v.column], f64::INFINITY);
            }
        }
        let zero = build_p2(&s, &t, &[2.0, 2.0], 15, &EnergyParams::default(), 0.0).unwrap();
        assert!(zero.has_integral_objective());
        assert!(!p2.has_integral_objective());
    }

    #[test]
    fn construction_is_deterministic() {
        let (s, t) = instance(2, 1.5, 21);
        let a = build_p2(&s, &t, &[1.5, 1.5], 15, &EnergyParams::default(), 1e-6).unwrap();
        let b = build_p2(&s, &t, &[1.5, 1.5], 15, &EnergyParams::default(), 1e-6).unwrap();
        assert_eq!(a.constraints(), b.constraints());
        assert_eq!(a.objective(), b.objective());
        assert_eq!(a.vars().collect::<Vec<_>>(), b.vars().collect::<Vec<_>>());
    }

    #[test]
    fn wrong_length_assignment_is_reported() {
        let (s, t) = instance(1, 1.0, 3);
        let m = build_p1(&s, &t, &[1.0], 15).unwrap();
        let r = validate_solution(&m, &[0.0; 3]);
        assert!(!r.passed());
    }

    #[test]
    fn all_zero_assignment_violates_source_rows() {
        let (s, t) = instance(1, 1.0, 3);
        let m = build_p1(&s, &t, &[1.0], 15).unwrap();
        let r = validate_solution(&m, &vec![0.0; m.num_vars()]);
        assert!(r.violations.iter().any(|v| v.name == "src_0"));
        assert!(r.violations.iter().any(|v| v.name == "sink_0"));
    }
}

//! Urban grid geometry: buildings, lampposts, the macro-BS depot and hotspots.
//!
//! Buildings are axis-aligned rectangles that fully block mmWave links, so
//! line-of-sight reduces to a 2D segment/rectangle test. Sites are indexed
//! from 0 with the depot always at index 0.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Point2D, b: Point2D) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub min_corner: Point2D,
    pub max_corner: Point2D,
}

impl Building {
    pub fn new(min_corner: Point2D, max_corner: Point2D) -> Self {
        Self { min_corner, max_corner }
    }

    /// Closed containment: points on the wall count as inside.
    pub fn contains(&self, p: Point2D) -> bool {
        p.x >= self.min_corner.x
            && p.x <= self.max_corner.x
            && p.y >= self.min_corner.y
            && p.y <= self.max_corner.y
    }

    /// True when the interiors of the two rectangles intersect.
    pub fn overlaps(&self, other: &Building) -> bool {
        self.min_corner.x < other.max_corner.x
            && other.min_corner.x < self.max_corner.x
            && self.min_corner.y < other.max_corner.y
            && other.min_corner.y < self.max_corner.y
    }

    /// Liang-Barsky clip of the open segment (a, b) against the closed
    /// rectangle. Grazing a wall or corner counts as blocked.
    pub fn blocks(&self, a: Point2D, b: Point2D) -> bool {
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        let edges = [
            (-dx, a.x - self.min_corner.x),
            (dx, self.max_corner.x - a.x),
            (-dy, a.y - self.min_corner.y),
            (dy, self.max_corner.y - a.y),
        ];
        for (p, q) in edges {
            if p == 0.0 {
                if q < 0.0 {
                    return false;
                }
                continue;
            }
            let r = q / p;
            if p < 0.0 {
                if r > t1 {
                    return false;
                }
                t0 = t0.max(r);
            } else {
                if r < t0 {
                    return false;
                }
                t1 = t1.min(r);
            }
        }
        t0 <= t1 && t1 > 0.0 && t0 < 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteKind {
    Depot,
    Lamppost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSite {
    pub id: usize,
    #[serde(flatten)]
    pub position: Point2D,
    pub kind: SiteKind,
    pub height: f64,
}

/// A cluster of ground users generating one flow. `id` doubles as the flow index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub id: usize,
    #[serde(flatten)]
    pub position: Point2D,
    /// Required throughput in bps/Hz.
    pub demand: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// (width, height) in meters.
    pub area: (f64, f64),
    pub buildings: Vec<Building>,
    pub sites: Vec<NodeSite>,
    pub hotspots: Vec<Hotspot>,
    pub seed: u64,
}

/// Index of the macro-BS in `Scenario::sites`.
pub const DEPOT: usize = 0;

/// A graph node: a site (depot or lamppost) or a hotspot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRef {
    Site(usize),
    Hotspot(usize),
}

impl std::fmt::Display for NodeRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NodeRef::Site(i) => write!(f, "{i}"),
            NodeRef::Hotspot(h) => write!(f, "h{h}"),
        }
    }
}

impl Scenario {
    pub fn depot(&self) -> &NodeSite {
        &self.sites[DEPOT]
    }

    /// Non-depot site indices, in id order.
    pub fn lampposts(&self) -> impl Iterator<Item = usize> + '_ {
        self.sites.iter().filter(|s| s.kind == SiteKind::Lamppost).map(|s| s.id)
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn num_hotspots(&self) -> usize {
        self.hotspots.len()
    }

    pub fn position(&self, node: NodeRef) -> Point2D {
        match node {
            NodeRef::Site(i) => self.sites[i].position,
            NodeRef::Hotspot(h) => self.hotspots[h].position,
        }
    }

    pub fn inside_building(&self, p: Point2D) -> bool {
        self.buildings.iter().any(|b| b.contains(p))
    }

    pub fn inside_area(&self, p: Point2D) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.area.0 && p.y <= self.area.1
    }

    /// Checks every structural invariant of a scenario.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if !(self.area.0 > 0.0 && self.area.1 > 0.0) {
            return bad(format!("area must be positive, got {:?}", self.area));
        }
        for (i, b) in self.buildings.iter().enumerate() {
            if !(b.min_corner.is_finite() && b.max_corner.is_finite()) {
                return bad(format!("building {i} has non-finite corners"));
            }
            if !(b.min_corner.x < b.max_corner.x && b.min_corner.y < b.max_corner.y) {
                return bad(format!("building {i} has min corner not below max corner"));
            }
            for (j, other) in self.buildings.iter().enumerate().skip(i + 1) {
                if b.overlaps(other) {
                    return bad(format!("buildings {i} and {j} overlap"));
                }
            }
        }
        if self.sites.is_empty() {
            return bad("scenario has no sites".into());
        }
        let depots = self.sites.iter().filter(|s| s.kind == SiteKind::Depot).count();
        if depots != 1 || self.sites[DEPOT].kind != SiteKind::Depot {
            return bad("exactly one depot is required, at index 0".into());
        }
        for (i, s) in self.sites.iter().enumerate() {
            if s.id != i {
                return bad(format!("site at index {i} has id {}", s.id));
            }
            if !s.position.is_finite() {
                return bad(format!("site {i} has non-finite coordinates"));
            }
            if self.inside_building(s.position) {
                return bad(format!("site {i} lies inside a building"));
            }
            if self.sites[..i].iter().any(|o| o.position == s.position) {
                return bad(format!("site {i} shares its position with another site"));
            }
        }
        for (i, h) in self.hotspots.iter().enumerate() {
            if h.id != i {
                return bad(format!("hotspot at index {i} has id {}", h.id));
            }
            if !(h.demand > 0.0 && h.demand.is_finite()) {
                return bad(format!("hotspot {i} has non-positive demand {}", h.demand));
            }
            if !h.position.is_finite() || self.inside_building(h.position) {
                return bad(format!("hotspot {i} lies inside a building"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// True iff the open segment (a, b) misses every building.
pub fn has_los(scenario: &Scenario, a: Point2D, b: Point2D) -> bool {
    // Canonical endpoint order makes the test exactly symmetric in floating point.
    let (p, q) = if (a.x, a.y) <= (b.x, b.y) { (a, b) } else { (b, a) };
    if p == q {
        return !scenario.inside_building(p);
    }
    !scenario.buildings.iter().any(|bld| bld.blocks(p, q))
}

/// Corner of the area that hosts the macro-BS.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    #[default]
    TopRight,
    TopLeft,
    BottomRight,
    BottomLeft,
}

/// Manhattan grid layout. Lampposts sit on street centerlines at every
/// intersection, including the edge streets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridParams {
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub block_size: f64,
    pub edge_street: f64,
    pub inner_street: f64,
    pub site_height: f64,
    pub depot_corner: Corner,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            blocks_x: 3,
            blocks_y: 3,
            block_size: 30.0,
            edge_street: 10.0,
            inner_street: 20.0,
            site_height: 10.0,
            depot_corner: Corner::TopRight,
        }
    }
}

impl GridParams {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.blocks_x == 0 || self.blocks_y == 0 {
            return bad("grid needs at least one block per axis");
        }
        for (name, v) in [
            ("block_size", self.block_size),
            ("edge_street", self.edge_street),
            ("inner_street", self.inner_street),
            ("site_height", self.site_height),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if self.block_size <= 0.0 || self.site_height <= 0.0 {
            return bad("block size and site height must be positive");
        }
        Ok(())
    }

    /// Street centerline coordinates along one axis.
    fn street_lines(&self, blocks: usize) -> (Vec<f64>, f64) {
        let extent = 2.0 * self.edge_street
            + blocks as f64 * self.block_size
            + (blocks as f64 - 1.0) * self.inner_street;
        let mut lines = vec![self.edge_street / 2.0];
        for i in 1..blocks {
            let end_of_block =
                self.edge_street + i as f64 * self.block_size + (i - 1) as f64 * self.inner_street;
            lines.push(end_of_block + self.inner_street / 2.0);
        }
        lines.push(extent - self.edge_street / 2.0);
        (lines, extent)
    }

    fn block_starts(&self, blocks: usize) -> Vec<f64> {
        (0..blocks).map(|i| self.edge_street + i as f64 * (self.block_size + self.inner_street)).collect()
    }
}

/// Builds the Manhattan grid scenario with no hotspots.
pub fn generate_manhattan(params: &GridParams) -> Result<Scenario> {
    params.validate()?;
    let (xs, width) = params.street_lines(params.blocks_x);
    let (ys, height) = params.street_lines(params.blocks_y);

    let mut buildings = Vec::with_capacity(params.blocks_x * params.blocks_y);
    for &y0 in &params.block_starts(params.blocks_y) {
        for &x0 in &params.block_starts(params.blocks_x) {
            buildings.push(Building::new(
                Point2D::new(x0, y0),
                Point2D::new(x0 + params.block_size, y0 + params.block_size),
            ));
        }
    }

    let depot_pos = match params.depot_corner {
        Corner::TopRight => Point2D::new(xs[xs.len() - 1], ys[ys.len() - 1]),
        Corner::TopLeft => Point2D::new(xs[0], ys[ys.len() - 1]),
        Corner::BottomRight => Point2D::new(xs[xs.len() - 1], ys[0]),
        Corner::BottomLeft => Point2D::new(xs[0], ys[0]),
    };
    let mut sites =
        vec![NodeSite { id: DEPOT, position: depot_pos, kind: SiteKind::Depot, height: params.site_height }];
    for &y in &ys {
        for &x in &xs {
            let position = Point2D::new(x, y);
            if position == depot_pos {
                continue;
            }
            sites.push(NodeSite {
                id: sites.len(),
                position,
                kind: SiteKind::Lamppost,
                height: params.site_height,
            });
        }
    }

    let scenario = Scenario { area: (width, height), buildings, sites, hotspots: Vec::new(), seed: 0 };
    scenario.validate()?;
    Ok(scenario)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HotspotParams {
    /// Maximum offset of a hotspot from its anchor lamppost, in meters.
    pub vicinity_radius: f64,
    pub max_attempts: usize,
}

impl Default for HotspotParams {
    fn default() -> Self {
        Self { vicinity_radius: 15.0, max_attempts: 10_000 }
    }
}

/// Replaces the scenario's hotspots with `n` new ones, each a uniform draw
/// from the disc around a uniformly chosen lamppost. Draws that land in a
/// building or outside the area are rejected.
pub fn place_hotspots<R: Rng + ?Sized>(
    scenario: &Scenario,
    n: usize,
    demand: f64,
    params: &HotspotParams,
    rng: &mut R,
) -> Result<Scenario> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one hotspot".into()));
    }
    if !(demand > 0.0 && demand.is_finite()) {
        return Err(Error::InvalidParameter(format!("demand must be positive, got {demand}")));
    }
    if !(params.vicinity_radius >= 0.0 && params.vicinity_radius.is_finite()) {
        return Err(Error::InvalidParameter("vicinity radius must be a non-negative number".into()));
    }
    let anchors: Vec<usize> = scenario.lampposts().collect();
    if anchors.is_empty() {
        return Err(Error::InvalidScenario("no lampposts to anchor hotspots".into()));
    }

    let mut out = scenario.clone();
    out.hotspots.clear();
    for index in 0..n {
        let mut placed = None;
        for _ in 0..params.max_attempts {
            let anchor = scenario.sites[anchors[rng.gen_range(0..anchors.len())]].position;
            let r = params.vicinity_radius * rng.gen::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.gen::<f64>();
            let p = Point2D::new(anchor.x + r * theta.cos(), anchor.y + r * theta.sin());
            if scenario.inside_area(p) && !scenario.inside_building(p) {
                placed = Some(p);
                break;
            }
        }
        let position = placed.ok_or(Error::HotspotPlacement { index, attempts: params.max_attempts })?;
        out.hotspots.push(Hotspot { id: index, position, demand });
    }
    Ok(out)
}

/// [`place_hotspots`] driven by a ChaCha stream seeded from `seed`; the seed is
/// recorded in the returned scenario.
pub fn place_hotspots_seeded(
    scenario: &Scenario,
    n: usize,
    demand: f64,
    params: &HotspotParams,
    seed: u64,
) -> Result<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = place_hotspots(scenario, n, demand, params, &mut rng)?;
    out.seed = seed;
    Ok(out)
}

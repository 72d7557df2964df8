//! Link budget for 28 GHz LoS links and the resulting capacity table.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{distance, has_los, NodeRef, Scenario};

/// Thermal noise density at room temperature, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

/// Links shorter than this are evaluated at this distance (co-located hotspot
/// and lamppost).
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    /// Transmit plus receive beamforming gain.
    pub antenna_gain_dbi: f64,
    pub noise_figure_db: f64,
    /// Empirical implementation loss subtracted from the SNR before Shannon.
    pub loss_factor_db: f64,
    pub max_spectral_efficiency: f64,
    pub pathloss_intercept_db: f64,
    /// dB per decade of distance.
    pub pathloss_slope_db: f64,
    /// LoS backhaul links longer than this carry nothing.
    pub max_link_range_m: f64,
    /// Serving range of a small cell: hotspot links longer than this carry
    /// nothing.
    pub access_range_m: f64,
    /// Lognormal shadowing; 0 disables it.
    pub shadowing_sigma_db: f64,
    pub shadowing_seed: u64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_frequency_hz: 28e9,
            bandwidth_hz: 1e9,
            tx_power_dbm: 24.0,
            antenna_gain_dbi: 40.0,
            noise_figure_db: 7.0,
            loss_factor_db: 3.0,
            max_spectral_efficiency: 4.8,
            pathloss_intercept_db: 61.4,
            pathloss_slope_db: 20.0,
            max_link_range_m: 120.0,
            access_range_m: 120.0,
            shadowing_sigma_db: 0.0,
            shadowing_seed: 0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::InvalidParameter("bandwidth must be positive".into()));
        }
        if !(self.max_spectral_efficiency > 0.0) {
            return Err(Error::InvalidParameter("maximum spectral efficiency must be positive".into()));
        }
        if !(self.max_link_range_m > 0.0 && self.access_range_m > 0.0) {
            return Err(Error::InvalidParameter("link ranges must be positive".into()));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(Error::InvalidParameter("shadowing sigma must be non-negative".into()));
        }
        Ok(())
    }

    /// Noise power over the full bandwidth, dBm.
    pub fn noise_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_HZ + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db
    }
}

/// Log-distance LoS pathloss `intercept + slope * log10(d)`.
pub fn pathloss_db(params: &ChannelParams, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::NonPositiveDistance(d));
    }
    Ok(params.pathloss_intercept_db + params.pathloss_slope_db * d.log10())
}

pub fn snr_db(params: &ChannelParams, d: f64) -> Result<f64> {
    Ok(params.tx_power_dbm + params.antenna_gain_dbi - pathloss_db(params, d)? - params.noise_dbm())
}

/// Shannon spectral efficiency after the loss factor, capped at the maximum.
pub fn spectral_efficiency(params: &ChannelParams, snr_db: f64) -> f64 {
    let linear = 10f64.powf(0.1 * (snr_db - params.loss_factor_db));
    (1.0 + linear).log2().min(params.max_spectral_efficiency)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub los: bool,
    pub distance_m: f64,
    pub snr_db: f64,
    /// bps/Hz; zero for unusable links.
    pub s_eff: f64,
    pub capacity_bps: f64,
}

impl Link {
    const NONE: Link =
        Link { los: false, distance_m: 0.0, snr_db: f64::NEG_INFINITY, s_eff: 0.0, capacity_bps: 0.0 };

    pub fn usable(&self) -> bool {
        self.capacity_bps > 0.0
    }
}

/// Dense symmetric table over sites followed by hotspots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkTable {
    num_sites: usize,
    num_hotspots: usize,
    bandwidth_hz: f64,
    links: Vec<Link>,
}

impl LinkTable {
    pub fn num_nodes(&self) -> usize {
        self.num_sites + self.num_hotspots
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn num_hotspots(&self) -> usize {
        self.num_hotspots
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn index(&self, node: NodeRef) -> usize {
        match node {
            NodeRef::Site(i) => i,
            NodeRef::Hotspot(h) => self.num_sites + h,
        }
    }

    pub fn node(&self, index: usize) -> NodeRef {
        if index < self.num_sites {
            NodeRef::Site(index)
        } else {
            NodeRef::Hotspot(index - self.num_sites)
        }
    }

    pub fn get(&self, a: NodeRef, b: NodeRef) -> &Link {
        let n = self.num_nodes();
        &self.links[self.index(a) * n + self.index(b)]
    }

    pub fn s_eff(&self, a: NodeRef, b: NodeRef) -> f64 {
        self.get(a, b).s_eff
    }

    pub fn usable(&self, a: NodeRef, b: NodeRef) -> bool {
        self.get(a, b).usable()
    }

    /// Writes the table as CSV, one row per ordered pair.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "los", "distance_m", "snr_db", "s_eff", "capacity_bps"])?;
        let n = self.num_nodes();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let l = &self.links[i * n + j];
                w.write_record([
                    self.node(i).to_string(),
                    self.node(j).to_string(),
                    l.los.to_string(),
                    format!("{:.6}", l.distance_m),
                    format!("{:.6}", l.snr_db),
                    format!("{:.6}", l.s_eff),
                    format!("{:.1}", l.capacity_bps),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates one backhaul link between two points, shadowing excluded.
pub fn evaluate_link(
    scenario: &Scenario,
    params: &ChannelParams,
    a: crate::scenario::Point2D,
    b: crate::scenario::Point2D,
) -> Link {
    let d = distance(a, b);
    let los = has_los(scenario, a, b);
    link_from(params, los, d, 0.0, params.max_link_range_m)
}

/// Evaluates the access link from a hotspot position to a site.
pub fn evaluate_access_link(
    scenario: &Scenario,
    params: &ChannelParams,
    hotspot: crate::scenario::Point2D,
    site: crate::scenario::Point2D,
) -> Link {
    let d = distance(hotspot, site);
    let los = has_los(scenario, hotspot, site);
    link_from(params, los, d, 0.0, params.access_range_m)
}

fn link_from(params: &ChannelParams, los: bool, d: f64, shadow_db: f64, range: f64) -> Link {
    let snr = snr_db(params, d.max(MIN_LINK_DISTANCE_M)).expect("clamped distance") - shadow_db;
    let usable = los && d <= range;
    let s_eff = if usable { spectral_efficiency(params, snr) } else { 0.0 };
    Link { los, distance_m: d, snr_db: snr, s_eff, capacity_bps: params.bandwidth_hz * s_eff }
}

pub fn build_link_table(scenario: &Scenario, params: &ChannelParams) -> Result<LinkTable> {
    params.validate()?;
    let num_sites = scenario.num_sites();
    let num_hotspots = scenario.num_hotspots();
    let n = num_sites + num_hotspots;
    let node = |i: usize| {
        if i < num_sites {
            NodeRef::Site(i)
        } else {
            NodeRef::Hotspot(i - num_sites)
        }
    };

    let mut shadow = if params.shadowing_sigma_db > 0.0 {
        let normal = Normal::new(0.0, params.shadowing_sigma_db)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Some((normal, ChaCha8Rng::seed_from_u64(params.shadowing_seed)))
    } else {
        None
    };

    let mut links = vec![Link::NONE; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (scenario.position(node(i)), scenario.position(node(j)));
            let shadow_db = match shadow.as_mut() {
                Some((normal, rng)) => normal.sample(rng),
                None => 0.0,
            };
            let range = if j >= num_sites { params.access_range_m } else { params.max_link_range_m };
            let link = link_from(params, has_los(scenario, a, b), distance(a, b), shadow_db, range);
            links[i * n + j] = link;
            links[j * n + i] = link;
        }
    }
    Ok(LinkTable { num_sites, num_hotspots, bandwidth_hz: params.bandwidth_hz, links })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_manhattan, place_hotspots_seeded, GridParams, HotspotParams};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pathloss_examples() {
        let p = ChannelParams::default();
        assert_eq!(pathloss_db(&p, 1.0).unwrap(), 61.4);
        assert!(close(pathloss_db(&p, 100.0).unwrap(), 101.4, 1e-12));
        assert!(close(pathloss_db(&p, 50.0).unwrap(), 95.379_400_39, 1e-6));
        assert!(pathloss_db(&p, 0.0).is_err());
        assert!(pathloss_db(&p, -3.0).is_err());
    }

    #[test]
    fn noise_and_snr_examples() {
        let p = ChannelParams::default();
        assert!(close(p.noise_dbm(), -77.0, 1e-12));
        let snr = snr_db(&p, 50.0).unwrap();
        assert!(close(snr, 45.620_599_61, 1e-6));
        let weaker = ChannelParams { antenna_gain_dbi: 30.0, ..p.clone() };
        assert!(close(snr - snr_db(&weaker, 50.0).unwrap(), 10.0, 1e-12));
    }

    #[test]
    fn spectral_efficiency_examples() {
        let p = ChannelParams::default();
        assert_eq!(spectral_efficiency(&p, 3.0), 1.0);
        assert_eq!(spectral_efficiency(&p, 45.62), 4.8);
        assert!(close(spectral_efficiency(&p, 13.0), 11f64.log2(), 1e-12));
        assert!(spectral_efficiency(&p, -40.0) > 0.0);
    }

    #[test]
    fn street_links_saturate_and_blocked_links_are_zero() {
        let s = generate_manhattan(&GridParams::default()).unwrap();
        let t = build_link_table(&s, &ChannelParams::default()).unwrap();
        let site = NodeRef::Site;
        // (5,5) is site 1 and (50,50) is site 6.
        assert_eq!(s.sites[1].position.x, 5.0);
        assert_eq!(s.sites[6].position.x, 50.0);
        assert_eq!(s.sites[6].position.y, 50.0);
        assert!(!t.get(site(1), site(6)).los);
        assert_eq!(t.get(site(1), site(6)).capacity_bps, 0.0);
        let along = t.get(site(1), site(2));
        assert!(along.los);
        assert_eq!(along.s_eff, 4.8);
        assert_eq!(along.capacity_bps, 4.8e9);
    }

    #[test]
    fn doubling_bandwidth_doubles_capacity() {
        let s = generate_manhattan(&GridParams::default()).unwrap();
        let base = ChannelParams::default();
        let wide = ChannelParams { bandwidth_hz: 2e9, ..base.clone() };
        let t1 = build_link_table(&s, &base).unwrap();
        let t2 = build_link_table(&s, &wide).unwrap();
        for i in 0..t1.num_nodes() {
            for j in 0..t1.num_nodes() {
                let (a, b) = (t1.node(i), t1.node(j));
                let c1 = t1.get(a, b).capacity_bps;
                assert_eq!(t2.get(a, b).capacity_bps, 2.0 * c1);
            }
        }
    }

    #[test]
    fn table_is_symmetric_and_capped() {
        let s = generate_manhattan(&GridParams::default()).unwrap();
        let s = place_hotspots_seeded(&s, 3, 1.0, &HotspotParams::default(), 4).unwrap();
        let p = ChannelParams { shadowing_sigma_db: 8.0, antenna_gain_dbi: 10.0, ..ChannelParams::default() };
        let t = build_link_table(&s, &p).unwrap();
        for i in 0..t.num_nodes() {
            for j in 0..t.num_nodes() {
                let (a, b) = (t.node(i), t.node(j));
                assert_eq!(t.get(a, b), t.get(b, a));
                assert!(t.s_eff(a, b) <= p.max_spectral_efficiency);
                if !t.get(a, b).los {
                    assert_eq!(t.get(a, b).capacity_bps, 0.0);
                }
            }
        }
    }

    #[test]
    fn range_cap_disables_long_links() {
        let s = generate_manhattan(&GridParams::default()).unwrap();
        let t = build_link_table(&s, &ChannelParams::default()).unwrap();
        // Sites 1 (5,5) and 4 (145,5) are 140 m apart on the same street.
        assert!(t.get(NodeRef::Site(1), NodeRef::Site(4)).los);
        assert!(!t.usable(NodeRef::Site(1), NodeRef::Site(4)));
        assert!(t.usable(NodeRef::Site(1), NodeRef::Site(3)));
    }

    #[test]
    fn csv_has_expected_header() {
        let s = generate_manhattan(&GridParams::default()).unwrap();
        let t = build_link_table(&s, &ChannelParams::default()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "i,j,los,distance_m,snr_db,s_eff,capacity_bps");
        assert_eq!(lines.count(), 16 * 15);
    }
}

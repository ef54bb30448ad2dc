//! Synthetic instance generator.
//!
//! Produces jittered-grid road networks with shortcut links, attribute
//! distributions matching the operational statistics the planner targets
//! (about 12% one-way links, seven speed tiers from 10 to 70 with mass at
//! 50, predominantly 1-2 lanes) and depots at well-separated nodes of the
//! largest SCC. Edge lengths are snapped up to a 1/1024 km grid so length
//! sums stay exact under chain compression, and each edge carries a
//! three-point polyline whose arc length equals its length exactly.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fleet::{Depot, DepotId, FleetSpec, VehicleClass};
use crate::network::io::{expand_rows, wkt_linestring, write_raw_instance, EdgeRow};
use crate::network::{largest_scc, InstanceHeader, NodeId, RoadNetwork, RoadNode, SpeedUnit};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Approximate node count; the grid uses the nearest square.
    pub nodes: usize,
    /// Fraction of source rows that are one-way.
    pub oneway_fraction: f64,
    pub speed_tiers: Vec<f64>,
    /// Sampling weights aligned with `speed_tiers`.
    pub speed_weights: Vec<f64>,
    /// (lanes, weight) sampling table.
    pub lane_weights: Vec<(u32, f64)>,
    /// Fraction of source rows requiring treatment.
    pub treated_fraction: f64,
    pub depots: usize,
    pub max_vehicles_per_depot: u32,
    /// Area extent in coordinate units (metres-like).
    pub extent: (f64, f64),
    /// Extra cross-grid links as a fraction of node count.
    pub shortcut_fraction: f64,
    /// Fraction of roads digitized as multi-segment chains of degree-2
    /// nodes (identical attributes per segment), the shape chain
    /// compression collapses.
    pub chain_fraction: f64,
    pub max_chain_nodes: usize,
    /// Fraction of grid rows/columns upgraded to fast multi-lane
    /// corridors (the strategic network); remaining roads draw from the
    /// speed tiers.
    pub corridor_fraction: f64,
    pub corridor_speed: f64,
    /// Multiplier on `treated_fraction` for corridor roads; strategic
    /// roads carry most of the salting demand.
    pub corridor_treat_boost: f64,
    pub name: String,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            nodes: 400,
            oneway_fraction: 0.122,
            speed_tiers: vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0],
            speed_weights: vec![0.04, 0.08, 0.16, 0.24, 0.3, 0.12, 0.06],
            lane_weights: vec![(1, 0.5), (2, 0.4), (3, 0.07), (4, 0.03)],
            treated_fraction: 0.25,
            depots: 3,
            max_vehicles_per_depot: 12,
            extent: (60_000.0, 60_000.0),
            shortcut_fraction: 0.04,
            chain_fraction: 0.35,
            max_chain_nodes: 3,
            corridor_fraction: 0.18,
            corridor_speed: 70.0,
            corridor_treat_boost: 2.0,
            name: "synthetic".into(),
        }
    }
}

impl GeneratorConfig {
    fn validate(&self) -> Result<()> {
        for (label, f) in [
            ("oneway_fraction", self.oneway_fraction),
            ("treated_fraction", self.treated_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Generation(format!("{label} must be in [0,1], got {f}")));
            }
        }
        if self.depots == 0 {
            return Err(Error::Generation("need at least one depot".into()));
        }
        if self.nodes < 4 {
            return Err(Error::Generation(
                "fewer than 4 nodes cannot yield a usable road grid".into(),
            ));
        }
        if self.speed_tiers.is_empty() || self.speed_tiers.len() != self.speed_weights.len() {
            return Err(Error::Generation(
                "speed tiers and weights must be nonempty and aligned".into(),
            ));
        }
        if self.lane_weights.is_empty() {
            return Err(Error::Generation("lane weight table is empty".into()));
        }
        Ok(())
    }
}

/// An instance as generated: the raw (uncompressed, pre-SCC) network plus
/// its fleet. Run the preprocessing pipeline before planning.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub network: RoadNetwork,
    pub fleet: FleetSpec,
    nodes: Vec<RoadNode>,
    rows: Vec<EdgeRow>,
    header: InstanceHeader,
}

impl GeneratedInstance {
    /// Writes `instance.json`, `nodes.csv`, `edges.csv` (raw rows, two-way
    /// roads as single `oneway=false` rows) and `fleet.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_raw_instance(dir, &self.nodes, &self.rows, &self.header)?;
        self.fleet.save(&dir.join("fleet.json"))
    }

    /// Fraction of raw edge rows flagged one-way.
    pub fn oneway_row_fraction(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.oneway).count() as f64 / self.rows.len() as f64
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }
}

/// Snaps a length up to the next 1/1024 km so sums of generated lengths are
/// exact in f64.
fn snap_km(v: f64) -> f64 {
    (v * 1024.0).ceil() / 1024.0
}

pub fn generate_instance(cfg: &GeneratorConfig) -> Result<GeneratedInstance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let side = (cfg.nodes as f64).sqrt().round().max(2.0) as usize;
    let (w, h) = cfg.extent;
    let dx = w / side as f64;
    let dy = h / side as f64;

    let mut nodes = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            let jx = rng.random_range(-0.25..0.25) * dx;
            let jy = rng.random_range(-0.25..0.25) * dy;
            nodes.push(RoadNode {
                id: NodeId((r * side + c) as u64),
                x: c as f64 * dx + dx / 2.0 + jx,
                y: r as f64 * dy + dy / 2.0 + jy,
            });
        }
    }

    let mut rows: Vec<EdgeRow> = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let v = r * side + c;
            if c + 1 < side {
                add_road(cfg, &mut rng, &mut nodes, &mut rows, v, v + 1);
            }
            if r + 1 < side {
                add_road(cfg, &mut rng, &mut nodes, &mut rows, v, v + side);
            }
        }
    }
    if side >= 3 {
        let shortcuts = ((side * side) as f64 * cfg.shortcut_fraction) as usize;
        for _ in 0..shortcuts {
            let r = rng.random_range(0..side - 2);
            let c = rng.random_range(0..side - 2);
            let v = r * side + c;
            let target = v + side + 1; // diagonal neighbour
            add_road(cfg, &mut rng, &mut nodes, &mut rows, v, target);
        }
    }

    let header = InstanceHeader {
        speed_unit: SpeedUnit::Kmh,
        name: cfg.name.clone(),
    };
    let edges = expand_rows(&rows, Path::new("generated"))?;
    let network = RoadNetwork::new(header.name.clone(), header.speed_unit, nodes.clone(), edges)?;

    // Depots live in the largest SCC so preprocessing never prunes them.
    let core = largest_scc(&network)?;
    if core.node_count() < cfg.depots {
        return Err(Error::Generation(format!(
            "largest SCC has {} nodes, cannot place {} depots",
            core.node_count(),
            cfg.depots
        )));
    }
    let depot_nodes = farthest_point_nodes(&core, cfg.depots, &mut rng);
    let fleet = FleetSpec {
        depots: depot_nodes
            .into_iter()
            .enumerate()
            .map(|(i, node)| Depot {
                id: DepotId(i as u64),
                node,
                max_vehicles: cfg.max_vehicles_per_depot,
            })
            .collect(),
        vehicle: VehicleClass::default(),
    };

    Ok(GeneratedInstance {
        network,
        fleet,
        nodes,
        rows,
        header,
    })
}

/// One road between grid nodes `a` and `b`: a single row, or a chain of
/// rows through fresh degree-2 nodes sharing every routing attribute.
fn add_road(
    cfg: &GeneratorConfig,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<RoadNode>,
    rows: &mut Vec<EdgeRow>,
    a: usize,
    b: usize,
) {
    let oneway = rng.random_bool(cfg.oneway_fraction);
    let (from, to) = if oneway && rng.random_bool(0.5) {
        (b, a)
    } else {
        (a, b)
    };
    let speed = weighted_choice(rng, &cfg.speed_weights, &cfg.speed_tiers);
    let lanes = weighted_choice(
        rng,
        &cfg.lane_weights.iter().map(|&(_, w)| w).collect::<Vec<_>>(),
        &cfg.lane_weights.iter().map(|&(l, _)| l).collect::<Vec<_>>(),
    );
    let treat = rng.random_bool(cfg.treated_fraction);
    let factor = rng.random_range(1.05..1.3);

    let mut waypoints = vec![from];
    if cfg.max_chain_nodes > 0 && rng.random_bool(cfg.chain_fraction) {
        let k = rng.random_range(1..=cfg.max_chain_nodes);
        let (ax, ay) = (nodes[from].x, nodes[from].y);
        let (bx, by) = (nodes[to].x, nodes[to].y);
        for j in 1..=k {
            let t = j as f64 / (k + 1) as f64;
            let jx = rng.random_range(-0.08..0.08) * (bx - ax).abs().max(200.0);
            let jy = rng.random_range(-0.08..0.08) * (by - ay).abs().max(200.0);
            let idx = nodes.len();
            nodes.push(RoadNode {
                id: NodeId(idx as u64),
                x: ax + t * (bx - ax) + jx,
                y: ay + t * (by - ay) + jy,
            });
            waypoints.push(idx);
        }
    }
    waypoints.push(to);

    for w in waypoints.windows(2) {
        let (na, nb) = (&nodes[w[0]], &nodes[w[1]]);
        let crow_km = ((nb.x - na.x).powi(2) + (nb.y - na.y).powi(2)).sqrt() / 1000.0;
        let length_km = snap_km(crow_km * factor);
        let bump_side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let geometry = bumped_polyline((na.x, na.y), (nb.x, nb.y), length_km * 1000.0, bump_side);
        rows.push(EdgeRow {
            edge_id: rows.len() as u64,
            from: na.id.0,
            to: nb.id.0,
            length_km,
            speed,
            lanes,
            oneway,
            treat,
            geometry: Some(wkt_linestring(&geometry)),
        });
    }
}

fn weighted_choice<T: Copy>(rng: &mut ChaCha8Rng, weights: &[f64], values: &[T]) -> T {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random_range(0.0..total);
    for (v, &w) in values.iter().zip(weights) {
        if u < w {
            return *v;
        }
        u -= w;
    }
    *values.last().unwrap()
}

/// Three-point polyline from `a` to `b` whose arc length equals `target`
/// (same units as the coordinates) via a perpendicular midpoint offset.
fn bumped_polyline(a: (f64, f64), b: (f64, f64), target: f64, side: f64) -> Vec<(f64, f64)> {
    let d = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    if target <= d || d == 0.0 {
        return vec![a, b];
    }
    let half = target / 2.0;
    let offset = (half * half - (d / 2.0) * (d / 2.0)).sqrt();
    let mx = (a.0 + b.0) / 2.0;
    let my = (a.1 + b.1) / 2.0;
    let (px, py) = (-(b.1 - a.1) / d, (b.0 - a.0) / d);
    vec![a, (mx + side * offset * px, my + side * offset * py), b]
}

/// Greedy farthest-point sampling over node coordinates; the first pick is
/// a uniformly random node, later picks maximize the minimum straight-line
/// distance to already-chosen depots (ties to the lowest node id).
fn farthest_point_nodes(network: &RoadNetwork, count: usize, rng: &mut ChaCha8Rng) -> Vec<NodeId> {
    let nodes = network.nodes();
    let mut chosen: Vec<usize> = vec![rng.random_range(0..nodes.len())];
    while chosen.len() < count {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (i, n) in nodes.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let min_d = chosen
                .iter()
                .map(|&j| {
                    let m = &nodes[j];
                    ((n.x - m.x).powi(2) + (n.y - m.y).powi(2)).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            if min_d > best.0 {
                best = (min_d, i);
            }
        }
        chosen.push(best.1);
    }
    chosen.into_iter().map(|i| nodes[i].id).collect()
}

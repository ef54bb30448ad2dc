//! Directed road-graph data model.
//!
//! A [`RoadNetwork`] is immutable after construction: every mutation-like
//! operation (SCC extraction, chain compression) returns a new network.
//! Travel is only possible along stored directed edges, so one-way and
//! two-way semantics are enforced structurally; a two-way source road is
//! represented as two directed edges with reciprocal endpoints.

mod compress;
pub(crate) mod io;
mod path;
mod scc;

pub use compress::compress_chains;
pub use io::{load_instance_dir, load_network, save_network, InstanceHeader};
pub use path::{PathResult, ShortestPaths};
pub use scc::largest_scc;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Node identifier, unique within a network and stable across compression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

/// Directed-edge identifier. Two-way source rows expand into two directed
/// edges; the reverse direction gets an id offset documented in [`load_network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Unit the `speed` columns are expressed in. Travel-time formulas are
/// ratios of length to speed, so the unit is carried as metadata and never
/// converted; it must simply be consistent within one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SpeedUnit {
    #[default]
    Kmh,
    Mph,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadNode {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

/// One directed road segment with routing attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadEdge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    /// Segment length, km. Strictly positive.
    pub length_km: f64,
    /// Speed limit in the instance speed unit. Strictly positive.
    pub speed_limit: f64,
    pub lanes: u32,
    /// True when the source road had no reverse carriageway.
    pub oneway: bool,
    /// Membership in the treatment-required set.
    pub requires_treatment: bool,
    /// Optional polyline in instance coordinates, from -> to order.
    pub geometry: Option<Vec<(f64, f64)>>,
}

impl RoadEdge {
    /// Hours to traverse this edge without treating it.
    pub fn deadhead_hours(&self) -> f64 {
        self.length_km / self.speed_limit
    }

    /// Salt demand of this segment in lane-km.
    pub fn lane_km(&self) -> f64 {
        self.length_km * self.lanes as f64
    }

    /// Midpoint used for spatial assignment: arc-length midpoint of the
    /// geometry polyline when present, average of endpoints otherwise.
    pub fn midpoint(&self, network: &RoadNetwork) -> (f64, f64) {
        if let Some(poly) = &self.geometry {
            if poly.len() >= 2 {
                return polyline_midpoint(poly);
            }
        }
        let a = network.node(self.from);
        let b = network.node(self.to);
        ((a.x + b.x) / 2.0, (a.y + b.y) / 2.0)
    }
}

fn polyline_midpoint(poly: &[(f64, f64)]) -> (f64, f64) {
    let total: f64 = poly
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .sum();
    if total == 0.0 {
        return poly[0];
    }
    let mut remaining = total / 2.0;
    for w in poly.windows(2) {
        let seg = ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt();
        if seg >= remaining && seg > 0.0 {
            let t = remaining / seg;
            return (w[0].0 + t * (w[1].0 - w[0].0), w[0].1 + t * (w[1].1 - w[0].1));
        }
        remaining -= seg;
    }
    *poly.last().unwrap()
}

/// Directed multigraph of road segments with successor/predecessor lists.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    pub name: String,
    pub speed_unit: SpeedUnit,
    nodes: Vec<RoadNode>,
    edges: Vec<RoadEdge>,
    node_index: HashMap<NodeId, usize>,
    edge_index: HashMap<EdgeId, usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl RoadNetwork {
    /// Builds a network from materialized nodes and directed edges.
    /// Validates ids, endpoints and positivity invariants.
    pub fn new(
        name: String,
        speed_unit: SpeedUnit,
        mut nodes: Vec<RoadNode>,
        mut edges: Vec<RoadEdge>,
    ) -> crate::Result<Self> {
        nodes.sort_by_key(|n| n.id);
        edges.sort_by_key(|e| e.id);

        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.id, i).is_some() {
                return Err(crate::Error::InvalidInput(format!(
                    "duplicate node id {}",
                    n.id
                )));
            }
        }

        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_edges = vec![Vec::new(); nodes.len()];
        for (i, e) in edges.iter().enumerate() {
            if edge_index.insert(e.id, i).is_some() {
                return Err(crate::Error::InvalidInput(format!(
                    "duplicate edge id {}",
                    e.id
                )));
            }
            if e.length_km <= 0.0 || !e.length_km.is_finite() {
                return Err(crate::Error::InvalidEdge {
                    edge: e.id.0,
                    message: format!("non-positive length {}", e.length_km),
                });
            }
            if e.speed_limit <= 0.0 || !e.speed_limit.is_finite() {
                return Err(crate::Error::InvalidEdge {
                    edge: e.id.0,
                    message: format!("non-positive speed {}", e.speed_limit),
                });
            }
            if e.lanes < 1 {
                return Err(crate::Error::InvalidEdge {
                    edge: e.id.0,
                    message: "lane count must be at least 1".into(),
                });
            }
            let from = *node_index.get(&e.from).ok_or(crate::Error::UnknownNode {
                edge: e.id.0,
                node: e.from,
            })?;
            let to = *node_index.get(&e.to).ok_or(crate::Error::UnknownNode {
                edge: e.id.0,
                node: e.to,
            })?;
            out_edges[from].push(i);
            in_edges[to].push(i);
        }

        Ok(RoadNetwork {
            name,
            speed_unit,
            nodes,
            edges,
            node_index,
            edge_index,
            out_edges,
            in_edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[RoadNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[RoadEdge] {
        &self.edges
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.node_index.contains_key(&id)
    }

    /// Panics if the id is absent; use [`RoadNetwork::contains_node`] to probe.
    pub fn node(&self, id: NodeId) -> &RoadNode {
        &self.nodes[self.node_index[&id]]
    }

    pub fn edge(&self, id: EdgeId) -> Option<&RoadEdge> {
        self.edge_index.get(&id).map(|&i| &self.edges[i])
    }

    pub(crate) fn node_pos(&self, id: NodeId) -> Option<usize> {
        self.node_index.get(&id).copied()
    }

    pub(crate) fn node_at(&self, pos: usize) -> &RoadNode {
        &self.nodes[pos]
    }

    pub(crate) fn edge_at(&self, pos: usize) -> &RoadEdge {
        &self.edges[pos]
    }

    pub(crate) fn out_edges_at(&self, pos: usize) -> &[usize] {
        &self.out_edges[pos]
    }

    pub(crate) fn in_edges_at(&self, pos: usize) -> &[usize] {
        &self.in_edges[pos]
    }

    /// Directed edges requiring treatment, ascending by edge id.
    pub fn required_edges(&self) -> impl Iterator<Item = &RoadEdge> {
        self.edges.iter().filter(|e| e.requires_treatment)
    }

    /// Total length of treatment-required edges, km.
    pub fn treated_km(&self) -> f64 {
        self.required_edges().map(|e| e.length_km).sum()
    }

    /// Total salt demand of treatment-required edges, lane-km.
    pub fn treated_lane_km(&self) -> f64 {
        self.required_edges().map(|e| e.lane_km()).sum()
    }

    /// Fraction of directed edges with no reciprocal directed edge.
    pub fn structural_oneway_fraction(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        let mut reciprocal = 0usize;
        for e in &self.edges {
            let to = self.node_index[&e.to];
            if self.out_edges[to]
                .iter()
                .any(|&j| self.edges[j].to == e.from)
            {
                reciprocal += 1;
            }
        }
        (self.edges.len() - reciprocal) as f64 / self.edges.len() as f64
    }

    /// Travel-time shortest path between two nodes. Edge weight is
    /// `length / speed_limit`; ties between time-optimal paths break to the
    /// lexicographically smallest edge-id sequence.
    pub fn shortest_travel_time(&self, from: NodeId, to: NodeId) -> crate::Result<PathResult> {
        path::shortest_travel_time(self, from, to)
    }
}

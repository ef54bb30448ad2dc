//! Segment-to-depot assignment: spatial baseline and feature encoding.

mod kdtree;

pub use kdtree::{nearest_linear, KdTree};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fleet::{Depot, DepotId};
use crate::network::{EdgeId, RoadNetwork};
use crate::{Error, Result};

/// Total map from every treatment-required directed edge to a depot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    mapping: BTreeMap<EdgeId, DepotId>,
}

impl Assignment {
    pub fn new(mapping: BTreeMap<EdgeId, DepotId>) -> Self {
        Assignment { mapping }
    }

    pub fn depot_of(&self, edge: EdgeId) -> Option<DepotId> {
        self.mapping.get(&edge).copied()
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// Pairs in ascending edge-id order.
    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, DepotId)> + '_ {
        self.mapping.iter().map(|(&e, &d)| (e, d))
    }

    /// Edge ids assigned to `depot`, ascending.
    pub fn edges_for(&self, depot: DepotId) -> Vec<EdgeId> {
        self.mapping
            .iter()
            .filter(|(_, &d)| d == depot)
            .map(|(&e, _)| e)
            .collect()
    }

    /// Checks totality over the network's required edges and that every
    /// referenced depot exists.
    pub fn validate(&self, network: &RoadNetwork, depots: &[Depot]) -> Result<()> {
        for e in network.required_edges() {
            let Some(d) = self.depot_of(e.id) else {
                return Err(Error::InvalidInput(format!(
                    "required edge {} has no depot assignment",
                    e.id
                )));
            };
            if !depots.iter().any(|dep| dep.id == d) {
                return Err(Error::InvalidInput(format!(
                    "edge {} assigned to unknown depot {d}",
                    e.id
                )));
            }
        }
        if self.mapping.len() != network.required_edges().count() {
            return Err(Error::InvalidInput(
                "assignment references edges outside the required set".into(),
            ));
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["edge_id", "depot_id"]).map_err(Error::Csv)?;
        for (e, d) in self.iter() {
            w.write_record(&[e.0.to_string(), d.0.to_string()])
                .map_err(Error::Csv)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        crate::artifacts::write_atomic(path, &bytes)
    }

    pub fn read_csv(path: &Path) -> Result<Assignment> {
        #[derive(Deserialize)]
        struct Row {
            edge_id: u64,
            depot_id: u64,
        }
        let mut reader = csv::Reader::from_path(path).map_err(Error::Csv)?;
        let mut mapping = BTreeMap::new();
        for record in reader.deserialize() {
            let row: Row = record.map_err(Error::Csv)?;
            mapping.insert(EdgeId(row.edge_id), DepotId(row.depot_id));
        }
        Ok(Assignment { mapping })
    }
}

/// Assigns every required edge to the depot whose location is nearest to
/// the edge midpoint (straight-line); ties go to the lowest depot id.
pub fn nearest_depot_assignment(network: &RoadNetwork, depots: &[Depot]) -> Result<Assignment> {
    if depots.is_empty() {
        return Err(Error::InvalidInput("no depots to assign to".into()));
    }
    let mut sorted: Vec<&Depot> = depots.iter().collect();
    sorted.sort_by_key(|d| d.id);
    let points: Vec<(f64, f64)> = sorted
        .iter()
        .map(|d| {
            let n = network.node(d.node);
            (n.x, n.y)
        })
        .collect();
    let tree = KdTree::build(&points)?;
    let mut mapping = BTreeMap::new();
    for e in network.required_edges() {
        let nearest = tree.nearest(e.midpoint(network));
        mapping.insert(e.id, sorted[nearest].id);
    }
    Ok(Assignment { mapping })
}

/// Min-max scaling constants used to normalize segment features; persisted
/// alongside plan artifacts so runs can be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub length_km: (f64, f64),
    pub speed: (f64, f64),
    pub lanes: (f64, f64),
    /// Shared over all depot-distance columns so cross-depot comparisons
    /// survive normalization.
    pub depot_distance: (f64, f64),
}

/// Normalized per-segment observation: midpoint, length, speed limit, lane
/// count, then one straight-line depot distance per depot (depots in
/// ascending id order). Every component lies in [0, 1]; vector length is
/// `5 + |depots|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFeatures {
    pub edge: EdgeId,
    pub values: Vec<f64>,
}

fn scale(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.0 // constant feature
    }
}

/// Encodes one feature vector per required edge, ordered by edge id.
pub fn encode_features(
    network: &RoadNetwork,
    depots: &[Depot],
) -> (Vec<SegmentFeatures>, FeatureScaling) {
    let mut sorted: Vec<&Depot> = depots.iter().collect();
    sorted.sort_by_key(|d| d.id);
    let depot_xy: Vec<(f64, f64)> = sorted
        .iter()
        .map(|d| {
            let n = network.node(d.node);
            (n.x, n.y)
        })
        .collect();

    struct Raw {
        edge: EdgeId,
        mid: (f64, f64),
        length: f64,
        speed: f64,
        lanes: f64,
        dists: Vec<f64>,
    }
    let raw: Vec<Raw> = network
        .required_edges()
        .map(|e| {
            let mid = e.midpoint(network);
            let dists = depot_xy
                .iter()
                .map(|&(dx, dy)| ((mid.0 - dx).powi(2) + (mid.1 - dy).powi(2)).sqrt())
                .collect();
            Raw {
                edge: e.id,
                mid,
                length: e.length_km,
                speed: e.speed_limit,
                lanes: e.lanes as f64,
                dists,
            }
        })
        .collect();

    let minmax = |it: &mut dyn Iterator<Item = f64>| -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in it {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    };
    let scaling = FeatureScaling {
        x: minmax(&mut raw.iter().map(|r| r.mid.0)),
        y: minmax(&mut raw.iter().map(|r| r.mid.1)),
        length_km: minmax(&mut raw.iter().map(|r| r.length)),
        speed: minmax(&mut raw.iter().map(|r| r.speed)),
        lanes: minmax(&mut raw.iter().map(|r| r.lanes)),
        depot_distance: minmax(&mut raw.iter().flat_map(|r| r.dists.iter().copied())),
    };

    let features = raw
        .into_iter()
        .map(|r| {
            let mut values = vec![
                scale(r.mid.0, scaling.x),
                scale(r.mid.1, scaling.y),
                scale(r.length, scaling.length_km),
                scale(r.speed, scaling.speed),
                scale(r.lanes, scaling.lanes),
            ];
            values.extend(r.dists.iter().map(|&d| scale(d, scaling.depot_distance)));
            SegmentFeatures {
                edge: r.edge,
                values,
            }
        })
        .collect();
    (features, scaling)
}

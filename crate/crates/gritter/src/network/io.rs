//! CSV/JSON ingestion and persistence for road networks.
//!
//! Input schemas:
//!   - `nodes.csv`: `node_id,x,y` (planar coordinates, metres-like units)
//!   - `edges.csv`: `edge_id,from,to,length_km,speed,lanes,oneway,treat,geometry`
//!     where `geometry` is an optional WKT `LINESTRING`
//!   - `instance.json`: `{"speed_unit": "kmh"|"mph", "name": "..."}`
//!
//! A two-way row (`oneway=false`) expands into two directed edges: the
//! forward direction keeps the row's `edge_id`, the reverse direction gets
//! `edge_id + stride` where `stride = max row id + 1`. Persisting a network
//! writes one row per directed edge with `oneway` set per edge, so a
//! save/load round trip of an already-expanded network preserves ids.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EdgeId, NodeId, RoadEdge, RoadNetwork, RoadNode, SpeedUnit};
use crate::{Error, Result};

/// `instance.json` header carried alongside the CSV pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceHeader {
    #[serde(default)]
    pub speed_unit: SpeedUnit,
    #[serde(default)]
    pub name: String,
}

#[derive(Debug, Deserialize)]
struct NodeRow {
    node_id: u64,
    x: f64,
    y: f64,
}

/// One `edges.csv` row; a two-way row stands for both directions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct EdgeRow {
    pub(crate) edge_id: u64,
    pub(crate) from: u64,
    pub(crate) to: u64,
    pub(crate) length_km: f64,
    pub(crate) speed: f64,
    pub(crate) lanes: u32,
    pub(crate) oneway: bool,
    pub(crate) treat: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub(crate) geometry: Option<String>,
}

/// Loads a network from node and edge CSV files plus the instance header.
pub fn load_network(
    nodes_path: &Path,
    edges_path: &Path,
    header: &InstanceHeader,
) -> Result<RoadNetwork> {
    let nodes = read_nodes(nodes_path)?;
    let rows = read_edge_rows(edges_path)?;
    let edges = expand_rows(&rows, edges_path)?;
    RoadNetwork::new(header.name.clone(), header.speed_unit, nodes, edges)
}

fn read_nodes(path: &Path) -> Result<Vec<RoadNode>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| schema_err(path, &format!("cannot open: {e}")))?;
    let mut nodes = Vec::new();
    for record in reader.deserialize() {
        let row: NodeRow = record.map_err(|e| schema_err(path, &e.to_string()))?;
        nodes.push(RoadNode {
            id: NodeId(row.node_id),
            x: row.x,
            y: row.y,
        });
    }
    Ok(nodes)
}

fn read_edge_rows(path: &Path) -> Result<Vec<EdgeRow>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| schema_err(path, &format!("cannot open: {e}")))?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        let row: EdgeRow = record.map_err(|e| schema_err(path, &e.to_string()))?;
        rows.push(row);
    }
    Ok(rows)
}

pub(crate) fn expand_rows(rows: &[EdgeRow], path: &Path) -> Result<Vec<RoadEdge>> {
    let stride = rows.iter().map(|r| r.edge_id).max().map_or(0, |m| m + 1);
    let mut edges = Vec::with_capacity(rows.len() * 2);
    for row in rows {
        let geometry = match &row.geometry {
            Some(wkt) if !wkt.trim().is_empty() => Some(parse_wkt_linestring(wkt).map_err(
                |message| Error::InvalidEdge {
                    edge: row.edge_id,
                    message,
                },
            )?),
            _ => None,
        };
        edges.push(RoadEdge {
            id: EdgeId(row.edge_id),
            from: NodeId(row.from),
            to: NodeId(row.to),
            length_km: row.length_km,
            speed_limit: row.speed,
            lanes: row.lanes,
            oneway: row.oneway,
            requires_treatment: row.treat,
            geometry: geometry.clone(),
        });
        if !row.oneway {
            edges.push(RoadEdge {
                id: EdgeId(row.edge_id + stride),
                from: NodeId(row.to),
                to: NodeId(row.from),
                length_km: row.length_km,
                speed_limit: row.speed,
                lanes: row.lanes,
                oneway: row.oneway,
                requires_treatment: row.treat,
                geometry: geometry.map(|mut poly| {
                    poly.reverse();
                    poly
                }),
            });
        }
    }
    if edges.is_empty() {
        return Err(schema_err(path, "no edge rows"));
    }
    Ok(edges)
}

/// Writes `nodes.csv`, `edges.csv` and `instance.json` into `dir`. Each
/// directed edge becomes its own row, so reloading reproduces the network
/// exactly (ids included).
pub fn save_network(dir: &Path, network: &RoadNetwork) -> Result<()> {
    fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["node_id", "x", "y"]).map_err(Error::Csv)?;
    for n in network.nodes() {
        w.write_record(&[n.id.0.to_string(), n.x.to_string(), n.y.to_string()])
            .map_err(Error::Csv)?;
    }
    let bytes = w.into_inner().map_err(|e| schema_err(dir, &e.to_string()))?;
    crate::artifacts::write_atomic(&dir.join("nodes.csv"), &bytes)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    for e in network.edges() {
        w.serialize(EdgeRow {
            edge_id: e.id.0,
            from: e.from.0,
            to: e.to.0,
            length_km: e.length_km,
            speed: e.speed_limit,
            lanes: e.lanes,
            oneway: true,
            treat: e.requires_treatment,
            geometry: e.geometry.as_ref().map(|poly| to_wkt_linestring(poly)),
        })
        .map_err(Error::Csv)?;
    }
    let bytes = w.into_inner().map_err(|e| schema_err(dir, &e.to_string()))?;
    crate::artifacts::write_atomic(&dir.join("edges.csv"), &bytes)?;

    let header = InstanceHeader {
        speed_unit: network.speed_unit,
        name: network.name.clone(),
    };
    let json = serde_json::to_vec_pretty(&header)?;
    crate::artifacts::write_atomic(&dir.join("instance.json"), &json)?;
    Ok(())
}

/// Loads `instance.json` + `nodes.csv` + `edges.csv` from a directory.
pub fn load_instance_dir(dir: &Path) -> Result<RoadNetwork> {
    let header: InstanceHeader = serde_json::from_slice(&fs::read(dir.join("instance.json"))?)?;
    load_network(&dir.join("nodes.csv"), &dir.join("edges.csv"), &header)
}

/// Writes raw (unexpanded) rows: the generator's output format, where a
/// two-way road is a single `oneway=false` row.
pub(crate) fn write_raw_instance(
    dir: &Path,
    nodes: &[RoadNode],
    rows: &[EdgeRow],
    header: &InstanceHeader,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["node_id", "x", "y"]).map_err(Error::Csv)?;
    for n in nodes {
        w.write_record(&[n.id.0.to_string(), n.x.to_string(), n.y.to_string()])
            .map_err(Error::Csv)?;
    }
    let bytes = w.into_inner().map_err(|e| schema_err(dir, &e.to_string()))?;
    crate::artifacts::write_atomic(&dir.join("nodes.csv"), &bytes)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(Error::Csv)?;
    }
    let bytes = w.into_inner().map_err(|e| schema_err(dir, &e.to_string()))?;
    crate::artifacts::write_atomic(&dir.join("edges.csv"), &bytes)?;

    let json = serde_json::to_vec_pretty(header)?;
    crate::artifacts::write_atomic(&dir.join("instance.json"), &json)?;
    Ok(())
}

pub(crate) fn wkt_linestring(poly: &[(f64, f64)]) -> String {
    to_wkt_linestring(poly)
}

fn parse_wkt_linestring(wkt: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let body = wkt
        .trim()
        .strip_prefix("LINESTRING")
        .ok_or_else(|| format!("expected WKT LINESTRING, got {wkt:?}"))?
        .trim();
    let inner = body
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| "malformed LINESTRING parentheses".to_string())?;
    let mut points = Vec::new();
    for pair in inner.split(',') {
        let mut it = pair.split_whitespace();
        let x: f64 = it
            .next()
            .ok_or("missing x coordinate")?
            .parse()
            .map_err(|e| format!("bad x coordinate: {e}"))?;
        let y: f64 = it
            .next()
            .ok_or("missing y coordinate")?
            .parse()
            .map_err(|e| format!("bad y coordinate: {e}"))?;
        points.push((x, y));
    }
    if points.len() < 2 {
        return Err("LINESTRING needs at least two points".into());
    }
    Ok(points)
}

fn to_wkt_linestring(poly: &[(f64, f64)]) -> String {
    let coords: Vec<String> = poly.iter().map(|(x, y)| format!("{x} {y}")).collect();
    format!("LINESTRING ({})", coords.join(", "))
}

fn schema_err(path: &Path, message: &str) -> Error {
    Error::Schema {
        file: path.display().to_string(),
        message: message.to_string(),
    }
}

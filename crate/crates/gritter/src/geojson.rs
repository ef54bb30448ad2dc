//! GeoJSON export of plans: one LineString feature per route (traversal
//! order, mode segmentation in properties), one Point feature per depot.
//! Edges without stored geometry fall back to straight endpoint segments
//! and the owning feature is flagged `approx_geometry`.

use std::path::Path;

use serde_json::{json, Value};

use crate::fleet::FleetSpec;
use crate::network::RoadNetwork;
use crate::routing::Plan;
use crate::Result;

pub fn plan_to_geojson(network: &RoadNetwork, fleet: &FleetSpec, plan: &Plan) -> Value {
    let mut features = Vec::new();

    for depot in &fleet.depots {
        let node = network.node(depot.node);
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "Point", "coordinates": [node.x, node.y] },
            "properties": {
                "kind": "depot",
                "depot_id": depot.id.0,
                "node_id": depot.node.0,
                "max_vehicles": depot.max_vehicles,
            },
        }));
    }

    for (route_id, route) in plan.routes.iter().enumerate() {
        let mut coords: Vec<[f64; 2]> = Vec::new();
        let mut modes = Vec::with_capacity(route.steps.len());
        let mut edge_ids = Vec::with_capacity(route.steps.len());
        let mut approx = false;
        for step in &route.steps {
            let Some(edge) = network.edge(step.edge) else {
                approx = true;
                continue;
            };
            let poly: Vec<[f64; 2]> = match &edge.geometry {
                Some(p) if p.len() >= 2 => p.iter().map(|&(x, y)| [x, y]).collect(),
                _ => {
                    approx = true;
                    let a = network.node(edge.from);
                    let b = network.node(edge.to);
                    vec![[a.x, a.y], [b.x, b.y]]
                }
            };
            for point in poly {
                if coords.last() != Some(&point) {
                    coords.push(point);
                }
            }
            modes.push(step.mode.to_string());
            edge_ids.push(step.edge.0);
        }
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": coords },
            "properties": {
                "kind": "route",
                "route_id": route_id,
                "depot_id": route.depot.0,
                "modes": modes,
                "edge_ids": edge_ids,
                "distance_km": route.distance_km,
                "duration_min": route.duration_minutes,
                "emissions_kg": route.emissions_kg,
                "salt_lane_km": route.salt_used_lane_km,
                "approx_geometry": approx,
            },
        }));
    }

    json!({ "type": "FeatureCollection", "features": features })
}

pub fn write_geojson(
    path: &Path,
    network: &RoadNetwork,
    fleet: &FleetSpec,
    plan: &Plan,
) -> Result<()> {
    let doc = plan_to_geojson(network, fleet, plan);
    crate::artifacts::write_atomic(path, &serde_json::to_vec_pretty(&doc)?)
}

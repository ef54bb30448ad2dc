//! Depots and vehicle parameters.
//!
//! One vehicle class per instance by default; the limits here feed the
//! feasibility checker and the route construction heuristic. Defaults:
//! spreading speed cap 50 (instance speed unit), salt capacity 166 lane-km,
//! diesel emission factor 2.51 kg CO2 per litre, 120 min and 630 km per
//! route. `op_cost_per_km` and `weight_kg` are carried and echoed in
//! reports but enter no formula.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::network::{NodeId, RoadEdge, RoadNetwork};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DepotId(pub u64);

impl std::fmt::Display for DepotId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Depot {
    pub id: DepotId,
    /// Attachment node in the (post-SCC) network.
    pub node: NodeId,
    /// Vehicle availability limit for this depot.
    pub max_vehicles: u32,
}

/// Vehicle parameters shared by the fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleClass {
    /// Safety cap on spreading speed, instance speed unit.
    pub op_speed_cap: f64,
    /// Salt-spreading capacity, lane-km.
    pub capacity_lane_km: f64,
    /// Fuel consumption, litres per km.
    pub fuel_rate_l_per_km: f64,
    /// CO2 per litre of fuel, kg.
    pub emission_factor: f64,
    /// Per-route duration limit, minutes.
    pub max_route_minutes: f64,
    /// Per-route distance limit, km.
    pub max_route_km: f64,
    /// Operational cost per km; stored and reported, used by no formula.
    pub op_cost_per_km: f64,
    /// Vehicle weight, kg; stored and reported, used by no formula.
    pub weight_kg: f64,
}

impl Default for VehicleClass {
    fn default() -> Self {
        VehicleClass {
            op_speed_cap: 50.0,
            capacity_lane_km: 166.0,
            fuel_rate_l_per_km: 0.35,
            emission_factor: 2.51,
            max_route_minutes: 120.0,
            max_route_km: 630.0,
            op_cost_per_km: 0.0,
            weight_kg: 0.0,
        }
    }
}

impl VehicleClass {
    fn validate(&self) -> Result<()> {
        let positives = [
            ("op_speed_cap", self.op_speed_cap),
            ("capacity_lane_km", self.capacity_lane_km),
            ("fuel_rate_l_per_km", self.fuel_rate_l_per_km),
            ("emission_factor", self.emission_factor),
            ("max_route_minutes", self.max_route_minutes),
            ("max_route_km", self.max_route_km),
        ];
        for (name, v) in positives {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "vehicle {name} must be positive, got {v}"
                )));
            }
        }
        if self.op_cost_per_km < 0.0 || self.weight_kg < 0.0 {
            return Err(Error::InvalidInput(
                "vehicle cost/weight must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Depots plus the shared vehicle class, as read from `fleet.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetSpec {
    pub depots: Vec<Depot>,
    #[serde(default)]
    pub vehicle: VehicleClass,
}

impl FleetSpec {
    /// Validates and normalizes: depots sorted by id, ids unique, nodes
    /// present in `network`.
    pub fn resolve(mut self, network: &RoadNetwork) -> Result<Self> {
        if self.depots.is_empty() {
            return Err(Error::InvalidInput("fleet has no depots".into()));
        }
        self.depots.sort_by_key(|d| d.id);
        let mut seen = BTreeSet::new();
        for d in &self.depots {
            if !seen.insert(d.id) {
                return Err(Error::InvalidInput(format!("duplicate depot id {}", d.id)));
            }
            if d.max_vehicles == 0 {
                return Err(Error::InvalidInput(format!(
                    "depot {} must allow at least one vehicle",
                    d.id
                )));
            }
            if !network.contains_node(d.node) {
                return Err(Error::DepotUnreachable {
                    depot: d.id.0,
                    node: d.node,
                });
            }
        }
        self.vehicle.validate()?;
        Ok(self)
    }

    pub fn depot(&self, id: DepotId) -> Option<&Depot> {
        self.depots.iter().find(|d| d.id == id)
    }

    pub fn load(path: &Path) -> Result<FleetSpec> {
        let spec: FleetSpec = serde_json::from_slice(&std::fs::read(path)?)?;
        Ok(spec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::artifacts::write_atomic(path, &serde_json::to_vec_pretty(self)?)
    }
}

/// Spreading speed on an edge: the road limit capped by the vehicle's
/// operational maximum, `min(speed_limit, op_speed_cap)`.
pub fn effective_speed(vehicle: &VehicleClass, edge: &RoadEdge) -> f64 {
    edge.speed_limit.min(vehicle.op_speed_cap)
}

/// Salt consumed by treating an edge, lane-km. Only meaningful for edges
/// requiring treatment; debug builds assert that contract.
pub fn salt_load(edge: &RoadEdge) -> f64 {
    debug_assert!(
        edge.requires_treatment,
        "salt_load called on non-treatment edge {}",
        edge.id
    );
    edge.lane_km()
}

/// Hours to treat an edge at effective spreading speed.
pub fn treat_hours(vehicle: &VehicleClass, edge: &RoadEdge) -> f64 {
    edge.length_km / effective_speed(vehicle, edge)
}

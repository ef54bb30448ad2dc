//! Plan objectives, recomputed from route steps.
//!
//! Per-edge terms: a treated edge takes `length / min(speed_limit, cap)`
//! hours and a deadheaded edge `length / speed_limit`; emissions are
//! `length * fuel_rate * emission_factor` for every traversed edge,
//! treated or not.

use super::{Plan, Route, StepMode};
use crate::fleet::{treat_hours, VehicleClass};
use crate::network::RoadNetwork;

/// Metrics of one route re-derived from its step sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteMetrics {
    pub duration_minutes: f64,
    pub distance_km: f64,
    pub salt_used_lane_km: f64,
    pub emissions_kg: f64,
}

pub fn route_metrics(route: &Route, network: &RoadNetwork, vehicle: &VehicleClass) -> RouteMetrics {
    let mut hours = 0.0;
    let mut km = 0.0;
    let mut salt = 0.0;
    for step in &route.steps {
        let Some(edge) = network.edge(step.edge) else {
            continue; // unknown edges are reported by the checker
        };
        km += edge.length_km;
        match step.mode {
            StepMode::Treat => {
                hours += treat_hours(vehicle, edge);
                salt += edge.lane_km();
            }
            StepMode::Deadhead => hours += edge.deadhead_hours(),
        }
    }
    RouteMetrics {
        duration_minutes: hours * 60.0,
        distance_km: km,
        salt_used_lane_km: salt,
        emissions_kg: km * vehicle.fuel_rate_l_per_km * vehicle.emission_factor,
    }
}

/// Makespan: the maximum route duration in minutes, 0 for an empty plan.
pub fn evaluate_z1(plan: &Plan, network: &RoadNetwork, vehicle: &VehicleClass) -> f64 {
    plan.routes
        .iter()
        .map(|r| route_metrics(r, network, vehicle).duration_minutes)
        .fold(0.0, f64::max)
}

/// Total CO2 in kg over every traversed edge of every route.
pub fn evaluate_z2(plan: &Plan, network: &RoadNetwork, vehicle: &VehicleClass) -> f64 {
    plan.routes
        .iter()
        .map(|r| route_metrics(r, network, vehicle).emissions_kg)
        .sum()
}

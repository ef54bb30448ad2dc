//! Route construction, feasibility checking and plan objectives.

mod check;
mod objective;
mod solve;

pub use check::{check_feasibility, depot_overrun_fraction, Violation, ViolationKind};
pub use objective::{evaluate_z1, evaluate_z2, route_metrics, RouteMetrics};
pub use solve::{solve_assignment, solve_depot, Selection};

use serde::{Deserialize, Serialize};

use crate::fleet::DepotId;
use crate::network::EdgeId;

/// Whether a step services the edge or merely traverses it. Treatment
/// consumes salt capacity; deadheading does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMode {
    Treat,
    Deadhead,
}

impl std::fmt::Display for StepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepMode::Treat => write!(f, "treat"),
            StepMode::Deadhead => write!(f, "deadhead"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteStep {
    pub edge: EdgeId,
    pub mode: StepMode,
}

/// One vehicle's tour: departs its depot node, traverses edge-connected
/// steps, and returns to the depot. Stored metrics mirror what the steps
/// re-evaluate to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub depot: DepotId,
    pub steps: Vec<RouteStep>,
    pub duration_minutes: f64,
    pub distance_km: f64,
    pub salt_used_lane_km: f64,
    pub emissions_kg: f64,
}

impl Route {
    pub fn treated_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.steps
            .iter()
            .filter(|s| s.mode == StepMode::Treat)
            .map(|s| s.edge)
    }
}

/// A full plan over all depots with headline metrics: `z1` the makespan in
/// minutes, `z2` total emissions in kg CO2, and the number of vehicles
/// (routes) used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub routes: Vec<Route>,
    pub z1_minutes: f64,
    pub z2_kg: f64,
    pub vehicles_per_depot: Vec<(DepotId, u32)>,
    pub violations: Vec<Violation>,
}

impl Plan {
    pub fn empty() -> Plan {
        Plan {
            routes: Vec::new(),
            z1_minutes: 0.0,
            z2_kg: 0.0,
            vehicles_per_depot: Vec::new(),
            violations: Vec::new(),
        }
    }

    /// Total number of vehicles used (NoV).
    pub fn vehicles_used(&self) -> u32 {
        self.routes.len() as u32
    }

    pub fn hard_violations(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.hard)
    }

    pub fn soft_violations(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| !v.hard)
    }
}

//! Feasibility checker shared by the heuristic, the oracle and the CLI.
//!
//! Violations are data, not errors: an empty list means the plan satisfies
//! exact coverage, step continuity (travel only along stored directed
//! edges), start/end at the route's depot, and the per-route duration,
//! distance and salt limits. Depot vehicle capacity is the one soft rule:
//! the constructor opens as many routes as coverage demands and overruns
//! are reported for the upper level to penalize.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Plan, StepMode};
use crate::assign::Assignment;
use crate::fleet::{DepotId, FleetSpec};
use crate::network::{EdgeId, RoadNetwork};
use crate::routing::objective::route_metrics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ViolationKind {
    /// Required assigned edge never treated (coverage).
    MissingTreatment { edge: EdgeId },
    /// Required edge treated more than once (coverage).
    DuplicateTreatment { edge: EdgeId, count: u32 },
    /// Treat step on an edge outside the required set.
    TreatmentNotRequired { route: usize, edge: EdgeId },
    /// Treat step by a route of a different depot than assigned.
    TreatmentWrongDepot {
        route: usize,
        edge: EdgeId,
        assigned: DepotId,
        actual: DepotId,
    },
    /// Step edge id absent from the network.
    UnknownEdge { route: usize, step: usize, edge: EdgeId },
    /// Consecutive steps not connected head-to-tail.
    BrokenContinuity { route: usize, step: usize },
    /// First step does not depart the depot node.
    WrongStart { route: usize },
    /// Last step does not arrive at the depot node.
    WrongEnd { route: usize },
    /// Route depot id absent from the fleet.
    UnknownDepot { route: usize, depot: DepotId },
    DurationExceeded { route: usize, minutes: f64, limit: f64 },
    DistanceExceeded { route: usize, km: f64, limit: f64 },
    SaltExceeded { route: usize, lane_km: f64, limit: f64 },
    /// More routes from a depot than vehicles available (soft).
    DepotOverCapacity { depot: DepotId, used: u32, max: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    #[serde(flatten)]
    pub kind: ViolationKind,
    /// Size of the overrun for limit rules, 0 for structural rules.
    pub excess: f64,
    pub hard: bool,
}

impl Violation {
    fn hard(kind: ViolationKind) -> Violation {
        Violation {
            kind,
            excess: 0.0,
            hard: true,
        }
    }

    fn limit(kind: ViolationKind, excess: f64) -> Violation {
        Violation {
            kind,
            excess,
            hard: true,
        }
    }
}

/// Checks a plan against the full constraint set. Metrics are recomputed
/// from the step sequences; stored route metrics are not trusted.
pub fn check_feasibility(
    plan: &Plan,
    assignment: &Assignment,
    network: &RoadNetwork,
    fleet: &FleetSpec,
) -> Vec<Violation> {
    let mut violations = Vec::new();
    let vehicle = &fleet.vehicle;

    // Coverage: every assigned required edge treated exactly once.
    let mut treat_counts: BTreeMap<EdgeId, u32> = BTreeMap::new();
    for route in &plan.routes {
        for e in route.treated_edges() {
            *treat_counts.entry(e).or_insert(0) += 1;
        }
    }
    for (edge, depot) in assignment.iter() {
        match treat_counts.get(&edge) {
            None => violations.push(Violation::hard(ViolationKind::MissingTreatment { edge })),
            Some(&count) if count > 1 => {
                violations.push(Violation::hard(ViolationKind::DuplicateTreatment {
                    edge,
                    count,
                }))
            }
            _ => {}
        }
        let _ = depot;
    }

    for (ri, route) in plan.routes.iter().enumerate() {
        let Some(depot) = fleet.depot(route.depot) else {
            violations.push(Violation::hard(ViolationKind::UnknownDepot {
                route: ri,
                depot: route.depot,
            }));
            continue;
        };

        // Structural checks: known edges, continuity, depot anchoring.
        let mut structurally_sound = true;
        for (si, step) in route.steps.iter().enumerate() {
            let Some(edge) = network.edge(step.edge) else {
                violations.push(Violation::hard(ViolationKind::UnknownEdge {
                    route: ri,
                    step: si,
                    edge: step.edge,
                }));
                structurally_sound = false;
                continue;
            };
            if step.mode == StepMode::Treat {
                if !edge.requires_treatment {
                    violations.push(Violation::hard(ViolationKind::TreatmentNotRequired {
                        route: ri,
                        edge: step.edge,
                    }));
                } else if let Some(assigned) = assignment.depot_of(step.edge) {
                    if assigned != route.depot {
                        violations.push(Violation::hard(ViolationKind::TreatmentWrongDepot {
                            route: ri,
                            edge: step.edge,
                            assigned,
                            actual: route.depot,
                        }));
                    }
                }
            }
            if si > 0 {
                if let Some(prev) = network.edge(route.steps[si - 1].edge) {
                    if prev.to != edge.from {
                        violations.push(Violation::hard(ViolationKind::BrokenContinuity {
                            route: ri,
                            step: si,
                        }));
                    }
                }
            }
        }
        if let Some(first) = route.steps.first().and_then(|s| network.edge(s.edge)) {
            if first.from != depot.node {
                violations.push(Violation::hard(ViolationKind::WrongStart { route: ri }));
            }
        }
        if let Some(last) = route.steps.last().and_then(|s| network.edge(s.edge)) {
            if last.to != depot.node {
                violations.push(Violation::hard(ViolationKind::WrongEnd { route: ri }));
            }
        }

        if structurally_sound {
            let m = route_metrics(route, network, vehicle);
            if m.duration_minutes > vehicle.max_route_minutes {
                violations.push(Violation::limit(
                    ViolationKind::DurationExceeded {
                        route: ri,
                        minutes: m.duration_minutes,
                        limit: vehicle.max_route_minutes,
                    },
                    m.duration_minutes - vehicle.max_route_minutes,
                ));
            }
            if m.distance_km > vehicle.max_route_km {
                violations.push(Violation::limit(
                    ViolationKind::DistanceExceeded {
                        route: ri,
                        km: m.distance_km,
                        limit: vehicle.max_route_km,
                    },
                    m.distance_km - vehicle.max_route_km,
                ));
            }
            if m.salt_used_lane_km > vehicle.capacity_lane_km {
                violations.push(Violation::limit(
                    ViolationKind::SaltExceeded {
                        route: ri,
                        lane_km: m.salt_used_lane_km,
                        limit: vehicle.capacity_lane_km,
                    },
                    m.salt_used_lane_km - vehicle.capacity_lane_km,
                ));
            }
        }
    }

    // Depot vehicle availability (soft).
    let mut per_depot: BTreeMap<DepotId, u32> = BTreeMap::new();
    for route in &plan.routes {
        *per_depot.entry(route.depot).or_insert(0) += 1;
    }
    for (depot_id, used) in per_depot {
        if let Some(depot) = fleet.depot(depot_id) {
            if used > depot.max_vehicles {
                violations.push(Violation {
                    kind: ViolationKind::DepotOverCapacity {
                        depot: depot_id,
                        used,
                        max: depot.max_vehicles,
                    },
                    excess: (used - depot.max_vehicles) as f64,
                    hard: false,
                });
            }
        }
    }

    violations
}

/// Sum over depots of the fractional vehicle overrun, `(used - max) / max`;
/// the soft-violation magnitude fed into the training reward.
pub fn depot_overrun_fraction(violations: &[Violation]) -> f64 {
    violations
        .iter()
        .filter_map(|v| match v.kind {
            ViolationKind::DepotOverCapacity { used, max, .. } => {
                Some((used - max) as f64 / max as f64)
            }
            _ => None,
        })
        .sum()
}

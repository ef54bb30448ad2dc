//! Constraint-aware constructive routing heuristic.
//!
//! Per depot: open a route, seed it with the farthest untreated edge (by
//! deadhead travel time from the depot to the edge's entry node), then
//! repeatedly append the next untreated edge per the selection rule whose
//! deadhead leg, treatment and return-to-depot leg keep duration, distance
//! and salt capacity feasible. When nothing fits, close the route with the
//! return leg and open the next one. Deadhead legs follow time-shortest
//! paths; edges crossed while deadheading stay untreated unless explicitly
//! selected.

use std::collections::BTreeSet;

use crate::assign::Assignment;
use crate::fleet::{treat_hours, Depot, FleetSpec, VehicleClass};
use crate::network::{EdgeId, RoadNetwork, ShortestPaths};
use crate::routing::check::check_feasibility;
use crate::routing::{Plan, Route, RouteStep, StepMode};
use crate::{par, Error, Result};

/// Order in which untreated candidates are tried: nearest first (default)
/// or farthest first. The opening seed of every route is always the
/// farthest edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    #[default]
    Nearest,
    Farthest,
}

struct RouteBuilder {
    steps: Vec<RouteStep>,
    hours: f64,
    km: f64,
    salt: f64,
    current: crate::network::NodeId,
}

/// Builds routes covering every edge of `assigned` from one depot.
///
/// Errors with [`Error::UnroutableEdge`] when an edge cannot be served even
/// as a route's sole task under time-shortest legs.
pub fn solve_depot(
    network: &RoadNetwork,
    depot: &Depot,
    assigned: &[EdgeId],
    vehicle: &VehicleClass,
    selection: Selection,
) -> Result<Vec<Route>> {
    for &id in assigned {
        let edge = network
            .edge(id)
            .ok_or_else(|| Error::InvalidInput(format!("assigned edge {id} not in network")))?;
        if !edge.requires_treatment {
            return Err(Error::InvalidInput(format!(
                "assigned edge {id} does not require treatment"
            )));
        }
    }

    let to_depot = ShortestPaths::toward(network, depot.node)?;
    let from_depot = ShortestPaths::from_source(network, depot.node)?;

    let mut untreated: BTreeSet<EdgeId> = assigned.iter().copied().collect();
    let mut routes = Vec::new();

    while !untreated.is_empty() {
        // Farthest-seed: max deadhead time from the depot, ties to the
        // lowest edge id (BTreeSet order makes strict > do that).
        let mut seed = None;
        let mut seed_time = f64::NEG_INFINITY;
        for &id in &untreated {
            let tail = network.edge(id).unwrap().from;
            let t = from_depot.time_to(network, tail).ok_or(Error::Unreachable {
                from: depot.node,
                to: tail,
            })?;
            if t > seed_time {
                seed_time = t;
                seed = Some(id);
            }
        }
        let seed = seed.unwrap();

        let mut builder = RouteBuilder {
            steps: Vec::new(),
            hours: 0.0,
            km: 0.0,
            salt: 0.0,
            current: depot.node,
        };

        if !try_append(network, vehicle, &to_depot, &mut builder, seed)? {
            // Sole-task round trip for the error report.
            let e = network.edge(seed).unwrap();
            let entry = network.shortest_travel_time(depot.node, e.from)?;
            let exit = to_depot.path_from(network, e.to)?;
            return Err(Error::UnroutableEdge {
                edge: seed,
                depot: depot.id.0,
                minutes: (entry.time_hours + treat_hours(vehicle, e) + exit.time_hours) * 60.0,
                km: entry.distance_km + e.length_km + exit.distance_km,
                lane_km: e.lane_km(),
            });
        }
        untreated.remove(&seed);

        loop {
            // Screen by optimistic duration, then rank per the rule.
            let reach = ShortestPaths::from_source(network, builder.current)?;
            let mut candidates: Vec<(f64, EdgeId)> = Vec::new();
            for &id in &untreated {
                let e = network.edge(id).unwrap();
                let Some(dt) = reach.time_to(network, e.from) else {
                    continue;
                };
                let Some(ret) = to_depot.time_from(network, e.to) else {
                    continue;
                };
                let optimistic =
                    (builder.hours + dt + treat_hours(vehicle, e) + ret) * 60.0;
                if optimistic > vehicle.max_route_minutes {
                    continue;
                }
                if builder.salt + e.lane_km() > vehicle.capacity_lane_km {
                    continue;
                }
                candidates.push((dt, id));
            }
            match selection {
                Selection::Nearest => {
                    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                }
                Selection::Farthest => {
                    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)))
                }
            }

            let mut appended = None;
            for &(_, id) in &candidates {
                if try_append(network, vehicle, &to_depot, &mut builder, id)? {
                    appended = Some(id);
                    break;
                }
            }
            match appended {
                Some(id) => {
                    untreated.remove(&id);
                }
                None => break,
            }
        }

        // Close with the return leg; it was verified at every append.
        let ret = to_depot.path_from(network, builder.current)?;
        for id in &ret.edges {
            builder.steps.push(RouteStep {
                edge: *id,
                mode: StepMode::Deadhead,
            });
        }
        builder.hours += ret.time_hours;
        builder.km += ret.distance_km;

        routes.push(Route {
            depot: depot.id,
            steps: builder.steps,
            duration_minutes: builder.hours * 60.0,
            distance_km: builder.km,
            salt_used_lane_km: builder.salt,
            emissions_kg: builder.km * vehicle.fuel_rate_l_per_km * vehicle.emission_factor,
        });
    }

    Ok(routes)
}

/// Appends deadhead legs plus the treat step for `id` if the exact totals
/// (including the would-be return leg) stay within limits. Returns whether
/// the append happened.
fn try_append(
    network: &RoadNetwork,
    vehicle: &VehicleClass,
    to_depot: &ShortestPaths,
    builder: &mut RouteBuilder,
    id: EdgeId,
) -> Result<bool> {
    let e = network.edge(id).unwrap();
    let leg = match network.shortest_travel_time(builder.current, e.from) {
        Ok(p) => p,
        Err(Error::Unreachable { .. }) => return Ok(false),
        Err(err) => return Err(err),
    };
    let ret = match to_depot.path_from(network, e.to) {
        Ok(p) => p,
        Err(Error::Unreachable { .. }) => return Ok(false),
        Err(err) => return Err(err),
    };

    let hours = builder.hours + leg.time_hours + treat_hours(vehicle, e);
    let km = builder.km + leg.distance_km + e.length_km;
    let salt = builder.salt + e.lane_km();
    if (hours + ret.time_hours) * 60.0 > vehicle.max_route_minutes
        || km + ret.distance_km > vehicle.max_route_km
        || salt > vehicle.capacity_lane_km
    {
        return Ok(false);
    }

    for leg_edge in &leg.edges {
        builder.steps.push(RouteStep {
            edge: *leg_edge,
            mode: StepMode::Deadhead,
        });
    }
    builder.steps.push(RouteStep {
        edge: id,
        mode: StepMode::Treat,
    });
    builder.hours = hours;
    builder.km = km;
    builder.salt = salt;
    builder.current = e.to;
    Ok(true)
}

/// Runs [`solve_depot`] for every depot of the assignment and assembles the
/// plan. Depot subproblems are independent and solved in parallel when the
/// `parallel` feature is on; results are collected in depot order either
/// way, so the plan is identical across builds.
pub fn solve_assignment(
    network: &RoadNetwork,
    assignment: &Assignment,
    fleet: &FleetSpec,
    selection: Selection,
) -> Result<Plan> {
    assignment.validate(network, &fleet.depots)?;

    let jobs: Vec<(&Depot, Vec<EdgeId>)> = fleet
        .depots
        .iter()
        .map(|d| (d, assignment.edges_for(d.id)))
        .collect();
    let results = par::map_ordered(jobs, |(depot, edges)| {
        solve_depot(network, depot, &edges, &fleet.vehicle, selection)
    });

    let mut routes = Vec::new();
    for result in results {
        routes.extend(result?);
    }

    let z1 = routes.iter().map(|r| r.duration_minutes).fold(0.0, f64::max);
    let z2 = routes.iter().map(|r| r.emissions_kg).sum();
    let vehicles_per_depot = fleet
        .depots
        .iter()
        .map(|d| {
            (
                d.id,
                routes.iter().filter(|r| r.depot == d.id).count() as u32,
            )
        })
        .collect();

    let mut plan = Plan {
        routes,
        z1_minutes: z1,
        z2_kg: z2,
        vehicles_per_depot,
        violations: Vec::new(),
    };
    plan.violations = check_feasibility(&plan, assignment, network, fleet);
    Ok(plan)
}

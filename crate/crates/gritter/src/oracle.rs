//! Exhaustive optimum for micro instances (single depot, at most 8
//! required edges).
//!
//! Enumerates every set-partition of the required edges into routes and
//! every service order within each route, connecting legs by time-shortest
//! paths exactly like the constructive heuristic. Infeasible candidates
//! are discarded against the same duration/distance/salt limits the shared
//! checker enforces. Returns the lexicographic minimum of (Z1, Z2) plus
//! the minimum of the raw scalarized sum Z1 + Z2 over feasible candidates.

use std::collections::BTreeMap;

use crate::fleet::{treat_hours, Depot, VehicleClass};
use crate::network::{EdgeId, NodeId, PathResult, RoadNetwork, ShortestPaths};
use crate::routing::{Plan, Route, RouteStep, StepMode};
use crate::{Error, Result};

pub const MAX_ORACLE_EDGES: usize = 8;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub z1_minutes: f64,
    pub z2_kg: f64,
    /// Minimum of raw `Z1 + Z2` over all feasible candidates; may belong to
    /// a different candidate than the lex-optimal plan.
    pub scalarized_min: f64,
    pub plan: Plan,
}

#[derive(Debug, Clone)]
pub enum OracleOutcome {
    Feasible(Box<OracleSolution>),
    Infeasible,
}

/// Candidate route stats as the oracle accumulates them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingStats {
    pub duration_minutes: f64,
    pub distance_km: f64,
    pub salt_lane_km: f64,
}

pub struct MicroOracle<'a> {
    network: &'a RoadNetwork,
    depot: &'a Depot,
    vehicle: &'a VehicleClass,
    edges: Vec<EdgeId>,
    legs: BTreeMap<(NodeId, NodeId), PathResult>,
}

impl<'a> MicroOracle<'a> {
    pub fn new(
        network: &'a RoadNetwork,
        depot: &'a Depot,
        required: &[EdgeId],
        vehicle: &'a VehicleClass,
    ) -> Result<Self> {
        if required.len() > MAX_ORACLE_EDGES {
            return Err(Error::InvalidInput(format!(
                "oracle is capped at {MAX_ORACLE_EDGES} required edges, got {}",
                required.len()
            )));
        }
        let mut edges: Vec<EdgeId> = required.to_vec();
        edges.sort();
        edges.dedup();
        for &id in &edges {
            if network.edge(id).is_none() {
                return Err(Error::InvalidInput(format!("unknown edge {id}")));
            }
        }

        // Pairwise legs between depot/exit nodes and entry/depot nodes.
        let mut targets: Vec<NodeId> = edges
            .iter()
            .map(|&id| network.edge(id).unwrap().from)
            .collect();
        targets.push(depot.node);
        targets.sort();
        targets.dedup();
        let mut sources: Vec<NodeId> = edges
            .iter()
            .map(|&id| network.edge(id).unwrap().to)
            .collect();
        sources.push(depot.node);
        sources.sort();
        sources.dedup();

        let mut legs = BTreeMap::new();
        for &target in &targets {
            let sp = ShortestPaths::toward(network, target)?;
            for &source in &sources {
                let path = sp.path_from(network, source)?;
                legs.insert((source, target), path);
            }
        }
        Ok(MicroOracle {
            network,
            depot,
            vehicle,
            edges,
            legs,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn leg(&self, from: NodeId, to: NodeId) -> &PathResult {
        &self.legs[&(from, to)]
    }

    /// Duration/distance/salt of one route serving `order` (indices into
    /// the oracle's edge list), including the return leg.
    pub fn ordering_stats(&self, order: &[usize]) -> OrderingStats {
        let mut hours = 0.0;
        let mut km = 0.0;
        let mut salt = 0.0;
        let mut at = self.depot.node;
        for &i in order {
            let e = self.network.edge(self.edges[i]).unwrap();
            let leg = self.leg(at, e.from);
            hours += leg.time_hours + treat_hours(self.vehicle, e);
            km += leg.distance_km + e.length_km;
            salt += e.lane_km();
            at = e.to;
        }
        let back = self.leg(at, self.depot.node);
        OrderingStats {
            duration_minutes: (hours + back.time_hours) * 60.0,
            distance_km: km + back.distance_km,
            salt_lane_km: salt,
        }
    }

    /// The oracle's own feasibility determination for one candidate route;
    /// tests cross-validate this against the shared checker.
    pub fn ordering_feasible(&self, order: &[usize]) -> bool {
        let s = self.ordering_stats(order);
        s.duration_minutes <= self.vehicle.max_route_minutes
            && s.distance_km <= self.vehicle.max_route_km
            && s.salt_lane_km <= self.vehicle.capacity_lane_km
    }

    /// Materializes the route (with step sequence) for one ordering.
    pub fn route_for_ordering(&self, order: &[usize]) -> Route {
        let mut steps = Vec::new();
        let mut at = self.depot.node;
        for &i in order {
            let e = self.network.edge(self.edges[i]).unwrap();
            for id in &self.leg(at, e.from).edges {
                steps.push(RouteStep {
                    edge: *id,
                    mode: StepMode::Deadhead,
                });
            }
            steps.push(RouteStep {
                edge: self.edges[i],
                mode: StepMode::Treat,
            });
            at = e.to;
        }
        for id in &self.leg(at, self.depot.node).edges {
            steps.push(RouteStep {
                edge: *id,
                mode: StepMode::Deadhead,
            });
        }
        let stats = self.ordering_stats(order);
        Route {
            depot: self.depot.id,
            steps,
            duration_minutes: stats.duration_minutes,
            distance_km: stats.distance_km,
            salt_used_lane_km: stats.salt_lane_km,
            emissions_kg: stats.distance_km
                * self.vehicle.fuel_rate_l_per_km
                * self.vehicle.emission_factor,
        }
    }

    /// Feasible (duration, distance, order) candidates of one edge subset,
    /// reduced to the (duration asc, distance desc) Pareto frontier.
    fn subset_frontier(&self, mask: u32) -> Option<Vec<(f64, f64, Vec<usize>)>> {
        let members: Vec<usize> = (0..self.edges.len()).filter(|i| mask >> i & 1 == 1).collect();
        let salt: f64 = members
            .iter()
            .map(|&i| self.network.edge(self.edges[i]).unwrap().lane_km())
            .sum();
        if salt > self.vehicle.capacity_lane_km {
            return None;
        }
        let mut feasible: Vec<(f64, f64, Vec<usize>)> = Vec::new();
        let mut scratch = members;
        permutations(&mut scratch, 0, &mut |order| {
            let s = self.ordering_stats(order);
            if s.duration_minutes <= self.vehicle.max_route_minutes
                && s.distance_km <= self.vehicle.max_route_km
            {
                feasible.push((s.duration_minutes, s.distance_km, order.to_vec()));
            }
        });
        if feasible.is_empty() {
            return None;
        }
        feasible.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut frontier: Vec<(f64, f64, Vec<usize>)> = Vec::new();
        for cand in feasible {
            if frontier.last().map_or(true, |last| cand.1 < last.1) {
                frontier.push(cand);
            }
        }
        Some(frontier)
    }

    pub fn solve(&self) -> OracleOutcome {
        let n = self.edges.len();
        if n == 0 {
            return OracleOutcome::Feasible(Box::new(OracleSolution {
                z1_minutes: 0.0,
                z2_kg: 0.0,
                scalarized_min: 0.0,
                plan: Plan::empty(),
            }));
        }
        let emis = |km: f64| km * self.vehicle.fuel_rate_l_per_km * self.vehicle.emission_factor;

        let mut frontiers: Vec<Option<Vec<(f64, f64, Vec<usize>)>>> = vec![None; 1 << n];
        for mask in 1u32..(1 << n) {
            frontiers[mask as usize] = self.subset_frontier(mask);
        }

        let mut best: Option<(f64, f64, Vec<(u32, usize)>)> = None; // blocks + frontier index
        let mut scalarized_min = f64::INFINITY;

        for partition in partitions(n) {
            let Some(fronts) = partition
                .iter()
                .map(|&m| frontiers[m as usize].as_deref())
                .collect::<Option<Vec<_>>>()
            else {
                continue;
            };

            // Lex objective: Z1* is the max over blocks of their fastest
            // ordering; then each block takes its smallest distance with
            // duration <= Z1*.
            let z1: f64 = fronts.iter().map(|f| f[0].0).fold(0.0, f64::max);
            let mut km_total = 0.0;
            let mut choice = Vec::with_capacity(fronts.len());
            for (bi, front) in fronts.iter().enumerate() {
                let idx = front
                    .iter()
                    .rposition(|c| c.0 <= z1)
                    .expect("front[0].0 <= z1 by construction");
                km_total += front[idx].1;
                choice.push((partition[bi], idx));
            }
            let z2 = emis(km_total);
            if best
                .as_ref()
                .map_or(true, |(bz1, bz2, _)| (z1, z2) < (*bz1, *bz2))
            {
                best = Some((z1, z2, choice));
            }

            // Raw-sum sweep over candidate makespan levels.
            let mut levels: Vec<f64> = fronts
                .iter()
                .flat_map(|f| f.iter().map(|c| c.0))
                .filter(|&d| d >= z1)
                .collect();
            levels.sort_by(f64::total_cmp);
            levels.dedup();
            for level in levels {
                let mut realized_z1: f64 = 0.0;
                let mut km = 0.0;
                for front in &fronts {
                    let idx = front.iter().rposition(|c| c.0 <= level).unwrap();
                    realized_z1 = realized_z1.max(front[idx].0);
                    km += front[idx].1;
                }
                scalarized_min = scalarized_min.min(realized_z1 + emis(km));
            }
        }

        let Some((z1, z2, choice)) = best else {
            return OracleOutcome::Infeasible;
        };
        let routes: Vec<Route> = choice
            .iter()
            .map(|&(mask, idx)| {
                let order = &frontiers[mask as usize].as_ref().unwrap()[idx].2;
                self.route_for_ordering(order)
            })
            .collect();
        let plan = Plan {
            z1_minutes: z1,
            z2_kg: z2,
            vehicles_per_depot: vec![(self.depot.id, routes.len() as u32)],
            routes,
            violations: Vec::new(),
        };
        OracleOutcome::Feasible(Box::new(OracleSolution {
            z1_minutes: z1,
            z2_kg: z2,
            scalarized_min,
            plan,
        }))
    }
}

/// Convenience entry point mirroring the CLI `oracle` subcommand.
pub fn brute_force_oracle(
    network: &RoadNetwork,
    depot: &Depot,
    required: &[EdgeId],
    vehicle: &VehicleClass,
) -> Result<OracleOutcome> {
    Ok(MicroOracle::new(network, depot, required, vehicle)?.solve())
}

/// All set-partitions of `{0..n-1}` as block bitmasks, in restricted-growth
/// order (deterministic; also how argmin ties resolve).
pub fn partitions(n: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    loop {
        let blocks = rgs.iter().copied().max().unwrap_or(0) + 1;
        let mut masks = vec![0u32; blocks];
        for (i, &b) in rgs.iter().enumerate() {
            masks[b] |= 1 << i;
        }
        out.push(masks);

        // Next restricted growth string.
        let mut i = n.wrapping_sub(1);
        loop {
            if i == 0 || i == usize::MAX {
                return out;
            }
            let prefix_max = rgs[..i].iter().copied().max().unwrap();
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for v in rgs[i + 1..].iter_mut() {
                    *v = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Heap's-algorithm permutation visitor.
pub fn permutations(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    let n = items.len();
    if k == n {
        visit(items);
        return;
    }
    for i in k..n {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts_are_bell_numbers() {
        assert_eq!(partitions(1).len(), 1);
        assert_eq!(partitions(2).len(), 2);
        assert_eq!(partitions(3).len(), 5);
        assert_eq!(partitions(4).len(), 15);
        assert_eq!(partitions(8).len(), 4140);
    }

    #[test]
    fn permutation_count_is_factorial() {
        let mut items: Vec<usize> = (0..5).collect();
        let mut count = 0;
        permutations(&mut items, 0, &mut |_| count += 1);
        assert_eq!(count, 120);
    }

    #[test]
    fn every_partition_covers_every_element_once() {
        for parts in partitions(6) {
            let mut union = 0u32;
            let mut sum = 0u32;
            for m in parts {
                union |= m;
                sum += m.count_ones();
            }
            assert_eq!(union, (1 << 6) - 1);
            assert_eq!(sum, 6);
        }
    }
}

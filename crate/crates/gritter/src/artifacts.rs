//! Plan artifacts on disk: per-vehicle route CSVs, the plan summary JSON,
//! the training log and the run-config echo. All writes are atomic
//! (temp file + rename) so readers never observe partial artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::fleet::{DepotId, FleetSpec, VehicleClass};
use crate::network::{EdgeId, RoadNetwork};
use crate::policy::IterationRecord;
use crate::routing::{Plan, Route, RouteStep, StepMode, Violation};
use crate::{Error, Result};

/// Writes `bytes` to `path` via a sibling temp file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Summary mirror of a plan's headline metrics, as persisted to
/// `plan_summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    #[serde(rename = "Z1_min")]
    pub z1_min: f64,
    #[serde(rename = "Z2_kg")]
    pub z2_kg: f64,
    #[serde(rename = "NoV")]
    pub nov: u32,
    pub nov_per_depot: Vec<(DepotId, u32)>,
    pub violations: Vec<Violation>,
}

impl PlanSummary {
    pub fn from_plan(plan: &Plan) -> PlanSummary {
        PlanSummary {
            z1_min: plan.z1_minutes,
            z2_kg: plan.z2_kg,
            nov: plan.vehicles_used(),
            nov_per_depot: plan.vehicles_per_depot.clone(),
            violations: plan.violations.clone(),
        }
    }
}

pub fn write_plan_summary(path: &Path, plan: &Plan) -> Result<()> {
    let summary = PlanSummary::from_plan(plan);
    write_atomic(path, &serde_json::to_vec_pretty(&summary)?)
}

pub fn read_plan_summary(path: &Path) -> Result<PlanSummary> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct RouteCsvRow {
    route_id: usize,
    depot_id: u64,
    seq: usize,
    edge_id: u64,
    mode: StepMode,
    cum_km: f64,
    cum_min: f64,
    cum_kg_co2: f64,
}

/// Writes one CSV per route under `dir/routes/route_NNN.csv` with
/// cumulative distance, time and emissions per step. Returns the file list.
pub fn write_route_csvs(
    dir: &Path,
    plan: &Plan,
    network: &RoadNetwork,
    vehicle: &VehicleClass,
) -> Result<Vec<PathBuf>> {
    let routes_dir = dir.join("routes");
    fs::create_dir_all(&routes_dir)?;
    let mut files = Vec::new();
    for (route_id, route) in plan.routes.iter().enumerate() {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut hours = 0.0;
        let mut km = 0.0;
        for (seq, step) in route.steps.iter().enumerate() {
            let edge = network.edge(step.edge).ok_or_else(|| {
                Error::InvalidInput(format!("route references unknown edge {}", step.edge))
            })?;
            km += edge.length_km;
            hours += match step.mode {
                StepMode::Treat => crate::fleet::treat_hours(vehicle, edge),
                StepMode::Deadhead => edge.deadhead_hours(),
            };
            w.serialize(RouteCsvRow {
                route_id,
                depot_id: route.depot.0,
                seq,
                edge_id: step.edge.0,
                mode: step.mode,
                cum_km: km,
                cum_min: hours * 60.0,
                cum_kg_co2: km * vehicle.fuel_rate_l_per_km * vehicle.emission_factor,
            })
            .map_err(Error::Csv)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let path = routes_dir.join(format!("route_{route_id:03}.csv"));
        write_atomic(&path, &bytes)?;
        files.push(path);
    }
    Ok(files)
}

/// Reads a per-route CSV back into a [`Route`].
pub fn read_route_csv(path: &Path, network: &RoadNetwork) -> Result<Route> {
    let mut reader = csv::Reader::from_path(path).map_err(Error::Csv)?;
    let mut steps = Vec::new();
    let mut depot = DepotId(0);
    let mut last = None;
    for record in reader.deserialize() {
        let row: RouteCsvRow = record.map_err(Error::Csv)?;
        depot = DepotId(row.depot_id);
        steps.push(RouteStep {
            edge: EdgeId(row.edge_id),
            mode: row.mode,
        });
        last = Some(row);
    }
    let (duration, km, co2) = last
        .map(|r| (r.cum_min, r.cum_km, r.cum_kg_co2))
        .unwrap_or((0.0, 0.0, 0.0));
    let salt = steps
        .iter()
        .filter(|s| s.mode == StepMode::Treat)
        .filter_map(|s| network.edge(s.edge))
        .map(|e| e.lane_km())
        .sum();
    Ok(Route {
        depot,
        steps,
        duration_minutes: duration,
        distance_km: km,
        salt_used_lane_km: salt,
        emissions_kg: co2,
    })
}

/// `training_log.csv`: one row per iteration including the baseline row 0.
pub fn write_training_log(path: &Path, log: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iter", "Z1_min", "Z2_kg", "NoV", "reward", "best_so_far"])
        .map_err(Error::Csv)?;
    for rec in log {
        w.write_record(&[
            rec.iter.to_string(),
            rec.z1_minutes.to_string(),
            rec.z2_kg.to_string(),
            rec.vehicles.to_string(),
            rec.reward.to_string(),
            rec.best_so_far.to_string(),
        ])
        .map_err(Error::Csv)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    write_atomic(path, &bytes)
}

/// FNV-1a of the canonical JSON encoding; recorded with run artifacts so
/// reruns can verify they used the same configuration.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let json = serde_json::to_vec(value)?;
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in json {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    Ok(format!("{hash:016x}"))
}

/// Echo of the exact configuration a run used, written next to its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunEcho<T> {
    pub config: T,
    pub config_hash: String,
}

pub fn write_run_echo<T: Serialize>(path: &Path, config: &T) -> Result<()> {
    let echo = RunEcho {
        config_hash: config_hash(config)?,
        config,
    };
    write_atomic(path, &serde_json::to_vec_pretty(&echo)?)
}

/// Preprocessing statistics block persisted by the preprocess command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub nodes_before: usize,
    pub edges_before: usize,
    pub nodes_after_scc: usize,
    pub edges_after_scc: usize,
    pub nodes_after: usize,
    pub edges_after: usize,
    pub treated_edges: usize,
    pub treated_km: f64,
    pub treated_lane_km: f64,
    pub total_km: f64,
    pub oneway_fraction: f64,
}

/// load -> largest SCC -> chain compression with depots protected, plus the
/// before/after statistics block. Fails if any depot is pruned by the SCC.
pub fn preprocess(network: &RoadNetwork, fleet: &FleetSpec) -> Result<(RoadNetwork, PreprocessStats)> {
    let nodes_before = network.node_count();
    let edges_before = network.edge_count();

    let core = crate::network::largest_scc(network)?;
    for d in &fleet.depots {
        if !core.contains_node(d.node) {
            return Err(Error::DepotUnreachable {
                depot: d.id.0,
                node: d.node,
            });
        }
    }
    let protected: std::collections::BTreeSet<_> = fleet.depots.iter().map(|d| d.node).collect();
    let compressed = crate::network::compress_chains(&core, &protected)?;

    let stats = PreprocessStats {
        nodes_before,
        edges_before,
        nodes_after_scc: core.node_count(),
        edges_after_scc: core.edge_count(),
        nodes_after: compressed.node_count(),
        edges_after: compressed.edge_count(),
        treated_edges: compressed.required_edges().count(),
        treated_km: compressed.treated_km(),
        treated_lane_km: compressed.treated_lane_km(),
        total_km: compressed.edges().iter().map(|e| e.length_km).sum(),
        oneway_fraction: compressed.structural_oneway_fraction(),
    };
    Ok((compressed, stats))
}

/// Loads a full instance directory: network plus fleet, with the fleet
/// resolved against the network.
pub fn load_instance(dir: &Path) -> Result<(RoadNetwork, FleetSpec)> {
    let network = crate::network::load_instance_dir(dir)?;
    let fleet = FleetSpec::load(&dir.join("fleet.json"))?.resolve(&network)?;
    Ok((network, fleet))
}

/// Persists a network + fleet pair as an instance directory (canonical
/// directed-row form).
pub fn save_instance(dir: &Path, network: &RoadNetwork, fleet: &FleetSpec) -> Result<()> {
    crate::network::save_network(dir, network)?;
    fleet.save(&dir.join("fleet.json"))
}

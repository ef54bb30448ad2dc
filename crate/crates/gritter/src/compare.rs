//! Two-planner comparison harness: one-shot nearest-depot baseline vs the
//! policy-refined loop on identical instances, identical routing heuristic,
//! identical checker. Instances run in parallel under the `parallel`
//! feature; report rows keep instance order either way.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::fleet::FleetSpec;
use crate::network::RoadNetwork;
use crate::policy::{plan_objective, train_loop, TrainConfig};
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    KdtreeNn,
    KdtreePpoNn,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::KdtreeNn => write!(f, "kdtree-nn"),
            Method::KdtreePpoNn => write!(f, "kdtree-ppo-nn"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodRow {
    pub instance: String,
    pub method: Method,
    pub z1_minutes: f64,
    pub z2_kg: f64,
    pub vehicles: u32,
    /// Scalarized objective normalized by the instance's baseline.
    pub objective: f64,
    pub hard_violations: usize,
    pub soft_violations: usize,
    pub wall_seconds: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<MethodRow>,
}

impl ComparisonReport {
    /// Rows for one instance as (baseline, refined) pairs.
    pub fn paired(&self) -> Vec<(&MethodRow, &MethodRow)> {
        let mut pairs = Vec::new();
        for chunk in self.rows.chunks(2) {
            if let [a, b] = chunk {
                pairs.push((a, b));
            }
        }
        pairs
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "instance",
            "method",
            "Z1_min",
            "Z2_kg",
            "NoV",
            "objective",
            "hard_violations",
            "soft_violations",
            "wall_s",
            "failed",
        ])
        .map_err(Error::Csv)?;
        for r in &self.rows {
            w.write_record(&[
                r.instance.clone(),
                r.method.to_string(),
                r.z1_minutes.to_string(),
                r.z2_kg.to_string(),
                r.vehicles.to_string(),
                r.objective.to_string(),
                r.hard_violations.to_string(),
                r.soft_violations.to_string(),
                r.wall_seconds.to_string(),
                r.failed.to_string(),
            ])
            .map_err(Error::Csv)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        crate::artifacts::write_atomic(path, &bytes)
    }
}

/// One preprocessed instance ready for comparison.
pub struct ComparisonInstance {
    pub name: String,
    pub network: RoadNetwork,
    pub fleet: FleetSpec,
}

/// Runs both planners on every instance. `template.iterations` drives the
/// refined arm; the baseline arm is the identical loop at 0 iterations, so
/// any metric difference is attributable to the assignment policy alone.
/// Per-instance failures mark both rows failed and the run continues.
pub fn run_comparison(
    instances: &[ComparisonInstance],
    template: &TrainConfig,
) -> ComparisonReport {
    let jobs: Vec<(usize, &ComparisonInstance)> = instances.iter().enumerate().collect();
    let rows = par::map_ordered(jobs, |(index, inst)| {
        let mut rows = Vec::with_capacity(2);
        let mut baseline_cfg = template.clone();
        baseline_cfg.iterations = 0;
        baseline_cfg.seed = template.seed.wrapping_add(index as u64);
        let mut refined_cfg = template.clone();
        refined_cfg.seed = baseline_cfg.seed;

        for (method, cfg) in [
            (Method::KdtreeNn, baseline_cfg),
            (Method::KdtreePpoNn, refined_cfg),
        ] {
            let start = Instant::now();
            let row = match train_loop(&inst.network, &inst.fleet, &cfg) {
                Ok(outcome) => {
                    let plan = &outcome.best_plan;
                    let overrun =
                        crate::routing::depot_overrun_fraction(&plan.violations);
                    MethodRow {
                        instance: inst.name.clone(),
                        method,
                        z1_minutes: plan.z1_minutes,
                        z2_kg: plan.z2_kg,
                        vehicles: plan.vehicles_used(),
                        objective: plan_objective(
                            plan.z1_minutes,
                            plan.z2_kg,
                            overrun,
                            outcome.baseline,
                            &cfg.weights,
                        ),
                        hard_violations: plan.hard_violations().count(),
                        soft_violations: plan.soft_violations().count(),
                        wall_seconds: start.elapsed().as_secs_f64(),
                        failed: false,
                    }
                }
                Err(_) => MethodRow {
                    instance: inst.name.clone(),
                    method,
                    z1_minutes: f64::NAN,
                    z2_kg: f64::NAN,
                    vehicles: 0,
                    objective: f64::NAN,
                    hard_violations: 0,
                    soft_violations: 0,
                    wall_seconds: start.elapsed().as_secs_f64(),
                    failed: true,
                },
            };
            rows.push(row);
        }
        rows
    });
    ComparisonReport {
        rows: rows.into_iter().flatten().collect(),
    }
}

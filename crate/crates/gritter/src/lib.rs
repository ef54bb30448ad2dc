//! Bi-level planner for winter road salting on directed road networks.
//!
//! The upper level assigns treatment-required road segments to depots: a
//! deterministic k-d-tree nearest-depot baseline, refined by a small
//! categorical policy trained with PPO against lower-level feedback. The
//! lower level builds feasible per-depot salting routes with a
//! constraint-aware nearest-neighbour heuristic and scores plans by
//! makespan (`Z1`, minutes) and fleet CO2 emissions (`Z2`, kg).
//!
//! Modules follow the pipeline order: [`network`] ingestion and
//! simplification, [`fleet`] parameters, [`assign`] segment-to-depot
//! assignment, [`routing`] construction/checking/objectives, [`policy`]
//! training, [`synth`] instance generation, [`oracle`] exhaustive
//! micro-instance optimum, [`compare`] the two-planner harness, and
//! [`artifacts`]/[`geojson`] on-disk outputs.

pub mod artifacts;
pub mod assign;
pub mod compare;
pub mod fleet;
pub mod geojson;
pub mod network;
pub mod oracle;
pub mod policy;
pub mod routing;
pub mod synth;

mod error;
mod par;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

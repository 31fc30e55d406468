//! Discrete-time simulator for fleets of electric autonomous ground vehicles
//! serving an aluminium smelter.
//!
//! The crate is organised by subsystem:
//!
//! - [`plant_graph`]: plant map, per-edge visit values with logistic forgetting,
//!   dynamic traverse times and Dijkstra routing.
//! - [`energy`]: battery state of charge, traction consumption with regenerative
//!   braking, adaptive range estimation, plug charging and battery swap.
//! - [`fsm`]: the vehicle state machine (Idle / Charge / Routine groups).
//! - [`dispatch`]: the centralised Plant Manager and the per-vehicle
//!   Decentralised Task Manager cost functions.
//! - [`requests`]: stochastic plant requests, Gaussian service times, request queue.
//! - [`engine`]: the fixed-step simulation loop and its metrics.
//! - [`config`], [`output`], [`sweep`], [`cli`]: scenario files, CSV/JSON outputs,
//!   batch sweeps and the command-line entry point.
//!
//! Runnable walkthroughs for each subsystem live in the crate's `examples/` directory.

pub mod cli;
pub mod config;
pub mod dispatch;
pub mod energy;
pub mod engine;
pub mod fsm;
pub mod output;
pub mod plant_graph;
pub mod requests;
pub mod rng;
pub mod sweep;

use serde::{Deserialize, Serialize};

/// Identifier of a vehicle within one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VehicleId(pub u32);

impl std::fmt::Display for VehicleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub use dispatch::CostWeights;
pub use engine::{run, MetricsLog, SimConfig};
pub use plant_graph::{DecayParams, PlantGraph};

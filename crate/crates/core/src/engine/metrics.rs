//! Recorded time series and their summaries.

use serde::Serialize;

use crate::dispatch::CandidateScore;
use crate::fsm::{StateGroup, VehicleClass, VehicleState};
use crate::requests::{Request, RequestKind, SECONDS_PER_DAY};
use crate::VehicleId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleRecord {
    pub id: VehicleId,
    pub class: VehicleClass,
    /// Seconds spent per state, indexed by [`VehicleState::index`].
    pub state_seconds: [f64; 10],
    pub stranded: bool,
}

impl VehicleRecord {
    pub fn total_seconds(&self) -> f64 {
        self.state_seconds.iter().sum()
    }

    pub fn group_seconds(&self, group: StateGroup) -> f64 {
        VehicleState::ALL
            .iter()
            .filter(|s| s.group() == group)
            .map(|s| self.state_seconds[s.index()])
            .sum()
    }
}

/// Cumulative traversal counts per edge (dense edge order) at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageSnapshot {
    pub time_s: f64,
    pub counts: Vec<u64>,
}

impl CoverageSnapshot {
    /// Share of edges, in percent, traversed at most `threshold` times.
    pub fn percent_at_or_below(&self, threshold: u64) -> f64 {
        percent_at_or_below(&self.counts, threshold)
    }
}

pub fn percent_at_or_below(counts: &[u64], threshold: u64) -> f64 {
    if counts.is_empty() {
        return 100.0;
    }
    let n = counts.iter().filter(|&&c| c <= threshold).count();
    100.0 * n as f64 / counts.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureEvent {
    pub time_s: f64,
    pub vehicle: VehicleId,
    pub state: VehicleState,
    /// Map id of the edge the vehicle stopped on, if it was on one.
    pub edge: Option<u32>,
    pub unserved_wh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyTotals {
    pub consumed_wh: f64,
    pub regenerated_wh: f64,
    pub delivered_wh: f64,
    pub initial_soc_wh: f64,
    pub final_soc_wh: f64,
    pub unserved_wh: f64,
}

impl EnergyTotals {
    /// Relative mismatch between net consumption and what left the batteries.
    pub fn balance_error(&self) -> f64 {
        let net = self.consumed_wh - self.regenerated_wh;
        let drawn = self.initial_soc_wh + self.delivered_wh - self.final_soc_wh + self.unserved_wh;
        (net - drawn).abs() / net.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchRecord {
    pub time_s: f64,
    pub request: u64,
    pub candidate: CandidateScore,
    pub chosen: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MetricsLog {
    pub duration_s: f64,
    pub step_s: f64,
    /// Open requests per step, in [`RequestKind::ALL`] order, after the step.
    pub queue_counts: Vec<[u32; 4]>,
    /// Vehicles in a Charge-group state per step.
    pub charge_counts: Vec<u32>,
    pub vehicles: Vec<VehicleRecord>,
    pub requests: Vec<Request>,
    pub coverage: Vec<CoverageSnapshot>,
    /// Map ids of the edges, in dense order.
    pub edge_labels: Vec<u32>,
    /// Map ids of the nodes, in dense order.
    pub node_labels: Vec<u32>,
    pub failures: Vec<FailureEvent>,
    pub energy: EnergyTotals,
    pub dispatch: Vec<DispatchRecord>,
}

impl MetricsLog {
    pub fn steps(&self) -> usize {
        self.queue_counts.len()
    }

    pub fn peak_queue(&self, kind: RequestKind) -> u32 {
        self.queue_counts
            .iter()
            .map(|c| c[kind.index()])
            .max()
            .unwrap_or(0)
    }

    /// Whether the open count of `kind` touches zero in every simulated day.
    pub fn clears_every_day(&self, kind: RequestKind) -> bool {
        self.daily_minimum(kind).iter().all(|&m| m == 0)
    }

    /// Minimum open count of `kind` within each (possibly partial) day.
    pub fn daily_minimum(&self, kind: RequestKind) -> Vec<u32> {
        let per_day = (SECONDS_PER_DAY / self.step_s).round().max(1.0) as usize;
        self.queue_counts
            .chunks(per_day)
            .map(|day| day.iter().map(|c| c[kind.index()]).min().unwrap_or(0))
            .collect()
    }

    /// Mean over the vehicles of `class` of the share of time spent in `group`.
    pub fn class_group_share(&self, class: VehicleClass, group: StateGroup) -> Option<f64> {
        let shares: Vec<f64> = self
            .vehicles
            .iter()
            .filter(|v| v.class == class && v.total_seconds() > 0.0)
            .map(|v| v.group_seconds(group) / v.total_seconds())
            .collect();
        if shares.is_empty() {
            return None;
        }
        Some(shares.iter().sum::<f64>() / shares.len() as f64)
    }

    /// Mean share of time per state for `class`, in [`VehicleState::ALL`] order.
    pub fn class_state_shares(&self, class: VehicleClass) -> Option<[f64; 10]> {
        let vs: Vec<&VehicleRecord> = self
            .vehicles
            .iter()
            .filter(|v| v.class == class && v.total_seconds() > 0.0)
            .collect();
        if vs.is_empty() {
            return None;
        }
        let mut out = [0.0; 10];
        for v in &vs {
            let total = v.total_seconds();
            for (o, s) in out.iter_mut().zip(v.state_seconds) {
                *o += s / total / vs.len() as f64;
            }
        }
        Some(out)
    }

    pub fn snapshot_at(&self, time_s: f64) -> Option<&CoverageSnapshot> {
        self.coverage.iter().find(|s| (s.time_s - time_s).abs() < 1e-6)
    }

    pub fn completed(&self, kind: RequestKind) -> usize {
        self.requests
            .iter()
            .filter(|r| r.kind == kind && r.completed_at.is_some())
            .count()
    }
}

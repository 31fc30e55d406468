//! CSV and JSON outputs of a run.
//!
//! | file | columns |
//! |------|---------|
//! | `requests.csv` | `id, kind, origin, created_at, assigned_at, vehicle_id, completed_at` |
//! | `state_times.csv` | `vehicle_id, state, seconds` |
//! | `charging.csv` | `step, vehicles_in_charge_group` |
//! | `coverage_<t>.csv` | `edge_id, cumulative_visit_count` |
//! | `coverage_report.csv` | `snapshot_s, threshold, percent_at_or_below` |
//! | `dispatch_log.csv` | `time, request_id, vehicle_id, score, R, d_req, d_task, m_l, chosen` |
//! | `summary.json` | per-class state shares, queue peaks, failures, energy totals |

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::engine::{EnergyTotals, FailureEvent, MetricsLog, SimConfig};
use crate::fsm::{StateGroup, VehicleClass, VehicleState};
use crate::requests::RequestKind;

pub const REPORT_THRESHOLDS: [u64; 3] = [10, 20, 30];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("no coverage snapshot at t={0} s")]
    MissingSnapshot(f64),
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, OutputError> {
    csv::Writer::from_path(path).map_err(|source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), OutputError> {
    let wrap = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row).map_err(wrap)?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Serialize)]
struct RequestRow {
    id: u64,
    kind: RequestKind,
    origin: u32,
    created_at: f64,
    assigned_at: Option<f64>,
    vehicle_id: Option<u32>,
    completed_at: Option<f64>,
}

pub fn write_requests(path: &Path, log: &MetricsLog) -> Result<(), OutputError> {
    write_rows(
        path,
        log.requests.iter().map(|r| RequestRow {
            id: r.id,
            kind: r.kind,
            origin: log.node_labels[r.origin.index()],
            created_at: r.created_at,
            assigned_at: r.assigned_at,
            vehicle_id: r.vehicle.map(|v| v.0),
            completed_at: r.completed_at,
        }),
    )
}

#[derive(Serialize)]
struct StateRow {
    vehicle_id: u32,
    state: VehicleState,
    seconds: f64,
}

pub fn write_state_times(path: &Path, log: &MetricsLog) -> Result<(), OutputError> {
    write_rows(
        path,
        log.vehicles.iter().flat_map(|v| {
            VehicleState::ALL.iter().map(move |&s| StateRow {
                vehicle_id: v.id.0,
                state: s,
                seconds: v.state_seconds[s.index()],
            })
        }),
    )
}

#[derive(Serialize)]
struct ChargingRow {
    step: usize,
    vehicles_in_charge_group: u32,
}

pub fn write_charging(path: &Path, log: &MetricsLog) -> Result<(), OutputError> {
    write_rows(
        path,
        log.charge_counts
            .iter()
            .enumerate()
            .map(|(step, &n)| ChargingRow {
                step,
                vehicles_in_charge_group: n,
            }),
    )
}

#[derive(Serialize)]
struct CoverageRow {
    edge_id: u32,
    cumulative_visit_count: u64,
}

/// File name of the coverage snapshot taken at `time_s`.
pub fn coverage_file_name(time_s: f64) -> String {
    if time_s.fract() == 0.0 {
        format!("coverage_{}.csv", time_s as u64)
    } else {
        format!("coverage_{time_s}.csv")
    }
}

pub fn write_coverage(dir: &Path, log: &MetricsLog) -> Result<Vec<PathBuf>, OutputError> {
    let mut paths = Vec::new();
    for snap in &log.coverage {
        let path = dir.join(coverage_file_name(snap.time_s));
        write_rows(
            &path,
            snap.counts
                .iter()
                .zip(&log.edge_labels)
                .map(|(&c, &label)| CoverageRow {
                    edge_id: label,
                    cumulative_visit_count: c,
                }),
        )?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportRow {
    pub snapshot_s: f64,
    pub threshold: u64,
    pub percent_at_or_below: f64,
}

/// Percentage of edges traversed at most `threshold` times, for every
/// requested snapshot and threshold.
pub fn coverage_report(
    log: &MetricsLog,
    times: &[f64],
    thresholds: &[u64],
) -> Result<Vec<ReportRow>, OutputError> {
    let mut rows = Vec::new();
    for &t in times {
        let snap = log.snapshot_at(t).ok_or(OutputError::MissingSnapshot(t))?;
        for &threshold in thresholds {
            rows.push(ReportRow {
                snapshot_s: t,
                threshold,
                percent_at_or_below: snap.percent_at_or_below(threshold),
            });
        }
    }
    Ok(rows)
}

pub fn write_coverage_report(path: &Path, rows: &[ReportRow]) -> Result<(), OutputError> {
    write_rows(path, rows.iter())
}

/// Plain-text table of a coverage report: one row per snapshot.
pub fn format_report(rows: &[ReportRow]) -> String {
    let mut by_time: BTreeMap<u64, Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        by_time.entry(r.snapshot_s.to_bits()).or_default().push(r);
    }
    let mut out = String::new();
    let mut rows_sorted: Vec<_> = by_time.into_values().collect();
    rows_sorted.sort_by(|a, b| a[0].snapshot_s.total_cmp(&b[0].snapshot_s));
    if let Some(first) = rows_sorted.first() {
        out.push_str("snapshot");
        for r in first {
            out.push_str(&format!(" | <= {:>3}", r.threshold));
        }
        out.push('\n');
    }
    for group in rows_sorted {
        out.push_str(&format!("{:>7.1}h", group[0].snapshot_s / 3600.0));
        for r in group {
            out.push_str(&format!(" | {:>5.1}%", r.percent_at_or_below));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct DispatchRow {
    time: f64,
    request_id: u64,
    vehicle_id: u32,
    score: f64,
    #[serde(rename = "R")]
    range: f64,
    d_req: f64,
    d_task: f64,
    m_l: Option<f64>,
    chosen: bool,
}

pub fn write_dispatch_log(path: &Path, log: &MetricsLog) -> Result<(), OutputError> {
    write_rows(
        path,
        log.dispatch.iter().map(|d| DispatchRow {
            time: d.time_s,
            request_id: d.request,
            vehicle_id: d.candidate.vehicle.0,
            score: d.candidate.score,
            range: d.candidate.range_m,
            d_req: d.candidate.d_req_m,
            d_task: d.candidate.d_task_m,
            m_l: d.candidate.load_kg,
            chosen: d.chosen,
        }),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassSummary {
    pub vehicles: usize,
    /// Mean percentage of time per state.
    pub state_percent: BTreeMap<VehicleState, f64>,
    /// Mean percentage of time per state group.
    pub group_percent: BTreeMap<&'static str, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KindSummary {
    pub created: usize,
    pub completed: usize,
    pub peak_open: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub duration_s: f64,
    pub seed: u64,
    pub fleet: String,
    pub mode: crate::engine::ChargeMode,
    pub classes: BTreeMap<VehicleClass, ClassSummary>,
    pub requests: BTreeMap<RequestKind, KindSummary>,
    pub failures: Vec<FailureEvent>,
    pub energy: EnergyTotals,
}

fn group_name(g: StateGroup) -> &'static str {
    match g {
        StateGroup::Idle => "idle",
        StateGroup::Charge => "charge",
        StateGroup::Routine => "routine",
    }
}

pub fn summarize(log: &MetricsLog, cfg: &SimConfig) -> Summary {
    let mut classes = BTreeMap::new();
    for class in VehicleClass::ALL {
        let Some(shares) = log.class_state_shares(class) else {
            continue;
        };
        let state_percent = VehicleState::ALL
            .iter()
            .filter(|s| class.allows(**s))
            .map(|&s| (s, 100.0 * shares[s.index()]))
            .collect();
        let group_percent = [StateGroup::Idle, StateGroup::Charge, StateGroup::Routine]
            .into_iter()
            .map(|g| {
                let share = log.class_group_share(class, g).unwrap_or(0.0);
                (group_name(g), 100.0 * share)
            })
            .collect();
        classes.insert(
            class,
            ClassSummary {
                vehicles: log.vehicles.iter().filter(|v| v.class == class).count(),
                state_percent,
                group_percent,
            },
        );
    }
    let requests = RequestKind::ALL
        .into_iter()
        .map(|k| {
            (
                k,
                KindSummary {
                    created: log.requests.iter().filter(|r| r.kind == k).count(),
                    completed: log.completed(k),
                    peak_open: log.peak_queue(k),
                },
            )
        })
        .collect();
    Summary {
        duration_s: log.duration_s,
        seed: cfg.seed,
        fleet: cfg.fleet.to_string(),
        mode: cfg.mode,
        classes,
        requests,
        failures: log.failures.clone(),
        energy: log.energy,
    }
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<(), OutputError> {
    let io = |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = File::create(path).map_err(io)?;
    let text = serde_json::to_string_pretty(summary).expect("summary serializes");
    f.write_all(text.as_bytes()).map_err(io)?;
    f.write_all(b"\n").map_err(io)
}

/// Writes every output of a run into `dir`, creating it if needed.
/// Returns the coverage report rows for the configured snapshot times.
pub fn write_all(dir: &Path, log: &MetricsLog, cfg: &SimConfig) -> Result<Vec<ReportRow>, OutputError> {
    std::fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_requests(&dir.join("requests.csv"), log)?;
    write_state_times(&dir.join("state_times.csv"), log)?;
    write_charging(&dir.join("charging.csv"), log)?;
    write_coverage(dir, log)?;
    write_summary(&dir.join("summary.json"), &summarize(log, cfg))?;
    if cfg.dispatch_log {
        write_dispatch_log(&dir.join("dispatch_log.csv"), log)?;
    }
    let rows = coverage_report(log, &cfg.snapshot_times_s, &REPORT_THRESHOLDS)?;
    write_coverage_report(&dir.join("coverage_report.csv"), &rows)?;
    Ok(rows)
}

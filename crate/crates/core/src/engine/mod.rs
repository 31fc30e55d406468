//! Fixed-step simulation loop.
//!
//! Every step runs the same phases in the same order:
//!
//! 1. new plant requests join the queue;
//! 2. the Plant Manager assigns queued requests, oldest first;
//! 3. vehicles at a decision point take their next transition;
//! 4. vehicles still waiting at the hub pick an idle task;
//! 5. moving vehicles advance and draw energy;
//! 6. completed edge traversals update the visit values;
//! 7. docked vehicles charge or swap;
//! 8. metrics are recorded.
//!
//! All randomness comes from named sub-streams of the configured seed, and
//! vehicles are always processed in id order, so a configuration fully
//! determines the run.

mod kinematics;
mod metrics;
mod stations;

use std::collections::VecDeque;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::{
    dtm_select, nearest_of_kind, pm_select, CostWeights, DtmPlan, DtmVehicle, PmCandidate,
    TaskGeometry,
};
use crate::energy::{BatterySpec, ChargeTarget, ConsumptionModel, EnergyState};
use crate::fsm::{
    emit_symbols, next_state, IdleTask, IllegalTransition, PendingAssignment, Snapshot,
    StateGroup, Symbol, VehicleClass, VehicleState,
};
use crate::plant_graph::{
    default_map, EdgeId, MapError, NodeId, NodeKind, PlantGraph, Position, Route, RoutingError,
};
use crate::requests::{
    service_time, ArrivalConfig, ArrivalProcess, Request, RequestKind, RequestQueue, ServiceSpec,
};
use crate::rng::{SimRng, Streams};
use crate::{DecayParams, VehicleId};

pub use kinematics::{kinematic_step, profile_step, ClassParams, KinematicOutcome, Leg, Profile};
pub use metrics::{
    percent_at_or_below, CoverageSnapshot, DispatchRecord, EnergyTotals, FailureEvent, MetricsLog,
    VehicleRecord,
};
pub use stations::Station;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargeMode {
    #[default]
    Plug,
    Swap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetMix {
    pub ffv: u32,
    pub aptv: u32,
    pub mtv: u32,
}

impl Default for FleetMix {
    fn default() -> Self {
        Self {
            ffv: 2,
            aptv: 4,
            mtv: 4,
        }
    }
}

impl FleetMix {
    pub fn new(ffv: u32, aptv: u32, mtv: u32) -> Self {
        Self { ffv, aptv, mtv }
    }

    pub fn count(&self, class: VehicleClass) -> u32 {
        match class {
            VehicleClass::Ffv => self.ffv,
            VehicleClass::Aptv => self.aptv,
            VehicleClass::Mtv => self.mtv,
        }
    }

    pub fn total(&self) -> u32 {
        self.ffv + self.aptv + self.mtv
    }
}

impl std::fmt::Display for FleetMix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}-{}", self.ffv, self.aptv, self.mtv)
    }
}

/// One value per vehicle class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerClass<T> {
    pub ffv: T,
    pub aptv: T,
    pub mtv: T,
}

impl<T> PerClass<T> {
    pub fn get(&self, class: VehicleClass) -> &T {
        match class {
            VehicleClass::Ffv => &self.ffv,
            VehicleClass::Aptv => &self.aptv,
            VehicleClass::Mtv => &self.mtv,
        }
    }
}

impl Default for PerClass<ClassParams> {
    fn default() -> Self {
        let base = ClassParams {
            v_max_mps: 15.0 / 3.6,
            accel_mps2: 0.8,
            decel_mps2: 4.5,
            mass_empty_kg: 0.0,
            mass_full_kg: 0.0,
        };
        Self {
            ffv: ClassParams {
                mass_empty_kg: 11_000.0,
                mass_full_kg: 18_000.0,
                ..base
            },
            aptv: ClassParams {
                v_max_mps: 22.0 / 3.6,
                mass_empty_kg: 17_000.0,
                mass_full_kg: 31_000.0,
                ..base
            },
            mtv: ClassParams {
                mass_empty_kg: 22_500.0,
                mass_full_kg: 52_500.0,
                ..base
            },
        }
    }
}

/// Operational details that are not part of any cost function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Operations {
    pub slots_per_station: usize,
    /// AlF3 delivered per pot refill, kg. An FFV carrying less counts as empty.
    pub ffv_dose_kg: f64,
    /// Time to fill the FFV tank at the AlF3 storage, s.
    pub alf3_load_s: f64,
    /// Upper bound on chained transitions of one vehicle within one step.
    pub max_decisions_per_step: u32,
}

impl Default for Operations {
    fn default() -> Self {
        Self {
            slots_per_station: 2,
            ffv_dose_kg: 2000.0,
            alf3_load_s: 300.0,
            max_decisions_per_step: 4,
        }
    }
}

/// A complete scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Map file; the bundled map when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<PathBuf>,
    pub fleet: FleetMix,
    pub mode: ChargeMode,
    pub duration_s: f64,
    pub step_s: f64,
    pub seed: u64,
    pub weights: CostWeights,
    pub decay: DecayParams,
    pub arrivals: ArrivalConfig,
    pub service: ServiceSpec,
    pub battery: BatterySpec,
    pub consumption: ConsumptionModel,
    pub vehicles: PerClass<ClassParams>,
    pub operations: Operations,
    /// Times at which per-edge traversal counts are recorded, s.
    pub snapshot_times_s: Vec<f64>,
    /// Keep every Plant Manager score for the dispatch log.
    pub dispatch_log: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            map: None,
            fleet: FleetMix::default(),
            mode: ChargeMode::Plug,
            duration_s: 7.0 * 86_400.0,
            step_s: 1.0,
            seed: 1,
            weights: CostWeights::default(),
            decay: DecayParams::default(),
            arrivals: ArrivalConfig::default(),
            service: ServiceSpec::default(),
            battery: BatterySpec::default(),
            consumption: ConsumptionModel::default(),
            vehicles: PerClass::default(),
            operations: Operations::default(),
            snapshot_times_s: vec![4.0 * 3600.0, 8.0 * 3600.0, 14.0 * 3600.0],
            dispatch_log: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.step_s.is_finite() && self.step_s > 0.0) {
            return Err(format!("step_s must be > 0 (got {})", self.step_s));
        }
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return Err(format!("duration_s must be >= 0 (got {})", self.duration_s));
        }
        self.weights.validate()?;
        self.decay.validate()?;
        self.service.validate()?;
        self.battery.validate()?;
        self.consumption.validate()?;
        for class in VehicleClass::ALL {
            self.vehicles.get(class).validate(class.as_str())?;
        }
        let ops = &self.operations;
        if ops.slots_per_station == 0 {
            return Err("operations.slots_per_station must be >= 1".into());
        }
        let tank = self.vehicles.ffv.mass_full_kg - self.vehicles.ffv.mass_empty_kg;
        if !(ops.ffv_dose_kg > 0.0 && ops.ffv_dose_kg <= tank) {
            return Err(format!(
                "operations.ffv_dose_kg must be in (0, {tank}] (got {})",
                ops.ffv_dose_kg
            ));
        }
        if !(ops.alf3_load_s.is_finite() && ops.alf3_load_s >= 0.0) {
            return Err("operations.alf3_load_s must be >= 0".into());
        }
        if ops.max_decisions_per_step == 0 {
            return Err("operations.max_decisions_per_step must be >= 1".into());
        }
        if let Some(t) = self.snapshot_times_s.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(format!("snapshot_times_s entries must be >= 0 (got {t})"));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> u64 {
        (self.duration_s / self.step_s - 1e-9).ceil().max(0.0) as u64
    }

    pub fn load_graph(&self) -> Result<PlantGraph, MapError> {
        match &self.map {
            None => Ok(default_map(self.decay)),
            Some(path) => PlantGraph::load(path, self.decay),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    IllegalTransition(#[from] IllegalTransition),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("vehicle {0} tried to dock away from a charging station")]
    NotAtStation(VehicleId),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DockTarget {
    Full,
    Idle,
}

#[derive(Debug, Clone, PartialEq)]
enum Step {
    DriveTo(NodeId),
    DriveRoute(Route),
    Wait(f64),
    Payload(f64),
    FillTank,
    UseDose,
    Complete(u64),
    Dock(DockTarget),
}

/// What a vehicle is busy with right now.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activity {
    /// Nothing running; the current plan is finished.
    Ready,
    Moving,
    Waiting { remaining_s: f64 },
    Docked { station: usize, elapsed_s: f64 },
    Queued { station: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    request: u64,
    kind: PendingAssignment,
    dropoff: Option<NodeId>,
}

#[derive(Debug, Clone)]
pub struct Vehicle {
    pub id: VehicleId,
    pub class: VehicleClass,
    pub state: VehicleState,
    pub speed: f64,
    pub energy: EnergyState,
    /// AlF3 on board, kg (FFV only).
    pub load_kg: f64,
    pub payload_fraction: f64,
    pub stranded: bool,
    parked: Position,
    leg: Option<Leg>,
    activity: Activity,
    dock_target: DockTarget,
    plan: VecDeque<Step>,
    pending: Option<Pending>,
    task: Option<u64>,
    survey_edge: Option<EdgeId>,
    state_seconds: [f64; 10],
}

impl Vehicle {
    pub fn position(&self, graph: &PlantGraph) -> Position {
        match &self.leg {
            Some(leg) => leg.position(graph),
            None => self.parked,
        }
    }

    pub fn activity(&self) -> Activity {
        self.activity
    }

    /// Request the vehicle is serving.
    pub fn task(&self) -> Option<u64> {
        self.task
    }

    pub fn state_seconds(&self) -> &[f64; 10] {
        &self.state_seconds
    }

    fn task_complete(&self) -> bool {
        self.activity == Activity::Ready && self.plan.is_empty()
    }

    fn mass(&self, params: &ClassParams) -> f64 {
        match self.class {
            VehicleClass::Ffv => params.mass_empty_kg + self.load_kg,
            _ => params.mass(self.payload_fraction),
        }
    }
}

pub struct Simulation {
    cfg: SimConfig,
    graph: PlantGraph,
    process: ArrivalProcess,
    service_rng: SimRng,
    garbage_follows_anodes: bool,
    vehicles: Vec<Vehicle>,
    stations: Vec<Station>,
    station_at: Vec<Option<usize>>,
    requests: Vec<Request>,
    queue: RequestQueue,
    step_index: u64,
    total_steps: u64,
    now: f64,
    log: MetricsLog,
    snapshots_left: VecDeque<f64>,
    visits: Vec<EdgeId>,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self, EngineError> {
        cfg.validate().map_err(EngineError::Config)?;
        let graph = cfg.load_graph()?;
        Self::with_graph(cfg, graph)
    }

    /// Builds a simulation on an already loaded graph; `cfg.map` is ignored.
    pub fn with_graph(cfg: SimConfig, mut graph: PlantGraph) -> Result<Self, EngineError> {
        cfg.validate().map_err(EngineError::Config)?;
        graph.set_decay(cfg.decay);
        let spec = cfg.arrivals.resolve(&graph).map_err(EngineError::Config)?;
        let streams = Streams::new(cfg.seed);
        let process = ArrivalProcess::new(&spec, &streams, 0.0);

        let mut station_at = vec![None; graph.nodes().len()];
        let stations: Vec<Station> = graph
            .nodes_of_kind(NodeKind::ChargingStation)
            .enumerate()
            .map(|(i, n)| {
                station_at[n.index()] = Some(i);
                Station::new(n, cfg.operations.slots_per_station)
            })
            .collect();
        if stations.is_empty() {
            return Err(EngineError::Config("map has no charging station".into()));
        }
        let depot = graph
            .nodes_of_kind(NodeKind::Depot)
            .next()
            .ok_or(EngineError::Map(MapError::NoDepot))?;

        let mut vehicles = Vec::new();
        for class in VehicleClass::ALL {
            for _ in 0..cfg.fleet.count(class) {
                let id = VehicleId(vehicles.len() as u32);
                let mut rng = streams.indexed("vehicle", u64::from(id.0));
                let b = &cfg.battery;
                let soc = b.capacity_wh * rand::Rng::random_range(&mut rng, b.initial_soc_min..=1.0);
                let params = cfg.vehicles.get(class);
                vehicles.push(Vehicle {
                    id,
                    class,
                    state: VehicleState::LookForEvents,
                    speed: 0.0,
                    energy: EnergyState::new(
                        b.capacity_wh,
                        soc,
                        cfg.consumption.nominal_d_avg_m_per_wh,
                    ),
                    load_kg: if class == VehicleClass::Ffv {
                        params.mass_full_kg - params.mass_empty_kg
                    } else {
                        0.0
                    },
                    payload_fraction: 0.0,
                    stranded: false,
                    parked: Position::Node(depot),
                    leg: None,
                    activity: Activity::Ready,
                    dock_target: DockTarget::Full,
                    plan: VecDeque::new(),
                    pending: None,
                    task: None,
                    survey_edge: None,
                    state_seconds: [0.0; 10],
                });
            }
        }

        let mut snapshots: Vec<f64> = cfg.snapshot_times_s.clone();
        snapshots.sort_by(f64::total_cmp);
        snapshots.dedup();
        let log = MetricsLog {
            duration_s: cfg.duration_s,
            step_s: cfg.step_s,
            edge_labels: graph.edges().iter().map(|e| e.label).collect(),
            node_labels: graph.nodes().iter().map(|n| n.label).collect(),
            energy: EnergyTotals {
                initial_soc_wh: vehicles.iter().map(|v| v.energy.soc_wh).sum(),
                ..EnergyTotals::default()
            },
            ..MetricsLog::default()
        };
        let mut sim = Self {
            garbage_follows_anodes: cfg.arrivals.garbage_follows_anodes(),
            service_rng: streams.stream("service"),
            total_steps: cfg.total_steps(),
            process,
            cfg,
            graph,
            vehicles,
            stations,
            station_at,
            requests: Vec::new(),
            queue: RequestQueue::new(),
            step_index: 0,
            now: 0.0,
            log,
            snapshots_left: snapshots.into(),
            visits: Vec::new(),
        };
        sim.take_snapshots(0.0);
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &PlantGraph {
        &self.graph
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn queue(&self) -> &RequestQueue {
        &self.queue
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn is_finished(&self) -> bool {
        self.step_index >= self.total_steps
    }

    /// Adds a request created at the current time.
    pub fn inject_request(&mut self, kind: RequestKind, origin: NodeId) -> u64 {
        self.push_request(kind, origin, self.now)
    }

    fn push_request(&mut self, kind: RequestKind, origin: NodeId, at: f64) -> u64 {
        let id = self.requests.len() as u64;
        let r = Request::new(id, kind, origin, at);
        self.queue.push(&r);
        self.requests.push(r);
        id
    }

    pub fn run_to_end(mut self) -> Result<MetricsLog, EngineError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(self.finish())
    }

    /// Advances one step.
    pub fn step(&mut self) -> Result<(), EngineError> {
        if self.is_finished() {
            return Ok(());
        }
        let t = self.now;
        let dt = self.cfg.step_s.min(self.cfg.duration_s - t);
        let t_end = t + dt;

        for a in self.process.poll(t) {
            self.push_request(a.kind, a.origin, a.time);
        }
        self.pm_pass(t);
        for i in 0..self.vehicles.len() {
            self.decision_point(i, t)?;
        }
        for i in 0..self.vehicles.len() {
            self.idle_dispatch(i, t)?;
        }
        for i in 0..self.vehicles.len() {
            self.move_vehicle(i, t_end, dt)?;
        }
        for e in std::mem::take(&mut self.visits) {
            self.graph.record_traversal(e, t_end);
        }
        self.charge(t_end, dt)?;
        self.record_step(dt);

        self.step_index += 1;
        self.now = if self.is_finished() {
            self.cfg.duration_s
        } else {
            self.step_index as f64 * self.cfg.step_s
        };
        self.take_snapshots(self.now);
        Ok(())
    }

    fn take_snapshots(&mut self, now: f64) {
        while self.snapshots_left.front().is_some_and(|&s| s <= now + 1e-9) {
            let s = self.snapshots_left.pop_front().expect("checked");
            self.log.coverage.push(CoverageSnapshot {
                time_s: s,
                counts: self.graph.visit_counts(),
            });
        }
    }

    fn record_step(&mut self, dt: f64) {
        let counts = self.queue.peek_counts().map(|c| c as u32);
        self.log.queue_counts.push(counts);
        let charging = self
            .vehicles
            .iter()
            .filter(|v| v.state.group() == StateGroup::Charge)
            .count();
        self.log.charge_counts.push(charging as u32);
        for v in &mut self.vehicles {
            v.state_seconds[v.state.index()] += dt;
        }
    }

    pub fn finish(mut self) -> MetricsLog {
        let e = &mut self.log.energy;
        for v in &self.vehicles {
            e.consumed_wh += v.energy.total_consumed_wh;
            e.regenerated_wh += v.energy.total_regenerated_wh;
            e.final_soc_wh += v.energy.soc_wh;
        }
        self.log.vehicles = self
            .vehicles
            .iter()
            .map(|v| VehicleRecord {
                id: v.id,
                class: v.class,
                state_seconds: v.state_seconds,
                stranded: v.stranded,
            })
            .collect();
        self.log.requests = self.requests;
        self.log
    }

    fn low_soc(&self) -> f64 {
        self.cfg.battery.low_soc_threshold
    }

    fn is_selectable(&self, v: &Vehicle, kind: RequestKind) -> bool {
        v.class == kind.class()
            && !v.stranded
            && v.pending.is_none()
            && v.state.is_pm_selectable()
            && v.energy.soc_fraction() >= self.low_soc()
            && (kind != RequestKind::AlF3Refill || v.load_kg >= self.cfg.operations.ffv_dose_kg)
    }

    fn task_geometry(&self, kind: RequestKind, origin: NodeId, now: f64) -> Option<TaskGeometry> {
        let dropoff_kind = match kind {
            RequestKind::CollectAluminium => Some(NodeKind::CastHouse),
            RequestKind::GarbageCollection => Some(NodeKind::WasteArea),
            _ => None,
        };
        let dropoff = match dropoff_kind {
            None => None,
            Some(k) => {
                let tree = self
                    .graph
                    .tree_from(Position::Node(origin), &self.cfg.weights, now, None);
                Some(nearest_of_kind(&self.graph, &tree, k)?)
            }
        };
        Some(TaskGeometry { origin, dropoff })
    }

    fn pm_pass(&mut self, now: f64) {
        if self.queue.is_empty() {
            return;
        }
        let mut open: Vec<u64> = RequestKind::ALL
            .iter()
            .flat_map(|&k| self.queue.iter(k))
            .collect();
        open.sort_by(|&a, &b| {
            let (ra, rb) = (&self.requests[a as usize], &self.requests[b as usize]);
            ra.created_at.total_cmp(&rb.created_at).then(a.cmp(&b))
        });
        for id in open {
            let (kind, origin) = {
                let r = &self.requests[id as usize];
                (r.kind, r.origin)
            };
            let candidates: Vec<PmCandidate> = self
                .vehicles
                .iter()
                .filter(|v| self.is_selectable(v, kind))
                .map(|v| PmCandidate {
                    id: v.id,
                    class: v.class,
                    position: v.position(&self.graph),
                    range_m: v.energy.range_estimate(),
                    load_kg: v.load_kg,
                })
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let Some(task) = self.task_geometry(kind, origin, now) else {
                continue;
            };
            let Ok(sel) = pm_select(&task, &candidates, &self.graph, &self.cfg.weights, now) else {
                continue;
            };
            if self.cfg.dispatch_log {
                for s in &sel.scores {
                    self.log.dispatch.push(DispatchRecord {
                        time_s: now,
                        request: id,
                        candidate: *s,
                        chosen: s.vehicle == sel.chosen,
                    });
                }
            }
            self.queue.remove(kind, id);
            let r = &mut self.requests[id as usize];
            r.assigned_at = Some(now);
            r.vehicle = Some(sel.chosen);
            self.vehicles[sel.chosen.0 as usize].pending = Some(Pending {
                request: id,
                kind: if kind == RequestKind::GarbageCollection {
                    PendingAssignment::Garbage
                } else {
                    PendingAssignment::Plant
                },
                dropoff: task.dropoff,
            });
        }
    }

    fn snapshot(&self, v: &Vehicle, dtm_choice: Option<IdleTask>) -> Snapshot {
        Snapshot {
            class: v.class,
            state: v.state,
            soc_fraction: v.energy.soc_fraction(),
            low_soc_threshold: self.low_soc(),
            tank_empty: v.load_kg < self.cfg.operations.ffv_dose_kg,
            task_complete: v.task_complete(),
            pending: v.pending.map(|p| p.kind),
            dtm_choice,
        }
    }

    /// Applies the highest-priority symbol of vehicle `i`, chaining through
    /// the hub when a task completes.
    fn decision_point(&mut self, i: usize, now: f64) -> Result<(), EngineError> {
        for _ in 0..self.cfg.operations.max_decisions_per_step {
            let v = &self.vehicles[i];
            if v.stranded {
                return Ok(());
            }
            let Some(&symbol) = emit_symbols(&self.snapshot(v, None)).first() else {
                return Ok(());
            };
            self.apply(i, symbol, None, now)?;
            if !(symbol == Symbol::Tc && self.vehicles[i].state == VehicleState::LookForEvents) {
                return Ok(());
            }
        }
        Ok(())
    }

    fn idle_dispatch(&mut self, i: usize, now: f64) -> Result<(), EngineError> {
        let v = &self.vehicles[i];
        if v.stranded || v.state != VehicleState::LookForEvents {
            return Ok(());
        }
        let reserved: Vec<EdgeId> = self
            .vehicles
            .iter()
            .filter(|o| o.id != v.id && o.state == VehicleState::Surveillance)
            .filter_map(|o| o.survey_edge)
            .collect();
        let dv = DtmVehicle {
            id: v.id,
            class: v.class,
            position: v.position(&self.graph),
            soc_wh: v.energy.soc_wh,
            load_kg: v.load_kg,
        };
        let Some(plan) = dtm_select(&dv, &self.graph, &self.cfg.weights, now, &reserved) else {
            return Ok(());
        };
        log::debug!(
            "t={now:.0} {} soc={:.2} dtm {:?} {:?}",
            v.id.0,
            v.energy.soc_fraction(),
            plan.task,
            plan.costs
        );
        match emit_symbols(&self.snapshot(v, Some(plan.task))).first() {
            Some(&symbol @ Symbol::Dtm(_)) => self.apply(i, symbol, Some(plan), now),
            _ => Ok(()),
        }
    }

    fn apply(
        &mut self,
        i: usize,
        symbol: Symbol,
        dtm: Option<DtmPlan>,
        now: f64,
    ) -> Result<(), EngineError> {
        let (class, current) = (self.vehicles[i].class, self.vehicles[i].state);
        let next = next_state(class, current, symbol)?;
        log::trace!(
            "t={now:.0} {} soc={:.3} {current:?} --{symbol:?}--> {next:?}",
            self.vehicles[i].id.0,
            self.vehicles[i].energy.soc_fraction()
        );
        if matches!(symbol, Symbol::Pm | Symbol::G) && current != VehicleState::LookForEvents {
            self.interrupt(i);
        }
        let ops = self.cfg.operations;
        let position = self.vehicles[i].position(&self.graph);
        let id = self.vehicles[i].id;
        let mut plan = VecDeque::new();
        let mut survey_edge = None;
        match symbol {
            Symbol::Tc => {
                if next == VehicleState::ChargeAgv {
                    plan.push_back(Step::Dock(DockTarget::Full));
                } else {
                    self.vehicles[i].task = None;
                }
            }
            Symbol::Bc => {
                let tree = self.graph.tree_from(position, &self.cfg.weights, now, Some(id));
                let station = nearest_of_kind(&self.graph, &tree, NodeKind::ChargingStation)
                    .ok_or(EngineError::Config("no reachable charging station".into()))?;
                plan.push_back(Step::DriveTo(station));
            }
            Symbol::Pm | Symbol::G => {
                let p = self.vehicles[i].pending.take().expect("pending assignment");
                self.vehicles[i].task = Some(p.request);
                let (kind, origin) = {
                    let r = &self.requests[p.request as usize];
                    (r.kind, r.origin)
                };
                let service = service_time(&self.cfg.service, kind, &mut self.service_rng);
                plan = routine_plan(kind, origin, p.dropoff, service, p.request);
            }
            Symbol::Vel => {
                let tree = self.graph.tree_from(position, &self.cfg.weights, now, Some(id));
                let storage = nearest_of_kind(&self.graph, &tree, NodeKind::AlF3Storage)
                    .ok_or(EngineError::Config("no reachable AlF3 storage".into()))?;
                plan.extend([
                    Step::DriveTo(storage),
                    Step::Wait(ops.alf3_load_s),
                    Step::FillTank,
                ]);
            }
            Symbol::Dtm(task) => {
                let d = dtm.expect("DTM plan");
                survey_edge = d.survey_edge;
                plan.push_back(Step::DriveRoute(d.route));
                match task {
                    IdleTask::Charge => plan.push_back(Step::Dock(DockTarget::Idle)),
                    IdleTask::Surveillance => {}
                    IdleTask::Refill => {
                        plan.extend([Step::Wait(ops.alf3_load_s), Step::FillTank]);
                    }
                }
            }
        }
        let v = &mut self.vehicles[i];
        v.state = next;
        v.survey_edge = survey_edge;
        v.plan = plan;
        if v.activity == Activity::Ready {
            self.advance_plan(i, now)?;
        }
        Ok(())
    }

    /// Stops whatever the vehicle is doing so a new plan can start.
    fn interrupt(&mut self, i: usize) {
        let graph = &self.graph;
        let v = &mut self.vehicles[i];
        v.plan.clear();
        match v.activity {
            Activity::Moving => {
                if let Some(leg) = v.leg.take() {
                    v.parked = leg.position(graph);
                    if let Some(e) = leg.current_edge() {
                        self.graph.release(e, v.id);
                    }
                }
            }
            Activity::Docked { station, .. } | Activity::Queued { station } => {
                let vid = v.id;
                if let Some(next) = self.stations[station].leave(vid) {
                    self.vehicles[next.0 as usize].activity = Activity::Docked {
                        station,
                        elapsed_s: 0.0,
                    };
                }
            }
            Activity::Ready | Activity::Waiting { .. } => {}
        }
        self.vehicles[i].activity = Activity::Ready;
    }

    /// Runs instantaneous plan steps and starts the next timed one.
    fn advance_plan(&mut self, i: usize, now: f64) -> Result<(), EngineError> {
        loop {
            let Some(step) = self.vehicles[i].plan.pop_front() else {
                self.vehicles[i].activity = Activity::Ready;
                return Ok(());
            };
            match step {
                Step::Payload(f) => self.vehicles[i].payload_fraction = f,
                Step::FillTank => {
                    let p = self.cfg.vehicles.ffv;
                    self.vehicles[i].load_kg = p.mass_full_kg - p.mass_empty_kg;
                }
                Step::UseDose => {
                    let v = &mut self.vehicles[i];
                    v.load_kg = (v.load_kg - self.cfg.operations.ffv_dose_kg).max(0.0);
                }
                Step::Complete(id) => {
                    let r = &mut self.requests[id as usize];
                    r.completed_at = Some(now);
                    if r.kind == RequestKind::AnodeReplacement && self.garbage_follows_anodes {
                        let origin = r.origin;
                        self.push_request(RequestKind::GarbageCollection, origin, now);
                    }
                }
                Step::Wait(s) => {
                    if s > 0.0 {
                        self.vehicles[i].activity = Activity::Waiting { remaining_s: s };
                        return Ok(());
                    }
                }
                Step::DriveTo(node) => {
                    let v = &self.vehicles[i];
                    let pos = v.position(&self.graph);
                    let route =
                        self.graph
                            .route_from(pos, node, &self.cfg.weights, now, Some(v.id))?;
                    if !route.is_empty() {
                        self.start_leg(i, route);
                        return Ok(());
                    }
                }
                Step::DriveRoute(route) => {
                    if !route.is_empty() {
                        self.start_leg(i, route);
                        return Ok(());
                    }
                }
                Step::Dock(target) => {
                    let v = &mut self.vehicles[i];
                    let Position::Node(node) = v.parked else {
                        return Err(EngineError::NotAtStation(v.id));
                    };
                    let station =
                        self.station_at[node.index()].ok_or(EngineError::NotAtStation(v.id))?;
                    v.dock_target = target;
                    v.activity = if self.stations[station].arrive(v.id) {
                        Activity::Docked {
                            station,
                            elapsed_s: 0.0,
                        }
                    } else {
                        Activity::Queued { station }
                    };
                    return Ok(());
                }
            }
        }
    }

    fn start_leg(&mut self, i: usize, route: Route) {
        let leg = Leg::new(&self.graph, route);
        let v = &mut self.vehicles[i];
        if let Some(e) = leg.current_edge() {
            self.graph.occupy(e, v.id);
        }
        v.leg = Some(leg);
        v.activity = Activity::Moving;
    }

    fn strand(&mut self, i: usize, now: f64, unserved_wh: f64) {
        let v = &mut self.vehicles[i];
        v.stranded = true;
        v.speed = 0.0;
        self.log.energy.unserved_wh += unserved_wh;
        let edge = v
            .leg
            .as_ref()
            .and_then(Leg::current_edge)
            .map(|e| self.graph.edge(e).label);
        log::warn!("vehicle {} stranded at t={now}", v.id);
        self.log.failures.push(FailureEvent {
            time_s: now,
            vehicle: v.id,
            state: v.state,
            edge,
            unserved_wh,
        });
    }

    fn move_vehicle(&mut self, i: usize, now: f64, dt: f64) -> Result<(), EngineError> {
        if self.vehicles[i].stranded {
            return Ok(());
        }
        let params = *self.cfg.vehicles.get(self.vehicles[i].class);
        let model = self.cfg.consumption;
        match self.vehicles[i].activity {
            Activity::Moving => {
                let v = &mut self.vehicles[i];
                let mass = v.mass(&params);
                let leg = v.leg.as_mut().expect("moving vehicle has a leg");
                let before = leg.current_edge();
                let out = kinematic_step(&self.graph, leg, v.speed, &params, dt);
                let after = leg.current_edge();
                let dest = leg.destination();
                if before != after {
                    if let Some(e) = before {
                        self.graph.release(e, v.id);
                    }
                    if let Some(e) = after {
                        self.graph.occupy(e, v.id);
                    }
                }
                self.visits.extend(&out.completed);
                v.speed = out.v_end;
                let drawn = v.energy.consume_leg(
                    &model,
                    mass,
                    out.distance_m,
                    out.v_start,
                    out.v_end,
                    dt,
                );
                if let Err(d) = drawn {
                    self.strand(i, now, d.unserved_wh);
                    return Ok(());
                }
                if out.arrived {
                    v.leg = None;
                    v.speed = 0.0;
                    v.parked = Position::Node(dest);
                    v.activity = Activity::Ready;
                    self.advance_plan(i, now)?;
                }
            }
            Activity::Waiting { remaining_s } => {
                let left = remaining_s - dt;
                if left <= 1e-9 {
                    self.vehicles[i].activity = Activity::Ready;
                    self.advance_plan(i, now)?;
                } else {
                    self.vehicles[i].activity = Activity::Waiting { remaining_s: left };
                }
            }
            // the hotel load is a driving overhead; a parked vehicle powers down
            Activity::Ready | Activity::Docked { .. } | Activity::Queued { .. } => {}
        }
        Ok(())
    }

    fn charge(&mut self, now: f64, dt: f64) -> Result<(), EngineError> {
        for s in 0..self.stations.len() {
            let docked: Vec<VehicleId> = self.stations[s].docked().to_vec();
            for vid in docked {
                let i = vid.0 as usize;
                let Activity::Docked { station, elapsed_s } = self.vehicles[i].activity else {
                    continue;
                };
                let elapsed_s = elapsed_s + dt;
                let v = &mut self.vehicles[i];
                let done = match self.cfg.mode {
                    ChargeMode::Plug => {
                        let target = match v.dock_target {
                            DockTarget::Full => ChargeTarget::Full,
                            DockTarget::Idle => ChargeTarget::Idle,
                        };
                        let p = v.energy.charge_step(&self.cfg.battery, dt, target);
                        self.log.energy.delivered_wh += p.delivered_wh;
                        p.complete
                    }
                    ChargeMode::Swap => {
                        if elapsed_s >= self.cfg.battery.swap_duration_s - 1e-9 {
                            self.log.energy.delivered_wh += v.energy.swap_battery();
                            true
                        } else {
                            false
                        }
                    }
                };
                v.activity = Activity::Docked { station, elapsed_s };
                if done {
                    if let Some(next) = self.stations[station].leave(vid) {
                        self.vehicles[next.0 as usize].activity = Activity::Docked {
                            station,
                            elapsed_s: 0.0,
                        };
                    }
                    self.vehicles[i].activity = Activity::Ready;
                    self.advance_plan(i, now)?;
                }
            }
        }
        Ok(())
    }
}

fn routine_plan(
    kind: RequestKind,
    origin: NodeId,
    dropoff: Option<NodeId>,
    service_s: f64,
    request: u64,
) -> VecDeque<Step> {
    use Step::*;
    let mut plan = VecDeque::new();
    match kind {
        RequestKind::AlF3Refill => {
            plan.extend([DriveTo(origin), Wait(service_s), UseDose]);
        }
        RequestKind::AnodeReplacement => {
            plan.extend([Payload(1.0), DriveTo(origin), Wait(service_s), Payload(0.0)]);
        }
        RequestKind::GarbageCollection | RequestKind::CollectAluminium => {
            plan.extend([Payload(0.0), DriveTo(origin), Wait(service_s), Payload(1.0)]);
            if let Some(d) = dropoff {
                plan.push_back(DriveTo(d));
            }
            plan.push_back(Payload(0.0));
        }
    }
    plan.push_back(Complete(request));
    plan
}

/// Runs a scenario from start to end.
pub fn run(cfg: &SimConfig) -> Result<MetricsLog, EngineError> {
    Simulation::new(cfg.clone())?.run_to_end()
}

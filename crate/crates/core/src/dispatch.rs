//! Task allocation.
//!
//! The Plant Manager scores every eligible vehicle for a plant request and
//! picks the best one:
//!
//! ```text
//! f_V   = W_r * (R - d_req) + W_d / d_task      (APTV, MTV)
//! f_FFV = f_V + W_l * m_l                       (FFV)
//! ```
//!
//! Higher is better: `R - d_req` is the range margin left after the task and
//! the trip to the nearest charger, `W_d / d_task` grows as the vehicle gets
//! closer. Vehicles whose margin is negative are not eligible.
//!
//! Idle vehicles pick their own temporary task with the lowest cost:
//!
//! ```text
//! f_charge = W_SOC  * SOC   + W_dist * (d_CS + V_path)
//! f_surv   = W_surv * V_min + W_dist * (d_E  + V_path)
//! f_refill = W_Load * m_l   + W_dist * (d_R  + V_path)   (FFV only)
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsm::{IdleTask, VehicleClass};
use crate::plant_graph::{
    EdgeId, NodeId, NodeKind, PlantGraph, Position, Route, RoutingError, ShortestPathTree,
};
use crate::VehicleId;

/// Substitute for a zero task distance in `W_d / d_task`, m.
pub const MIN_TASK_DISTANCE_M: f64 = 1.0;

/// Every tunable weight of the dispatchers and of the dynamic traverse time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostWeights {
    /// Range margin (PM).
    pub w_r: f64,
    /// Proximity to the task (PM).
    pub w_d: f64,
    /// AlF3 load on board (PM, FFV).
    pub w_l: f64,
    pub w_soc: f64,
    /// Distance plus path visit values (DTM).
    pub w_dist: f64,
    pub w_surv: f64,
    /// AlF3 load on board (DTM refill).
    pub w_load: f64,
    /// Visit-value term of the traverse time.
    pub w_visit: f64,
    /// Occupancy term of the traverse time.
    pub w_veh: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            w_r: 1.0,
            w_d: 1000.0,
            w_l: 0.1,
            w_soc: 0.001,
            w_dist: 0.01,
            w_surv: 2.0,
            w_load: 0.01,
            w_visit: 0.1,
            w_veh: 0.5,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            ("w_r", self.w_r),
            ("w_d", self.w_d),
            ("w_l", self.w_l),
            ("w_soc", self.w_soc),
            ("w_dist", self.w_dist),
            ("w_surv", self.w_surv),
            ("w_load", self.w_load),
            ("w_visit", self.w_visit),
            ("w_veh", self.w_veh),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("weights.{name} must be >= 0 (got {v})"));
            }
        }
        Ok(())
    }
}

/// Plant Manager score of one vehicle, with the terms it was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateScore {
    pub vehicle: VehicleId,
    pub score: f64,
    pub range_m: f64,
    pub d_req_m: f64,
    pub d_task_m: f64,
    /// AlF3 on board; only scored for FFVs.
    pub load_kg: Option<f64>,
    /// `d_task` was zero and [`MIN_TASK_DISTANCE_M`] was used instead.
    pub zero_task_distance: bool,
}

impl CandidateScore {
    pub fn margin_m(&self) -> f64 {
        self.range_m - self.d_req_m
    }

    pub fn is_feasible(&self) -> bool {
        self.margin_m() >= 0.0
    }

    /// Recomputes the score from the stored terms.
    pub fn recompute(&self, weights: &CostWeights) -> f64 {
        score_terms(
            weights,
            self.range_m,
            self.d_req_m,
            self.d_task_m.max(MIN_TASK_DISTANCE_M),
            self.load_kg,
        )
    }
}

fn score_terms(w: &CostWeights, range: f64, d_req: f64, d_task: f64, load: Option<f64>) -> f64 {
    let f_v = w.w_r * (range - d_req) + w.w_d / d_task;
    match load {
        Some(m) => f_v + w.w_l * m,
        None => f_v,
    }
}

/// Scalar inputs of the Plant Manager cost function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmInputs {
    pub range_m: f64,
    pub d_req_m: f64,
    pub d_task_m: f64,
    pub load_kg: Option<f64>,
}

pub fn pm_score_from(vehicle: VehicleId, inputs: PmInputs, weights: &CostWeights) -> CandidateScore {
    let zero = inputs.d_task_m <= 0.0;
    let d_task = if zero { MIN_TASK_DISTANCE_M } else { inputs.d_task_m };
    CandidateScore {
        vehicle,
        score: score_terms(weights, inputs.range_m, inputs.d_req_m, d_task, inputs.load_kg),
        range_m: inputs.range_m,
        d_req_m: inputs.d_req_m,
        d_task_m: inputs.d_task_m.max(0.0),
        load_kg: inputs.load_kg,
        zero_task_distance: zero,
    }
}

/// Best feasible candidate: highest score, lowest id on ties.
pub fn pm_argmax(scores: &[CandidateScore]) -> Option<VehicleId> {
    let mut best: Option<&CandidateScore> = None;
    for s in scores.iter().filter(|s| s.is_feasible()) {
        best = match best {
            Some(b) if b.score > s.score || (b.score == s.score && b.vehicle < s.vehicle) => Some(b),
            _ => Some(s),
        };
    }
    best.map(|s| s.vehicle)
}

/// A vehicle the Plant Manager may pick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmCandidate {
    pub id: VehicleId,
    pub class: VehicleClass,
    pub position: Position,
    pub range_m: f64,
    pub load_kg: f64,
}

/// Where a plant task happens: service at `origin`, then an optional delivery leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskGeometry {
    pub origin: NodeId,
    pub dropoff: Option<NodeId>,
}

impl TaskGeometry {
    pub fn end(&self) -> NodeId {
        self.dropoff.unwrap_or(self.origin)
    }
}

/// Vehicle-independent parts of `d_task` and `d_req`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskLegs {
    /// Origin to drop-off, m (0 without delivery leg).
    pub task_leg_m: f64,
    /// Task end to the nearest charging station, m.
    pub to_charger_m: f64,
}

pub fn task_legs(
    graph: &PlantGraph,
    task: &TaskGeometry,
    weights: &CostWeights,
    now: f64,
) -> Result<TaskLegs, RoutingError> {
    let task_leg_m = match task.dropoff {
        Some(d) => graph.shortest_path(task.origin, d, weights, now)?.length_m,
        None => 0.0,
    };
    let tree = graph.tree_from(Position::Node(task.end()), weights, now, None);
    let to_charger_m = nearest_of_kind(graph, &tree, NodeKind::ChargingStation)
        .and_then(|s| tree.length_to(s))
        .ok_or(RoutingError::Unreachable(task.end()))?;
    Ok(TaskLegs {
        task_leg_m,
        to_charger_m,
    })
}

pub(crate) fn nearest_of_kind(
    graph: &PlantGraph,
    tree: &ShortestPathTree,
    kind: NodeKind,
) -> Option<NodeId> {
    tree.nearest(graph.nodes_of_kind(kind))
}

/// Scores `candidate` for a task, given the vehicle's shortest-path tree.
pub fn pm_score_with_tree(
    candidate: &PmCandidate,
    tree: &ShortestPathTree,
    task: &TaskGeometry,
    legs: &TaskLegs,
    weights: &CostWeights,
) -> Result<CandidateScore, RoutingError> {
    let to_origin = tree
        .length_to(task.origin)
        .ok_or(RoutingError::Unreachable(task.origin))?;
    let d_task = to_origin + legs.task_leg_m;
    let inputs = PmInputs {
        range_m: candidate.range_m,
        d_req_m: d_task + legs.to_charger_m,
        d_task_m: d_task,
        load_kg: (candidate.class == VehicleClass::Ffv).then_some(candidate.load_kg),
    };
    Ok(pm_score_from(candidate.id, inputs, weights))
}

pub fn pm_score(
    candidate: &PmCandidate,
    task: &TaskGeometry,
    graph: &PlantGraph,
    weights: &CostWeights,
    now: f64,
) -> Result<CandidateScore, RoutingError> {
    let legs = task_legs(graph, task, weights, now)?;
    let tree = graph.tree_from(candidate.position, weights, now, Some(candidate.id));
    pm_score_with_tree(candidate, &tree, task, &legs, weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no eligible vehicle for the request")]
pub struct NoCandidate;

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub chosen: VehicleId,
    pub scores: Vec<CandidateScore>,
}

/// Picks the vehicle for a request among class-compatible, selectable candidates.
pub fn pm_select(
    task: &TaskGeometry,
    candidates: &[PmCandidate],
    graph: &PlantGraph,
    weights: &CostWeights,
    now: f64,
) -> Result<Selection, NoCandidate> {
    if candidates.is_empty() {
        return Err(NoCandidate);
    }
    let legs = task_legs(graph, task, weights, now).map_err(|_| NoCandidate)?;
    let scores: Vec<CandidateScore> = candidates
        .iter()
        .filter_map(|c| {
            let tree = graph.tree_from(c.position, weights, now, Some(c.id));
            pm_score_with_tree(c, &tree, task, &legs, weights).ok()
        })
        .collect();
    let chosen = pm_argmax(&scores).ok_or(NoCandidate)?;
    Ok(Selection { chosen, scores })
}

pub fn f_charge(w: &CostWeights, soc_wh: f64, d_cs: f64, v_path: f64) -> f64 {
    w.w_soc * soc_wh + w.w_dist * (d_cs + v_path)
}

pub fn f_surv(w: &CostWeights, v_min: f64, d_e: f64, v_path: f64) -> f64 {
    w.w_surv * v_min + w.w_dist * (d_e + v_path)
}

pub fn f_refill(w: &CostWeights, load_kg: f64, d_r: f64, v_path: f64) -> f64 {
    w.w_load * load_kg + w.w_dist * (d_r + v_path)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DtmCosts {
    pub charge: Option<f64>,
    pub surveillance: Option<f64>,
    pub refill: Option<f64>,
}

/// Cheapest task; ties resolve Charge, then Surveillance, then Refill.
pub fn dtm_argmin(costs: &DtmCosts) -> Option<IdleTask> {
    let options = [
        (IdleTask::Charge, costs.charge),
        (IdleTask::Surveillance, costs.surveillance),
        (IdleTask::Refill, costs.refill),
    ];
    let mut best: Option<(IdleTask, f64)> = None;
    for (task, cost) in options {
        let Some(c) = cost else { continue };
        if best.is_none_or(|(_, b)| c < b) {
            best = Some((task, c));
        }
    }
    best.map(|(t, _)| t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtmVehicle {
    pub id: VehicleId,
    pub class: VehicleClass,
    pub position: Position,
    pub soc_wh: f64,
    pub load_kg: f64,
}

/// Chosen idle task with its route.
#[derive(Debug, Clone, PartialEq)]
pub struct DtmPlan {
    pub task: IdleTask,
    pub costs: DtmCosts,
    pub route: Route,
    pub target: NodeId,
    /// Edge being surveyed, for [`IdleTask::Surveillance`].
    pub survey_edge: Option<EdgeId>,
}

struct Option_ {
    cost: f64,
    route: Route,
    target: NodeId,
    survey_edge: Option<EdgeId>,
}

/// Evaluates the idle-task cost functions for one vehicle and returns the cheapest.
///
/// `reserved` lists edges other vehicles are already surveying; they are
/// skipped when looking for the least-visited area.
pub fn dtm_select(
    vehicle: &DtmVehicle,
    graph: &PlantGraph,
    weights: &CostWeights,
    now: f64,
    reserved: &[EdgeId],
) -> Option<DtmPlan> {
    let tree = graph.tree_from(vehicle.position, weights, now, Some(vehicle.id));
    let towards = |kind: NodeKind| -> Option<(Route, NodeId)> {
        let node = nearest_of_kind(graph, &tree, kind)?;
        Some((tree.route_to(graph, node)?, node))
    };

    let charge = towards(NodeKind::ChargingStation).map(|(route, target)| Option_ {
        cost: f_charge(
            weights,
            vehicle.soc_wh,
            route.length_m,
            graph.path_visit_sum(&route.edges, now),
        ),
        route,
        target,
        survey_edge: None,
    });

    let surveillance = graph
        .least_visited_target_excluding(now, reserved)
        .and_then(|t| {
            let tail = graph.edge(t.edge).from;
            let mut route = tree.route_to(graph, tail)?;
            route.edges.push(t.edge);
            route.length_m += graph.edge(t.edge).length_m;
            route.time_s += graph.effective_traverse_time(t.edge, weights, now, Some(vehicle.id));
            let v_path = graph.path_visit_sum(&route.edges, now);
            Some(Option_ {
                cost: f_surv(weights, t.v_min, route.length_m, v_path),
                route,
                target: t.node,
                survey_edge: Some(t.edge),
            })
        });

    let refill = if vehicle.class == VehicleClass::Ffv {
        towards(NodeKind::AlF3Storage).map(|(route, target)| Option_ {
            cost: f_refill(
                weights,
                vehicle.load_kg,
                route.length_m,
                graph.path_visit_sum(&route.edges, now),
            ),
            route,
            target,
            survey_edge: None,
        })
    } else {
        None
    };

    let costs = DtmCosts {
        charge: charge.as_ref().map(|o| o.cost),
        surveillance: surveillance.as_ref().map(|o| o.cost),
        refill: refill.as_ref().map(|o| o.cost),
    };
    let task = dtm_argmin(&costs)?;
    let chosen = match task {
        IdleTask::Charge => charge,
        IdleTask::Surveillance => surveillance,
        IdleTask::Refill => refill,
    }?;
    Some(DtmPlan {
        task,
        costs,
        route: chosen.route,
        target: chosen.target,
        survey_edge: chosen.survey_edge,
    })
}

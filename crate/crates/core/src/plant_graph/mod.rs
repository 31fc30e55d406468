//! Directed plant graph: locations, streets, visit values and routing.

mod default_map;
mod map;
mod routing;
mod visit;

use serde::{Deserialize, Serialize};

use crate::dispatch::CostWeights;
use crate::VehicleId;

pub use default_map::{default_map, default_map_json, synthetic_layout, Layout};
pub use map::{MapEdge, MapError, MapFile, MapNode, REFERENCE_SPEED_MPS};
pub use routing::{Path, Position, Route, RoutingError, ShortestPathTree};
pub use visit::{forget_value, record_traversal};

/// Dense node index. Indices follow ascending order of the ids in the map file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

/// Dense edge index. Indices follow ascending order of the ids in the map file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    PotCell,
    CastHouse,
    ChargingStation,
    #[serde(rename = "alf3_storage")]
    AlF3Storage,
    WasteArea,
    Depot,
    Junction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// Id as written in the map file.
    pub label: u32,
    pub kind: NodeKind,
    pub x: f64,
    pub y: f64,
}

/// Visit bookkeeping of one edge.
///
/// `ff_value` is the visit value at `last_visit_time`; the value at a later
/// time is obtained with [`forget_value`]. An edge that was never traversed
/// has `cumulative_visit_count == 0` and reports a visit value of 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VisitState {
    pub ff_value: f64,
    pub last_visit_time: f64,
    pub cumulative_visit_count: u64,
}

impl VisitState {
    pub fn is_visited(&self) -> bool {
        self.cumulative_visit_count > 0
    }
}

/// Parameters of the logistic forget function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayParams {
    /// Decay steepness, 1/s.
    pub k: f64,
    /// Time after the last visit at which the accumulated value is halved, s.
    pub delta_t_s: f64,
    /// Added to the decayed value on every completed traversal.
    pub visit_increment: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        Self {
            k: 0.01,
            delta_t_s: 600.0,
            visit_increment: 1.0,
        }
    }
}

impl DecayParams {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("k", self.k),
            ("delta_t_s", self.delta_t_s),
            ("visit_increment", self.visit_increment),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("decay.{name} must be > 0 (got {v})"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    /// Id as written in the map file.
    pub label: u32,
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: f64,
    pub speed_limit_mps: f64,
    /// Free-flow traverse time, s.
    pub base_traverse_time: f64,
    pub visit: VisitState,
    /// Vehicles currently positioned on this edge, sorted.
    pub occupied_by: Vec<VehicleId>,
}

impl Edge {
    /// Whether a vehicle other than `me` is on this edge.
    pub fn is_occupied_by_other(&self, me: Option<VehicleId>) -> bool {
        self.occupied_by.iter().any(|v| Some(*v) != me)
    }
}

/// Dynamic traverse time of an edge at `now`:
/// `T = T_t * (1 + W_visit * FF + W_veh)`, the occupancy term applied only when
/// another vehicle is on the edge.
pub fn effective_traverse_time(
    edge: &Edge,
    weights: &CostWeights,
    decay: &DecayParams,
    now: f64,
    me: Option<VehicleId>,
) -> f64 {
    let ff = forget_value(&edge.visit, decay, now);
    let occupancy = if edge.is_occupied_by_other(me) {
        weights.w_veh
    } else {
        0.0
    };
    edge.base_traverse_time * (1.0 + weights.w_visit * ff + occupancy)
}

/// Least-visited edge found by [`PlantGraph::least_visited_target`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurveyTarget {
    pub edge: EdgeId,
    /// Head node of `edge`.
    pub node: NodeId,
    pub v_min: f64,
}

#[derive(Debug, Clone)]
pub struct PlantGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    decay: DecayParams,
}

impl PlantGraph {
    pub(crate) fn from_parts(nodes: Vec<Node>, edges: Vec<Edge>, decay: DecayParams) -> Self {
        let mut out_edges = vec![Vec::new(); nodes.len()];
        for e in &edges {
            out_edges[e.from.index()].push(e.id);
        }
        Self {
            nodes,
            edges,
            out_edges,
            decay,
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.index()]
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node.index()]
    }

    pub fn decay(&self) -> &DecayParams {
        &self.decay
    }

    pub fn set_decay(&mut self, decay: DecayParams) {
        self.decay = decay;
    }

    pub fn node_by_label(&self, label: u32) -> Option<NodeId> {
        self.nodes
            .binary_search_by_key(&label, |n| n.label)
            .ok()
            .map(|i| NodeId(i as u32))
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(move |n| n.kind == kind).map(|n| n.id)
    }

    /// Decayed visit value of an edge at `now`.
    pub fn visit_value(&self, edge: EdgeId, now: f64) -> f64 {
        forget_value(&self.edge(edge).visit, &self.decay, now)
    }

    pub fn effective_traverse_time(
        &self,
        edge: EdgeId,
        weights: &CostWeights,
        now: f64,
        me: Option<VehicleId>,
    ) -> f64 {
        effective_traverse_time(self.edge(edge), weights, &self.decay, now, me)
    }

    /// Registers a completed traversal of `edge` at `now`.
    pub fn record_traversal(&mut self, edge: EdgeId, now: f64) {
        let decay = self.decay;
        let e = &mut self.edges[edge.index()];
        e.visit = record_traversal(&e.visit, &decay, now);
    }

    pub fn set_visit_state(&mut self, edge: EdgeId, state: VisitState) {
        self.edges[edge.index()].visit = state;
    }

    pub fn occupy(&mut self, edge: EdgeId, vehicle: VehicleId) {
        let occ = &mut self.edges[edge.index()].occupied_by;
        if let Err(pos) = occ.binary_search(&vehicle) {
            occ.insert(pos, vehicle);
        }
    }

    pub fn release(&mut self, edge: EdgeId, vehicle: VehicleId) {
        let occ = &mut self.edges[edge.index()].occupied_by;
        if let Ok(pos) = occ.binary_search(&vehicle) {
            occ.remove(pos);
        }
    }

    /// Sum of decayed visit values over the edges of `path`.
    pub fn path_visit_sum(&self, path: &[EdgeId], now: f64) -> f64 {
        path.iter().map(|&e| self.visit_value(e, now)).sum()
    }

    /// Edge with the minimum decayed visit value (lowest id on ties) and its head node.
    ///
    /// Returns `None` only for a graph without edges.
    pub fn least_visited_target(&self, now: f64) -> Option<SurveyTarget> {
        self.least_visited_target_excluding(now, &[])
    }

    /// As [`least_visited_target`](Self::least_visited_target), skipping the
    /// `reserved` edges unless every edge is reserved.
    pub fn least_visited_target_excluding(
        &self,
        now: f64,
        reserved: &[EdgeId],
    ) -> Option<SurveyTarget> {
        let scan = |skip: &[EdgeId]| {
            let mut best: Option<(f64, EdgeId)> = None;
            for e in &self.edges {
                if skip.contains(&e.id) {
                    continue;
                }
                let v = forget_value(&e.visit, &self.decay, now);
                if best.is_none_or(|(bv, _)| v < bv) {
                    best = Some((v, e.id));
                }
            }
            best
        };
        let (v_min, edge) = scan(reserved).or_else(|| scan(&[]))?;
        Some(SurveyTarget {
            edge,
            node: self.edge(edge).to,
            v_min,
        })
    }

    pub fn visit_counts(&self) -> Vec<u64> {
        self.edges
            .iter()
            .map(|e| e.visit.cumulative_visit_count)
            .collect()
    }
}

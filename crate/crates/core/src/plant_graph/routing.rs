//! Dijkstra routing over effective traverse times.
//!
//! Edge costs are evaluated once per query at the query time `now`; the
//! search never re-evaluates them while expanding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use super::{EdgeId, NodeId, PlantGraph};
use crate::dispatch::CostWeights;
use crate::VehicleId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error("node {0:?} is not reachable")]
    Unreachable(NodeId),
}

/// Ordered edge list with its total effective time and length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Path {
    pub edges: Vec<EdgeId>,
    pub time_s: f64,
    pub length_m: f64,
}

/// Where a vehicle currently is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Position {
    Node(NodeId),
    /// Somewhere on an edge, `offset_m` metres past its tail.
    OnEdge { edge: EdgeId, offset_m: f64 },
}

/// A drivable route: like [`Path`] but may start part-way along its first edge.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Route {
    pub edges: Vec<EdgeId>,
    pub start_offset_m: f64,
    pub length_m: f64,
    pub time_s: f64,
}

impl Route {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    cost: f64,
    node: u32,
}

impl Eq for HeapItem {}

// BinaryHeap is a max-heap: invert so the cheapest (then lowest node) pops first.
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest-time tree, optionally rooted part-way along an edge.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    prefix: Option<(EdgeId, f64)>,
    prefix_length: f64,
    prefix_time: f64,
    time: Vec<f64>,
    length: Vec<f64>,
    pred: Vec<Option<EdgeId>>,
}

impl ShortestPathTree {
    pub fn time_to(&self, node: NodeId) -> Option<f64> {
        let t = self.time[node.index()];
        t.is_finite().then_some(self.prefix_time + t)
    }

    pub fn length_to(&self, node: NodeId) -> Option<f64> {
        self.time[node.index()]
            .is_finite()
            .then_some(self.prefix_length + self.length[node.index()])
    }

    pub fn route_to(&self, graph: &PlantGraph, node: NodeId) -> Option<Route> {
        let time_s = self.time_to(node)?;
        let length_m = self.length_to(node)?;
        let mut edges = Vec::new();
        let mut cur = node;
        // `pred` never points back into the root, so the walk terminates
        while let Some(e) = self.pred[cur.index()] {
            edges.push(e);
            cur = graph.edge(e).from;
        }
        if let Some((e, _)) = self.prefix {
            edges.push(e);
        }
        edges.reverse();
        Some(Route {
            edges,
            start_offset_m: self.prefix.map_or(0.0, |(_, off)| off),
            length_m,
            time_s,
        })
    }

    /// Candidate with the smallest travel time; ties go to the lowest id.
    pub fn nearest(&self, candidates: impl IntoIterator<Item = NodeId>) -> Option<NodeId> {
        let mut best: Option<(f64, NodeId)> = None;
        for n in candidates {
            let Some(t) = self.time_to(n) else { continue };
            let better = match best {
                None => true,
                Some((bt, bn)) => t < bt || (t == bt && n < bn),
            };
            if better {
                best = Some((t, n));
            }
        }
        best.map(|(_, n)| n)
    }
}

impl PlantGraph {
    /// Minimum effective-time path between two nodes with costs frozen at `now`.
    pub fn shortest_path(
        &self,
        from: NodeId,
        to: NodeId,
        weights: &CostWeights,
        now: f64,
    ) -> Result<Path, RoutingError> {
        self.shortest_path_for(from, to, weights, now, None)
    }

    /// As [`shortest_path`](Self::shortest_path), ignoring the occupancy of `me`.
    pub fn shortest_path_for(
        &self,
        from: NodeId,
        to: NodeId,
        weights: &CostWeights,
        now: f64,
        me: Option<VehicleId>,
    ) -> Result<Path, RoutingError> {
        let tree = self.search(from, Some(to), weights, now, me);
        let route = tree
            .route_to(self, to)
            .ok_or(RoutingError::Unreachable(to))?;
        Ok(Path {
            edges: route.edges,
            time_s: route.time_s,
            length_m: route.length_m,
        })
    }

    /// Full shortest-time tree from a vehicle position.
    pub fn tree_from(
        &self,
        position: Position,
        weights: &CostWeights,
        now: f64,
        me: Option<VehicleId>,
    ) -> ShortestPathTree {
        match position {
            Position::Node(n) => self.search(n, None, weights, now, me),
            Position::OnEdge { edge, offset_m } => {
                let e = self.edge(edge);
                let remaining = (e.length_m - offset_m).max(0.0);
                let frac = remaining / e.length_m;
                let mut tree = self.search(e.to, None, weights, now, me);
                tree.prefix = Some((edge, offset_m));
                tree.prefix_length = remaining;
                tree.prefix_time = frac * self.effective_traverse_time(edge, weights, now, me);
                tree
            }
        }
    }

    pub fn route_from(
        &self,
        position: Position,
        to: NodeId,
        weights: &CostWeights,
        now: f64,
        me: Option<VehicleId>,
    ) -> Result<Route, RoutingError> {
        self.tree_from(position, weights, now, me)
            .route_to(self, to)
            .ok_or(RoutingError::Unreachable(to))
    }

    fn search(
        &self,
        from: NodeId,
        target: Option<NodeId>,
        weights: &CostWeights,
        now: f64,
        me: Option<VehicleId>,
    ) -> ShortestPathTree {
        let n = self.nodes().len();
        let mut time = vec![f64::INFINITY; n];
        let mut length = vec![0.0; n];
        let mut pred: Vec<Option<EdgeId>> = vec![None; n];
        let mut settled = vec![false; n];
        let mut heap = BinaryHeap::new();
        time[from.index()] = 0.0;
        heap.push(HeapItem {
            cost: 0.0,
            node: from.0,
        });
        while let Some(HeapItem { cost, node }) = heap.pop() {
            let u = node as usize;
            if settled[u] {
                continue;
            }
            settled[u] = true;
            if target.is_some_and(|t| t.0 == node) {
                break;
            }
            for &eid in self.out_edges(NodeId(node)) {
                let e = self.edge(eid);
                let v = e.to.index();
                if settled[v] {
                    continue;
                }
                let cand = cost + self.effective_traverse_time(eid, weights, now, me);
                if cand < time[v] {
                    time[v] = cand;
                    length[v] = length[u] + e.length_m;
                    pred[v] = Some(eid);
                    heap.push(HeapItem {
                        cost: cand,
                        node: v as u32,
                    });
                }
            }
        }
        // an early stop leaves tentative labels behind; only settled ones are final
        if target.is_some() {
            for (t, s) in time.iter_mut().zip(&settled) {
                if !s {
                    *t = f64::INFINITY;
                }
            }
        }
        ShortestPathTree {
            prefix: None,
            prefix_length: 0.0,
            prefix_time: 0.0,
            time,
            length,
            pred,
        }
    }
}

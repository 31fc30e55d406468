//! Map file format and validation.

use std::collections::{HashMap, HashSet, VecDeque};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DecayParams, Edge, EdgeId, Node, NodeId, NodeKind, PlantGraph, VisitState};

/// Reference speed used for free-flow traverse times: the fastest vehicle
/// class (22 km/h).
pub const REFERENCE_SPEED_MPS: f64 = 22.0 / 3.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapNode {
    pub id: u32,
    pub kind: NodeKind,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapEdge {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    pub length_m: f64,
    pub speed_limit_mps: f64,
}

/// On-disk map: nodes and directed edges. Two-way streets are two edges.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub nodes: Vec<MapNode>,
    pub edges: Vec<MapEdge>,
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("cannot read map file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed map: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate node id {0}")]
    DuplicateNode(u32),
    #[error("duplicate edge id {0}")]
    DuplicateEdge(u32),
    #[error("edge {edge} references unknown node {node}")]
    UnknownNode { edge: u32, node: u32 },
    #[error("edge {edge}: {field} must be positive and finite")]
    NonPositive { edge: u32, field: &'static str },
    #[error("map has no depot")]
    NoDepot,
    #[error("node {node} is not reachable from depot {depot}")]
    Unreachable { depot: u32, node: u32 },
}

impl MapFile {
    pub fn from_json(text: &str) -> Result<Self, MapError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self, MapError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serialises")
    }

    /// Validates the map and builds a routable graph.
    pub fn build(&self, decay: DecayParams) -> Result<PlantGraph, MapError> {
        let mut nodes = self.nodes.clone();
        nodes.sort_by_key(|n| n.id);
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id, NodeId(i as u32)).is_some() {
                return Err(MapError::DuplicateNode(n.id));
            }
        }

        let mut edges = self.edges.clone();
        edges.sort_by_key(|e| e.id);
        let mut seen = HashSet::with_capacity(edges.len());
        let mut built = Vec::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            if !seen.insert(e.id) {
                return Err(MapError::DuplicateEdge(e.id));
            }
            let lookup = |node| {
                index
                    .get(&node)
                    .copied()
                    .ok_or(MapError::UnknownNode { edge: e.id, node })
            };
            let (from, to) = (lookup(e.from)?, lookup(e.to)?);
            for (field, v) in [("length_m", e.length_m), ("speed_limit_mps", e.speed_limit_mps)] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(MapError::NonPositive { edge: e.id, field });
                }
            }
            built.push(Edge {
                id: EdgeId(i as u32),
                label: e.id,
                from,
                to,
                length_m: e.length_m,
                speed_limit_mps: e.speed_limit_mps,
                base_traverse_time: e.length_m / e.speed_limit_mps.min(REFERENCE_SPEED_MPS),
                visit: VisitState::default(),
                occupied_by: Vec::new(),
            });
        }

        let nodes: Vec<Node> = nodes
            .into_iter()
            .enumerate()
            .map(|(i, n)| Node {
                id: NodeId(i as u32),
                label: n.id,
                kind: n.kind,
                x: n.x,
                y: n.y,
            })
            .collect();
        let graph = PlantGraph::from_parts(nodes, built, decay);
        validate_reachability(&graph)?;
        Ok(graph)
    }
}

fn validate_reachability(graph: &PlantGraph) -> Result<(), MapError> {
    let depots: Vec<NodeId> = graph.nodes_of_kind(NodeKind::Depot).collect();
    if depots.is_empty() {
        return Err(MapError::NoDepot);
    }
    for depot in depots {
        let mut seen = vec![false; graph.nodes().len()];
        let mut queue = VecDeque::from([depot]);
        seen[depot.index()] = true;
        while let Some(n) = queue.pop_front() {
            for &e in graph.out_edges(n) {
                let to = graph.edge(e).to;
                if !seen[to.index()] {
                    seen[to.index()] = true;
                    queue.push_back(to);
                }
            }
        }
        if let Some(n) = graph
            .nodes()
            .iter()
            .find(|n| n.kind != NodeKind::Junction && !seen[n.id.index()])
        {
            return Err(MapError::Unreachable {
                depot: graph.node(depot).label,
                node: n.label,
            });
        }
    }
    Ok(())
}

impl PlantGraph {
    pub fn from_json(text: &str, decay: DecayParams) -> Result<Self, MapError> {
        MapFile::from_json(text)?.build(decay)
    }

    pub fn load(path: impl AsRef<FsPath>, decay: DecayParams) -> Result<Self, MapError> {
        MapFile::load(path)?.build(decay)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: u32, kind: NodeKind) -> MapNode {
        MapNode {
            id,
            kind,
            x: 0.0,
            y: 0.0,
        }
    }

    fn edge(id: u32, from: u32, to: u32) -> MapEdge {
        MapEdge {
            id,
            from,
            to,
            length_m: 10.0,
            speed_limit_mps: 5.0,
        }
    }

    #[test]
    fn base_time_uses_slower_of_limit_and_reference() {
        let map = MapFile {
            nodes: vec![node(1, NodeKind::Depot), node(2, NodeKind::PotCell)],
            edges: vec![
                edge(10, 1, 2),
                MapEdge {
                    speed_limit_mps: 30.0,
                    ..edge(11, 2, 1)
                },
            ],
        };
        let g = map.build(DecayParams::default()).unwrap();
        assert_eq!(g.edge(EdgeId(0)).base_traverse_time, 2.0);
        assert!((g.edge(EdgeId(1)).base_traverse_time - 10.0 / REFERENCE_SPEED_MPS).abs() < 1e-12);
    }

    #[test]
    fn ids_are_reindexed_in_ascending_order() {
        let map = MapFile {
            nodes: vec![node(7, NodeKind::PotCell), node(3, NodeKind::Depot)],
            edges: vec![edge(5, 7, 3), edge(2, 3, 7)],
        };
        let g = map.build(DecayParams::default()).unwrap();
        assert_eq!(g.node(NodeId(0)).label, 3);
        assert_eq!(g.edge(EdgeId(0)).label, 2);
        assert_eq!(g.node_by_label(7), Some(NodeId(1)));
    }

    #[test]
    fn rejects_unreachable_poi() {
        let map = MapFile {
            nodes: vec![
                node(1, NodeKind::Depot),
                node(2, NodeKind::Junction),
                node(3, NodeKind::CastHouse),
            ],
            edges: vec![edge(1, 1, 2), edge(2, 2, 1), edge(3, 3, 2)],
        };
        assert!(matches!(
            map.build(DecayParams::default()),
            Err(MapError::Unreachable { depot: 1, node: 3 })
        ));
    }

    #[test]
    fn rejects_bad_edges() {
        let mut map = MapFile {
            nodes: vec![node(1, NodeKind::Depot), node(2, NodeKind::PotCell)],
            edges: vec![edge(1, 1, 2), edge(2, 2, 9)],
        };
        assert!(matches!(
            map.build(DecayParams::default()),
            Err(MapError::UnknownNode { edge: 2, node: 9 })
        ));
        map.edges[1] = MapEdge {
            length_m: 0.0,
            ..edge(2, 2, 1)
        };
        assert!(matches!(
            map.build(DecayParams::default()),
            Err(MapError::NonPositive { edge: 2, field: "length_m" })
        ));
        map.edges[1] = edge(1, 2, 1);
        assert!(matches!(map.build(DecayParams::default()), Err(MapError::DuplicateEdge(1))));
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"{"nodes": [], "edges": [], "extra": 1}"#;
        assert!(matches!(MapFile::from_json(text), Err(MapError::Parse(_))));
    }

    #[test]
    fn requires_depot() {
        let map = MapFile {
            nodes: vec![node(1, NodeKind::Junction)],
            edges: vec![],
        };
        assert!(matches!(map.build(DecayParams::default()), Err(MapError::NoDepot)));
    }
}

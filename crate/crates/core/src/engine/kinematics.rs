//! Trapezoidal speed profile and movement along a route.

use serde::{Deserialize, Serialize};

use crate::plant_graph::{EdgeId, NodeId, PlantGraph, Position, Route};

/// Kinematic and mass parameters of one vehicle class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassParams {
    pub v_max_mps: f64,
    pub accel_mps2: f64,
    pub decel_mps2: f64,
    pub mass_empty_kg: f64,
    pub mass_full_kg: f64,
}

impl ClassParams {
    pub fn validate(&self, class: &str) -> Result<(), String> {
        for (name, v) in [
            ("v_max_mps", self.v_max_mps),
            ("accel_mps2", self.accel_mps2),
            ("decel_mps2", self.decel_mps2),
            ("mass_empty_kg", self.mass_empty_kg),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("vehicles.{class}.{name} must be > 0 (got {v})"));
            }
        }
        if !(self.mass_full_kg >= self.mass_empty_kg) {
            return Err(format!("vehicles.{class}.mass_full_kg must be >= mass_empty_kg"));
        }
        Ok(())
    }

    /// Mass with a payload fraction in [0, 1].
    pub fn mass(&self, payload_fraction: f64) -> f64 {
        self.mass_empty_kg + payload_fraction.clamp(0.0, 1.0) * (self.mass_full_kg - self.mass_empty_kg)
    }

    /// Distance needed to stop from `v`.
    pub fn braking_distance(&self, v: f64) -> f64 {
        v * v / (2.0 * self.decel_mps2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub distance_m: f64,
    pub v_end: f64,
    /// The vehicle stopped at the end of the remaining distance.
    pub arrived: bool,
}

const EPS: f64 = 1e-9;

/// Integrates one step of the speed profile: accelerate to `v_max`, cruise,
/// and brake so the vehicle stops exactly `remaining_m` ahead.
pub fn profile_step(v0: f64, remaining_m: f64, p: &ClassParams, dt: f64) -> Profile {
    let (a, b, vmax) = (p.accel_mps2, p.decel_mps2, p.v_max_mps);
    let mut v = v0.clamp(0.0, vmax);
    let mut s = 0.0;
    let mut tau = dt;
    for _ in 0..8 {
        let rem = remaining_m - s;
        if rem <= EPS {
            return Profile {
                distance_m: remaining_m.max(0.0),
                v_end: 0.0,
                arrived: true,
            };
        }
        if tau <= EPS {
            break;
        }
        let brake = v * v / (2.0 * b);
        if brake >= rem - EPS {
            // constant deceleration that lands exactly on the end point
            let t_stop = 2.0 * rem / v;
            if t_stop <= tau {
                return Profile {
                    distance_m: remaining_m,
                    v_end: 0.0,
                    arrived: true,
                };
            }
            let bb = v * v / (2.0 * rem);
            s += v * tau - 0.5 * bb * tau * tau;
            v -= bb * tau;
            break;
        }
        if v < vmax - EPS {
            // accelerate until v_max or the braking point, whichever comes first
            let t_max = (vmax - v) / a;
            let qa = 0.5 * a + a * a / (2.0 * b);
            let qb = v + a * v / b;
            let qc = brake - rem;
            let t_brake = (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
            let t = t_max.min(t_brake).min(tau);
            s += v * t + 0.5 * a * t * t;
            v = (v + a * t).min(vmax);
            tau -= t;
            continue;
        }
        let t = ((rem - brake) / v).min(tau);
        s += v * t;
        tau -= t;
    }
    Profile {
        distance_m: s.min(remaining_m),
        v_end: v.max(0.0),
        arrived: false,
    }
}

/// Progress along a route.
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    edges: Vec<EdgeId>,
    idx: usize,
    offset_m: f64,
    remaining_m: f64,
    dest: NodeId,
}

impl Leg {
    /// Starts a leg; `route` must not be empty.
    pub fn new(graph: &PlantGraph, route: Route) -> Self {
        let last = *route.edges.last().expect("non-empty route");
        Self {
            dest: graph.edge(last).to,
            remaining_m: route.length_m,
            offset_m: route.start_offset_m,
            idx: 0,
            edges: route.edges,
        }
    }

    pub fn remaining_m(&self) -> f64 {
        self.remaining_m
    }

    pub fn destination(&self) -> NodeId {
        self.dest
    }

    /// Edge currently driven on, if any.
    pub fn current_edge(&self) -> Option<EdgeId> {
        self.edges.get(self.idx).copied()
    }

    pub fn is_finished(&self) -> bool {
        self.idx >= self.edges.len()
    }

    pub fn position(&self, graph: &PlantGraph) -> Position {
        match self.current_edge() {
            None => Position::Node(self.dest),
            Some(e) if self.offset_m <= 0.0 => Position::Node(graph.edge(e).from),
            Some(edge) => Position::OnEdge {
                edge,
                offset_m: self.offset_m,
            },
        }
    }

    /// Moves `distance` metres ahead; returns the edges completed on the way.
    /// `arrived` forces completion of whatever is left.
    pub fn advance(&mut self, graph: &PlantGraph, distance: f64, arrived: bool) -> Vec<EdgeId> {
        let mut done = Vec::new();
        let mut d = distance;
        while let Some(e) = self.current_edge() {
            let left = graph.edge(e).length_m - self.offset_m;
            if arrived || d >= left - EPS {
                d -= left;
                done.push(e);
                self.idx += 1;
                self.offset_m = 0.0;
            } else {
                self.offset_m += d.max(0.0);
                break;
            }
        }
        self.remaining_m = if self.is_finished() {
            0.0
        } else {
            (self.remaining_m - distance).max(0.0)
        };
        done
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicOutcome {
    pub distance_m: f64,
    pub v_start: f64,
    pub v_end: f64,
    pub completed: Vec<EdgeId>,
    pub arrived: bool,
}

/// One step of movement along `leg`, starting at speed `speed`.
pub fn kinematic_step(
    graph: &PlantGraph,
    leg: &mut Leg,
    speed: f64,
    params: &ClassParams,
    dt: f64,
) -> KinematicOutcome {
    let p = profile_step(speed, leg.remaining_m(), params, dt);
    let completed = leg.advance(graph, p.distance_m, p.arrived);
    KinematicOutcome {
        distance_m: p.distance_m,
        v_start: speed,
        v_end: p.v_end,
        completed,
        arrived: p.arrived || leg.is_finished(),
    }
}

//! Plant requests: arrival streams, service times and the open-request queue.
//!
//! Default mean intervals come from the plant's request table, in days:
//! AlF3 refill 0.45, anode replacement 0.0875, aluminium collection 0.24.
//! Garbage collection follows anode work: by default one garbage request is
//! spawned per completed anode replacement, unless an independent interval
//! is configured.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::fsm::VehicleClass;
use crate::plant_graph::{NodeId, NodeKind, PlantGraph};
use crate::rng::{SimRng, Streams};
use crate::VehicleId;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    #[serde(rename = "alf3_refill")]
    AlF3Refill,
    AnodeReplacement,
    GarbageCollection,
    CollectAluminium,
}

impl RequestKind {
    pub const ALL: [RequestKind; 4] = [
        RequestKind::AlF3Refill,
        RequestKind::AnodeReplacement,
        RequestKind::GarbageCollection,
        RequestKind::CollectAluminium,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RequestKind::AlF3Refill => "alf3_refill",
            RequestKind::AnodeReplacement => "anode_replacement",
            RequestKind::GarbageCollection => "garbage_collection",
            RequestKind::CollectAluminium => "collect_aluminium",
        }
    }

    pub fn class(self) -> VehicleClass {
        match self {
            RequestKind::AlF3Refill => VehicleClass::Ffv,
            RequestKind::AnodeReplacement | RequestKind::GarbageCollection => VehicleClass::Aptv,
            RequestKind::CollectAluminium => VehicleClass::Mtv,
        }
    }
}

impl std::fmt::Display for RequestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One value per request kind, keyed by the kind's snake_case name in files.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerKind<T> {
    pub alf3_refill: T,
    pub anode_replacement: T,
    pub garbage_collection: T,
    pub collect_aluminium: T,
}

impl<T> PerKind<T> {
    pub fn get(&self, kind: RequestKind) -> &T {
        match kind {
            RequestKind::AlF3Refill => &self.alf3_refill,
            RequestKind::AnodeReplacement => &self.anode_replacement,
            RequestKind::GarbageCollection => &self.garbage_collection,
            RequestKind::CollectAluminium => &self.collect_aluminium,
        }
    }

    pub fn get_mut(&mut self, kind: RequestKind) -> &mut T {
        match kind {
            RequestKind::AlF3Refill => &mut self.alf3_refill,
            RequestKind::AnodeReplacement => &mut self.anode_replacement,
            RequestKind::GarbageCollection => &mut self.garbage_collection,
            RequestKind::CollectAluminium => &mut self.collect_aluminium,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub kind: RequestKind,
    pub origin: NodeId,
    pub created_at: f64,
    pub assigned_at: Option<f64>,
    pub vehicle: Option<VehicleId>,
    pub completed_at: Option<f64>,
}

impl Request {
    pub fn new(id: u64, kind: RequestKind, origin: NodeId, created_at: f64) -> Self {
        Self {
            id,
            kind,
            origin,
            created_at,
            assigned_at: None,
            vehicle: None,
            completed_at: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalMode {
    #[default]
    Poisson,
    Periodic,
}

/// Whether a mean interval applies to the whole plant or to every source cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalScope {
    #[default]
    Plant,
    PerCell,
}

/// Resolved arrival stream of one request kind.
#[derive(Debug, Clone, PartialEq)]
pub struct KindArrivals {
    pub kind: RequestKind,
    pub mean_interval_s: f64,
    pub sources: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSpec {
    pub mode: ArrivalMode,
    pub scope: ArrivalScope,
    pub streams: Vec<KindArrivals>,
}

impl ArrivalSpec {
    pub fn validate(&self) -> Result<(), String> {
        for s in &self.streams {
            if !(s.mean_interval_s.is_finite() && s.mean_interval_s > 0.0) {
                return Err(format!("arrivals.{}: mean interval must be > 0", s.kind));
            }
            if s.sources.is_empty() {
                return Err(format!("arrivals.{}: source set is empty", s.kind));
            }
        }
        Ok(())
    }
}

/// File form of one kind's arrival stream. Give the interval in seconds or
/// days, not both; `sources` are node ids of the map file (default: all pot cells).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KindArrivalConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_interval_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_interval_days: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<u32>>,
}

impl KindArrivalConfig {
    fn days(d: f64) -> Self {
        Self {
            mean_interval_days: Some(d),
            ..Self::default()
        }
    }

    fn interval_s(&self, kind: RequestKind) -> Result<Option<f64>, String> {
        match (self.mean_interval_s, self.mean_interval_days) {
            (Some(_), Some(_)) => Err(format!(
                "arrivals.{kind}: give mean_interval_s or mean_interval_days, not both"
            )),
            (Some(s), None) => Ok(Some(s)),
            (None, Some(d)) => {
                let s = d * SECONDS_PER_DAY;
                log::info!("arrivals.{kind}: {d} days = {s:.0} s");
                Ok(Some(s))
            }
            (None, None) => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrivalConfig {
    pub mode: ArrivalMode,
    pub scope: ArrivalScope,
    pub alf3_refill: KindArrivalConfig,
    pub anode_replacement: KindArrivalConfig,
    pub collect_aluminium: KindArrivalConfig,
    /// Without an interval, garbage requests follow completed anode replacements.
    pub garbage_collection: KindArrivalConfig,
}

impl Default for ArrivalConfig {
    fn default() -> Self {
        Self {
            mode: ArrivalMode::Poisson,
            scope: ArrivalScope::Plant,
            alf3_refill: KindArrivalConfig::days(0.45),
            anode_replacement: KindArrivalConfig::days(0.0875),
            collect_aluminium: KindArrivalConfig::days(0.24),
            garbage_collection: KindArrivalConfig::default(),
        }
    }
}

impl ArrivalConfig {
    fn kind(&self, kind: RequestKind) -> &KindArrivalConfig {
        match kind {
            RequestKind::AlF3Refill => &self.alf3_refill,
            RequestKind::AnodeReplacement => &self.anode_replacement,
            RequestKind::GarbageCollection => &self.garbage_collection,
            RequestKind::CollectAluminium => &self.collect_aluminium,
        }
    }

    /// Garbage requests are spawned by anode work rather than by a stream.
    pub fn garbage_follows_anodes(&self) -> bool {
        let g = &self.garbage_collection;
        g.mean_interval_s.is_none() && g.mean_interval_days.is_none()
    }

    /// Resolves source node ids against `graph`.
    pub fn resolve(&self, graph: &PlantGraph) -> Result<ArrivalSpec, String> {
        let pot_cells: Vec<NodeId> = graph.nodes_of_kind(NodeKind::PotCell).collect();
        let mut streams = Vec::new();
        for kind in RequestKind::ALL {
            let cfg = self.kind(kind);
            let Some(mean_interval_s) = cfg.interval_s(kind)? else {
                if cfg.sources.is_some() {
                    return Err(format!("arrivals.{kind}: sources given without an interval"));
                }
                continue;
            };
            let sources = match &cfg.sources {
                None => pot_cells.clone(),
                Some(labels) => labels
                    .iter()
                    .map(|&l| {
                        graph
                            .node_by_label(l)
                            .ok_or_else(|| format!("arrivals.{kind}: unknown source node {l}"))
                    })
                    .collect::<Result<_, _>>()?,
            };
            streams.push(KindArrivals {
                kind,
                mean_interval_s,
                sources,
            });
        }
        let spec = ArrivalSpec {
            mode: self.mode,
            scope: self.scope,
            streams,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// An arrival before it becomes a [`Request`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub time: f64,
    pub kind: RequestKind,
    pub origin: NodeId,
}

#[derive(Debug, Clone)]
struct Source {
    kind: RequestKind,
    mean_interval_s: f64,
    /// Fixed origin for per-cell sources; drawn per arrival otherwise.
    origin: Option<NodeId>,
    pool: Vec<NodeId>,
    next: f64,
    rng: SimRng,
}

impl Source {
    fn advance(&mut self, mode: ArrivalMode) {
        self.next += match mode {
            ArrivalMode::Poisson => exp_interval(&mut self.rng, self.mean_interval_s),
            ArrivalMode::Periodic => self.mean_interval_s,
        };
    }

    fn draw_origin(&mut self) -> NodeId {
        match self.origin {
            Some(o) => o,
            None => self.pool[self.rng.random_range(0..self.pool.len())],
        }
    }
}

fn exp_interval(rng: &mut SimRng, mean: f64) -> f64 {
    Exp::new(1.0 / mean).expect("positive rate").sample(rng)
}

/// Stateful arrival generator. Each source draws from its own named stream.
#[derive(Debug, Clone)]
pub struct ArrivalProcess {
    mode: ArrivalMode,
    sources: Vec<Source>,
}

impl ArrivalProcess {
    pub fn new(spec: &ArrivalSpec, streams: &Streams, t0: f64) -> Self {
        let mut sources = Vec::new();
        for s in &spec.streams {
            let origins: Vec<Option<NodeId>> = match spec.scope {
                ArrivalScope::Plant => vec![None],
                ArrivalScope::PerCell => s.sources.iter().map(|&n| Some(n)).collect(),
            };
            for (i, origin) in origins.into_iter().enumerate() {
                let name = format!("arrivals/{}", s.kind);
                let mut rng = streams.indexed(&name, i as u64);
                let first = match spec.mode {
                    ArrivalMode::Poisson => exp_interval(&mut rng, s.mean_interval_s),
                    ArrivalMode::Periodic => rng.random_range(0.0..s.mean_interval_s),
                };
                sources.push(Source {
                    kind: s.kind,
                    mean_interval_s: s.mean_interval_s,
                    origin,
                    pool: s.sources.clone(),
                    next: t0 + first,
                    rng,
                });
            }
        }
        Self {
            mode: spec.mode,
            sources,
        }
    }

    /// All arrivals strictly before `until`, ordered by time, then source.
    pub fn poll(&mut self, until: f64) -> Vec<Arrival> {
        let mut out = Vec::new();
        for src in &mut self.sources {
            while src.next < until {
                let origin = src.draw_origin();
                out.push(Arrival {
                    time: src.next,
                    kind: src.kind,
                    origin,
                });
                src.advance(self.mode);
            }
        }
        out.sort_by(|a, b| a.time.total_cmp(&b.time));
        out
    }
}

/// Requests arriving in `[t0, t1)`, numbered from 0.
pub fn generate(spec: &ArrivalSpec, streams: &Streams, t0: f64, t1: f64) -> Vec<Request> {
    if t1 <= t0 {
        return Vec::new();
    }
    ArrivalProcess::new(spec, streams, t0)
        .poll(t1)
        .into_iter()
        .enumerate()
        .map(|(i, a)| Request::new(i as u64, a.kind, a.origin, a.time))
        .collect()
}

/// Gaussian service durations, truncated below at `floor_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceSpec {
    pub mean_s: PerKind<f64>,
    pub cv: f64,
    pub floor_s: f64,
}

impl Default for ServiceSpec {
    fn default() -> Self {
        Self {
            mean_s: PerKind {
                alf3_refill: 120.0,
                anode_replacement: 900.0,
                garbage_collection: 300.0,
                collect_aluminium: 600.0,
            },
            cv: 0.15,
            floor_s: 1.0,
        }
    }
}

impl ServiceSpec {
    pub fn validate(&self) -> Result<(), String> {
        for kind in RequestKind::ALL {
            let m = *self.mean_s.get(kind);
            if !(m.is_finite() && m > 0.0) {
                return Err(format!("service.mean_s.{kind} must be > 0 (got {m})"));
            }
        }
        if !(0.0..1.0).contains(&self.cv) {
            return Err(format!("service.cv must be in [0, 1) (got {})", self.cv));
        }
        if !(self.floor_s.is_finite() && self.floor_s > 0.0) {
            return Err(format!("service.floor_s must be > 0 (got {})", self.floor_s));
        }
        Ok(())
    }
}

pub fn service_time(spec: &ServiceSpec, kind: RequestKind, rng: &mut SimRng) -> f64 {
    let mean = *spec.mean_s.get(kind);
    if spec.cv == 0.0 {
        return mean.max(spec.floor_s);
    }
    let draw = Normal::new(mean, spec.cv * mean)
        .expect("valid service spec")
        .sample(rng);
    draw.max(spec.floor_s)
}

/// Open (unassigned) requests, FIFO per kind.
#[derive(Debug, Clone, Default)]
pub struct RequestQueue {
    queues: [VecDeque<u64>; 4],
}

impl RequestQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, request: &Request) {
        self.queues[request.kind.index()].push_back(request.id);
    }

    pub fn pop_oldest(&mut self, kind: RequestKind) -> Option<u64> {
        self.queues[kind.index()].pop_front()
    }

    /// Removes a specific request; used when a younger request is assigned
    /// ahead of an older one that has no eligible vehicle.
    pub fn remove(&mut self, kind: RequestKind, id: u64) -> bool {
        let q = &mut self.queues[kind.index()];
        match q.iter().position(|&r| r == id) {
            Some(pos) => {
                q.remove(pos);
                true
            }
            None => false,
        }
    }

    pub fn iter(&self, kind: RequestKind) -> impl Iterator<Item = u64> + '_ {
        self.queues[kind.index()].iter().copied()
    }

    /// Open-request count per kind, in [`RequestKind::ALL`] order.
    pub fn peek_counts(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|i| self.queues[i].len())
    }

    pub fn len(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant_graph::default_map;
    use crate::DecayParams;

    fn spec(mean: f64) -> ArrivalSpec {
        ArrivalSpec {
            mode: ArrivalMode::Poisson,
            scope: ArrivalScope::Plant,
            streams: vec![KindArrivals {
                kind: RequestKind::AnodeReplacement,
                mean_interval_s: mean,
                sources: vec![NodeId(1), NodeId(2), NodeId(3)],
            }],
        }
    }

    #[test]
    fn empty_window() {
        assert!(generate(&spec(10.0), &Streams::new(1), 50.0, 50.0).is_empty());
    }

    #[test]
    fn generation_is_deterministic_and_ordered() {
        let a = generate(&spec(100.0), &Streams::new(3), 0.0, 10_000.0);
        let b = generate(&spec(100.0), &Streams::new(3), 0.0, 10_000.0);
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].created_at <= w[1].created_at));
        assert!(a.iter().all(|r| (0.0..10_000.0).contains(&r.created_at)));
        assert!(a.iter().all(|r| [1, 2, 3].contains(&r.origin.0)));
    }

    #[test]
    fn anode_rate_over_a_week() {
        let horizon = 7.0 * SECONDS_PER_DAY;
        let lambda = horizon / (0.0875 * SECONDS_PER_DAY);
        assert!((lambda - 80.0).abs() < 1e-9);
        let total: usize = (0..20)
            .map(|seed| generate(&spec(7560.0), &Streams::new(seed), 0.0, horizon).len())
            .sum();
        let mean = total as f64 / 20.0;
        assert!((mean - lambda).abs() < 3.0 * lambda.sqrt(), "mean {mean}");
    }

    #[test]
    fn periodic_is_evenly_spaced() {
        let mut s = spec(600.0);
        s.mode = ArrivalMode::Periodic;
        let reqs = generate(&s, &Streams::new(9), 0.0, 6000.0);
        assert_eq!(reqs.len(), 10);
        for w in reqs.windows(2) {
            assert!((w[1].created_at - w[0].created_at - 600.0).abs() < 1e-9);
        }
    }

    #[test]
    fn per_cell_scope_multiplies_sources() {
        let mut s = spec(7560.0);
        s.scope = ArrivalScope::PerCell;
        let horizon = 70.0 * SECONDS_PER_DAY;
        let n = generate(&s, &Streams::new(2), 0.0, horizon).len() as f64;
        let lambda = 3.0 * horizon / 7560.0;
        assert!((n - lambda).abs() < 4.0 * lambda.sqrt());
    }

    #[test]
    fn service_time_degenerate_and_floor() {
        let mut rng = Streams::new(0).stream("service");
        let mut s = ServiceSpec {
            cv: 0.0,
            ..ServiceSpec::default()
        };
        assert_eq!(service_time(&s, RequestKind::CollectAluminium, &mut rng), 600.0);
        s.cv = 0.9;
        s.mean_s.garbage_collection = 1.0;
        s.floor_s = 1.0;
        for _ in 0..1000 {
            assert!(service_time(&s, RequestKind::GarbageCollection, &mut rng) >= 1.0);
        }
    }

    #[test]
    fn service_time_mean() {
        let mut rng = Streams::new(4).stream("service");
        let s = ServiceSpec {
            cv: 0.2,
            ..ServiceSpec::default()
        };
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| service_time(&s, RequestKind::CollectAluminium, &mut rng))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 600.0).abs() < 12.0, "mean {mean}");
    }

    #[test]
    fn queue_fifo_counts() {
        let mut q = RequestQueue::new();
        for i in 0..3 {
            q.push(&Request::new(i, RequestKind::CollectAluminium, NodeId(0), i as f64));
        }
        assert_eq!(q.pop_oldest(RequestKind::CollectAluminium), Some(0));
        assert_eq!(q.peek_counts(), [0, 0, 0, 2]);
        assert_eq!(q.pop_oldest(RequestKind::AlF3Refill), None);
        assert!(q.remove(RequestKind::CollectAluminium, 2));
        assert_eq!(q.iter(RequestKind::CollectAluminium).collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn default_config_resolves_on_bundled_map() {
        let g = default_map(DecayParams::default());
        let cfg = ArrivalConfig::default();
        assert!(cfg.garbage_follows_anodes());
        let spec = cfg.resolve(&g).unwrap();
        assert_eq!(spec.streams.len(), 3);
        let anode = &spec.streams[1];
        assert_eq!(anode.kind, RequestKind::AnodeReplacement);
        assert!((anode.mean_interval_s - 7560.0).abs() < 1e-9);
        assert_eq!(anode.sources.len(), g.nodes_of_kind(crate::plant_graph::NodeKind::PotCell).count());
        assert_eq!(anode.sources.len(), 240);
    }

    #[test]
    fn both_interval_units_rejected() {
        let g = default_map(DecayParams::default());
        let mut cfg = ArrivalConfig::default();
        cfg.alf3_refill.mean_interval_s = Some(100.0);
        assert!(cfg.resolve(&g).is_err());
    }
}

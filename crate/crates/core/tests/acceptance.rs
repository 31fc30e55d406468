//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fleetsim::dispatch::{pm_select, PmCandidate, TaskGeometry};
use fleetsim::engine::{ChargeMode, FleetMix};
use fleetsim::fsm::{next_state, StateGroup, Symbol, VehicleClass, VehicleState};
use fleetsim::output::write_all;
use fleetsim::plant_graph::{
    default_map, forget_value, EdgeId, MapEdge, MapFile, MapNode, NodeId, NodeKind, Position, VisitState,
};
use fleetsim::requests::{generate, ArrivalConfig, RequestKind};
use fleetsim::rng::Streams;
use fleetsim::{run, CostWeights, DecayParams, MetricsLog, PlantGraph, SimConfig, VehicleId};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- 1

fn forget_halving() -> Outcome {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let ff: f64 = r.random_range(0.0..1000.0);
        let k: f64 = r.random_range(1e-5..1.0);
        let t0: f64 = r.random_range(0.0..1e6);
        // the offset actually representable at this t0, so `now - t0 == dt`
        let dt = (t0 + r.random_range(1.0..1e5)) - t0;
        let state = VisitState {
            ff_value: ff,
            last_visit_time: t0,
            cumulative_visit_count: r.random_range(1..100),
        };
        let params = DecayParams {
            k,
            delta_t_s: dt,
            visit_increment: 1.0,
        };
        let now = t0 + dt;
        assert_eq!(now - t0, dt);
        let got = forget_value(&state, &params, now);
        worst = worst.max((got - (1.0 + ff / 2.0)).abs());
    }
    outcome(worst <= 1e-9, format!("1000 cases, max |error| {worst:.1e}"))
}

// ---------------------------------------------------------------- 2

struct RandomGraph {
    map: MapFile,
    visits: Vec<VisitState>,
    occupied: Vec<bool>,
    decay: DecayParams,
    weights: CostWeights,
    now: f64,
}

// Node 0 is the depot; a random chain from it keeps every node reachable.
fn random_topology(r: &mut ChaCha8Rng, n: usize, integer_lengths: bool, uniform_speed: Option<f64>) -> MapFile {
    let mut order: Vec<u32> = (1..n as u32).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, r.random_range(0..=i));
    }
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut prev = 0;
    for &v in &order {
        pairs.push((prev, v));
        prev = v;
    }
    for a in 0..n as u32 {
        for b in 0..n as u32 {
            if a != b && r.random_bool(0.3) {
                pairs.push((a, b));
            }
        }
    }
    // a few parallel edges
    for _ in 0..r.random_range(0..3) {
        let p = pairs[r.random_range(0..pairs.len())];
        pairs.push(p);
    }
    let nodes = (0..n as u32)
        .map(|id| MapNode {
            id,
            kind: if id == 0 { NodeKind::Depot } else { NodeKind::Junction },
            x: 0.0,
            y: 0.0,
        })
        .collect();
    let edges = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (from, to))| MapEdge {
            id: i as u32,
            from,
            to,
            length_m: if integer_lengths {
                r.random_range(1..=100) as f64
            } else {
                r.random_range(1.0..500.0)
            },
            speed_limit_mps: uniform_speed.unwrap_or_else(|| r.random_range(1.0..10.0)),
        })
        .collect();
    MapFile { nodes, edges }
}

fn random_graph(r: &mut ChaCha8Rng) -> RandomGraph {
    let n = r.random_range(2..=8);
    let map = random_topology(r, n, false, None);
    let now: f64 = r.random_range(0.0..5000.0);
    let visits = map
        .edges
        .iter()
        .map(|_| {
            if r.random_bool(0.3) {
                VisitState::default()
            } else {
                VisitState {
                    ff_value: r.random_range(1.0..20.0),
                    last_visit_time: r.random_range(0.0..=now),
                    cumulative_visit_count: r.random_range(1..50),
                }
            }
        })
        .collect();
    let occupied = map.edges.iter().map(|_| r.random_bool(0.25)).collect();
    let decay = DecayParams {
        k: r.random_range(1e-3..0.05),
        delta_t_s: r.random_range(10.0..2000.0),
        visit_increment: 1.0,
    };
    let weights = CostWeights {
        w_visit: r.random_range(0.0..1.0),
        w_veh: r.random_range(0.0..2.0),
        ..CostWeights::default()
    };
    RandomGraph {
        map,
        visits,
        occupied,
        decay,
        weights,
        now,
    }
}

// Edge cost written out from the model: T_t * (1 + W_visit * FF + W_veh).
fn oracle_edge_cost(g: &RandomGraph, i: usize) -> f64 {
    let e = &g.map.edges[i];
    let v = &g.visits[i];
    let ff = if v.cumulative_visit_count == 0 {
        0.0
    } else {
        let elapsed = (g.now - v.last_visit_time).max(0.0);
        1.0 + v.ff_value / (1.0 + (g.decay.k * (elapsed - g.decay.delta_t_s)).exp())
    };
    let occ = if g.occupied[i] { g.weights.w_veh } else { 0.0 };
    let base = e.length_m / e.speed_limit_mps.min(22.0 / 3.6);
    base * (1.0 + g.weights.w_visit * ff + occ)
}

// Minimum over every simple path, each summed in path order.
fn exhaustive_min(g: &RandomGraph, costs: &[f64], from: u32, to: u32) -> Option<f64> {
    fn dfs(g: &RandomGraph, costs: &[f64], at: u32, to: u32, acc: f64, seen: &mut Vec<bool>, best: &mut Option<f64>) {
        if at == to {
            if best.is_none_or(|b| acc < b) {
                *best = Some(acc);
            }
            return;
        }
        for (i, e) in g.map.edges.iter().enumerate() {
            if e.from == at && !seen[e.to as usize] {
                seen[e.to as usize] = true;
                dfs(g, costs, e.to, to, acc + costs[i], seen, best);
                seen[e.to as usize] = false;
            }
        }
    }
    let mut seen = vec![false; g.map.nodes.len()];
    seen[from as usize] = true;
    let mut best = None;
    dfs(g, costs, from, to, 0.0, &mut seen, &mut best);
    best
}

fn routing_oracle() -> Outcome {
    let mut r = rng(2);
    let mut queries = 0;
    for case in 0..200 {
        let g = random_graph(&mut r);
        let mut graph = g.map.build(g.decay).expect("random graph is valid");
        for (i, v) in g.visits.iter().enumerate() {
            graph.set_visit_state(EdgeId(i as u32), *v);
            if g.occupied[i] {
                graph.occupy(EdgeId(i as u32), VehicleId(99));
            }
        }
        let costs: Vec<f64> = (0..g.map.edges.len()).map(|i| oracle_edge_cost(&g, i)).collect();
        let n = g.map.nodes.len() as u32;
        for from in 0..n {
            for to in 0..n {
                queries += 1;
                let want = exhaustive_min(&g, &costs, from, to);
                let got = graph.shortest_path(NodeId(from), NodeId(to), &g.weights, g.now);
                match (want, got) {
                    (None, Err(_)) => {}
                    (Some(w), Ok(p)) => {
                        let mut walk = 0.0;
                        let mut at = from;
                        for e in &p.edges {
                            let me = &g.map.edges[e.index()];
                            if me.from != at {
                                return outcome(false, format!("case {case}: returned path is not connected"));
                            }
                            at = me.to;
                            walk += costs[e.index()];
                        }
                        if at != to || p.time_s != w || walk != w {
                            return outcome(
                                false,
                                format!("case {case} {from}->{to}: got {} (walk {walk}), oracle {w}", p.time_s),
                            );
                        }
                    }
                    (w, g2) => {
                        return outcome(false, format!("case {case} {from}->{to}: reachability differs ({w:?} vs {:?})", g2.map(|p| p.time_s)));
                    }
                }
            }
        }
    }
    outcome(true, format!("200 graphs, {queries} queries, all costs bitwise equal"))
}

// ---------------------------------------------------------------- 3

fn fsm_table() -> Outcome {
    let mut triples = 0;
    let mut legal = 0;
    for class in VehicleClass::ALL {
        for state in VehicleState::ALL {
            // the DTM symbol carries one of three selections; any of them counts
            for symbol in Symbol::ALL {
                if matches!(symbol, Symbol::Dtm(_)) {
                    continue;
                }
                triples += 1;
                match next_state(class, state, symbol) {
                    Ok(next) if !(class.allows(state) && class.allows(next)) => {
                        return outcome(false, format!("{class} {state} {symbol:?} -> {next} is not class-safe"));
                    }
                    Ok(_) => legal += 1,
                    Err(_) => {}
                }
            }
            triples += 1;
            let dtm: Vec<_> = Symbol::ALL
                .iter()
                .filter(|s| matches!(s, Symbol::Dtm(_)))
                .filter_map(|&s| next_state(class, state, s).ok())
                .collect();
            if dtm.iter().any(|&n| !(class.allows(state) && class.allows(n))) {
                return outcome(false, format!("{class} {state} DTM leaves the class"));
            }
            if !dtm.is_empty() {
                legal += 1;
            }
        }
    }
    // no absorbing state: from every state the class may occupy, LookForEvents is reachable
    for class in VehicleClass::ALL {
        for start in VehicleState::ALL.into_iter().filter(|&s| class.allows(s)) {
            let mut seen = vec![start];
            let mut frontier = vec![start];
            while let Some(s) = frontier.pop() {
                for sym in Symbol::ALL {
                    if let Ok(n) = next_state(class, s, sym) {
                        if !seen.contains(&n) {
                            seen.push(n);
                            frontier.push(n);
                        }
                    }
                }
            }
            let exits = Symbol::ALL
                .iter()
                .any(|&sym| next_state(class, start, sym).is_ok_and(|n| n != start));
            if !exits || !seen.contains(&VehicleState::LookForEvents) {
                return outcome(false, format!("{class} {start} is absorbing"));
            }
        }
    }
    outcome(
        triples == 180,
        format!("{triples} triples, {legal} legal, rest rejected; no absorbing states"),
    )
}

// ---------------------------------------------------------------- 4

const SPEED: f64 = 5.0;

fn floyd(map: &MapFile) -> Vec<Vec<Option<f64>>> {
    let n = map.nodes.len();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0.0);
    }
    for e in &map.edges {
        let cur = &mut d[e.from as usize][e.to as usize];
        if cur.is_none_or(|c| e.length_m < c) {
            *cur = Some(e.length_m);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

struct PmCase {
    map: MapFile,
    task: TaskGeometry,
    candidates: Vec<PmCandidate>,
    weights: CostWeights,
}

fn random_pm_case(r: &mut ChaCha8Rng) -> PmCase {
    let n = r.random_range(3..=8);
    let mut map = random_topology(r, n, true, Some(SPEED));
    let chargers = r.random_range(1..=2);
    for node in map.nodes.iter_mut().skip(1).take(chargers) {
        node.kind = NodeKind::ChargingStation;
    }
    let origin = NodeId(r.random_range(0..n as u32));
    let dropoff = r.random_bool(0.5).then(|| NodeId(r.random_range(0..n as u32)));
    let mut ids: Vec<u32> = (0..20).collect();
    for i in (1..ids.len()).rev() {
        ids.swap(i, r.random_range(0..=i));
    }
    let k = r.random_range(1..=5);
    let candidates = ids[..k]
        .iter()
        .map(|&id| {
            let position = if r.random_bool(0.3) {
                let e = r.random_range(0..map.edges.len());
                let len = map.edges[e].length_m as u32;
                Position::OnEdge {
                    edge: EdgeId(e as u32),
                    offset_m: r.random_range(0..len) as f64,
                }
            } else {
                Position::Node(NodeId(r.random_range(0..n as u32)))
            };
            PmCandidate {
                id: VehicleId(id),
                class: VehicleClass::ALL[r.random_range(0..3)],
                position,
                range_m: r.random_range(0.0..600.0),
                load_kg: r.random_range(0.0..200.0),
            }
        })
        .collect();
    let weights = CostWeights {
        w_r: r.random_range(0.01..2.0),
        w_d: r.random_range(0.0..2000.0),
        w_l: r.random_range(0.0..0.5),
        ..CostWeights::default()
    };
    PmCase {
        map,
        task: TaskGeometry { origin, dropoff },
        candidates,
        weights,
    }
}

// Brute force: score every reachable candidate, drop the infeasible, take the
// highest score (lowest id on ties).
fn brute_force_pm(case: &PmCase, d: &[Vec<Option<f64>>], w: &CostWeights) -> Option<VehicleId> {
    let origin = case.task.origin.index();
    let end = case.task.end().index();
    let leg = match case.task.dropoff {
        Some(x) => d[origin][x.index()]?,
        None => 0.0,
    };
    let to_charger = case
        .map
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::ChargingStation)
        .filter_map(|n| d[end][n.id as usize])
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))))?;
    let mut best: Option<(f64, VehicleId)> = None;
    for c in &case.candidates {
        let to_origin = match c.position {
            Position::Node(v) => d[v.index()][origin],
            Position::OnEdge { edge, offset_m } => {
                let e = &case.map.edges[edge.index()];
                d[e.to as usize][origin].map(|x| (e.length_m - offset_m) + x)
            }
        };
        let Some(to_origin) = to_origin else { continue };
        let d_task = to_origin + leg;
        let d_req = d_task + to_charger;
        if c.range_m - d_req < 0.0 {
            continue;
        }
        let mut f = w.w_r * (c.range_m - d_req) + w.w_d / if d_task <= 0.0 { 1.0 } else { d_task };
        if c.class == VehicleClass::Ffv {
            f += w.w_l * c.load_kg;
        }
        if best.is_none_or(|(bf, bid)| f > bf || (f == bf && c.id < bid)) {
            best = Some((f, c.id));
        }
    }
    best.map(|(_, id)| id)
}

fn dispatch_oracle() -> Outcome {
    let mut r = rng(4);
    let mut chosen = 0;
    for i in 0..500 {
        let case = random_pm_case(&mut r);
        let graph = case.map.build(DecayParams::default()).expect("valid case");
        let d = floyd(&case.map);
        let want = brute_force_pm(&case, &d, &case.weights);
        let got = pm_select(&case.task, &case.candidates, &graph, &case.weights, 0.0)
            .ok()
            .map(|s| s.chosen);
        if got != want {
            return outcome(false, format!("case {i}: pm_select {got:?}, brute force {want:?}"));
        }
        chosen += usize::from(got.is_some());
        // the load term is part of the same weighted sum, so it scales along
        let c: f64 = r.random_range(1e-3..1e3);
        let scaled = CostWeights {
            w_r: case.weights.w_r * c,
            w_d: case.weights.w_d * c,
            w_l: case.weights.w_l * c,
            ..case.weights
        };
        let again = pm_select(&case.task, &case.candidates, &graph, &scaled, 0.0)
            .ok()
            .map(|s| s.chosen);
        if again != got {
            return outcome(false, format!("case {i}: scaling by {c} changed {got:?} to {again:?}"));
        }
    }
    outcome(true, format!("500 scenarios ({chosen} with a feasible pick), scale invariant"))
}

// ---------------------------------------------------------------- 5-7

fn week(fleet: FleetMix, mode: ChargeMode) -> (MetricsLog, f64) {
    let cfg = SimConfig {
        fleet,
        mode,
        ..SimConfig::default()
    };
    let t = Instant::now();
    let log = run(&cfg).expect("week run");
    (log, t.elapsed().as_secs_f64())
}

fn peaks(log: &MetricsLog) -> [u32; 4] {
    RequestKind::ALL.map(|k| log.peak_queue(k))
}

fn fleet_sizing(plug: &MetricsLog, secs: f64) -> Outcome {
    let mut pass = secs < 60.0;
    let mut parts = Vec::new();
    for kind in RequestKind::ALL {
        let mins = plug.daily_minimum(kind);
        let zero_daily = mins.len() == 7 && mins.iter().all(|&m| m == 0);
        let peak = plug.peak_queue(kind);
        pass &= zero_daily && peak <= 10;
        parts.push(format!("{kind} peak {peak}{}", if zero_daily { "" } else { " (not cleared daily)" }));
    }
    outcome(pass, format!("2/4/4 plug, 7 days: {}; {secs:.1} s", parts.join(", ")))
}

fn charge_share(log: &MetricsLog, class: VehicleClass) -> f64 {
    log.class_group_share(class, StateGroup::Charge).unwrap_or(0.0)
}

fn charging_dominance(plug: &MetricsLog) -> Outcome {
    let ffv = charge_share(plug, VehicleClass::Ffv);
    let aptv = charge_share(plug, VehicleClass::Aptv);
    let mtv = charge_share(plug, VehicleClass::Mtv);
    let pass = [aptv, mtv].iter().all(|&s| s > 0.40 && s > ffv);
    outcome(
        pass,
        format!(
            "charge share FFV {:.1}%, APTV {:.1}%, MTV {:.1}%",
            100.0 * ffv,
            100.0 * aptv,
            100.0 * mtv
        ),
    )
}

fn swap_superiority(plug: &MetricsLog, swap: &MetricsLog, secs: f64) -> Outcome {
    let (p, s) = (peaks(plug), peaks(swap));
    let peaks_ok = s.iter().zip(&p).all(|(s, p)| s <= p);
    let shares = VehicleClass::ALL.map(|c| charge_share(swap, c));
    let shares_ok = shares.iter().all(|&x| x < 0.20);
    outcome(
        peaks_ok && shares_ok && secs < 60.0,
        format!(
            "1/3/3 swap peaks {s:?} vs plug {p:?}; charge share {:.1}/{:.1}/{:.1}%; {secs:.1} s",
            100.0 * shares[0],
            100.0 * shares[1],
            100.0 * shares[2]
        ),
    )
}

// ---------------------------------------------------------------- 8

fn coverage_run(w_visit: f64, w_surv: f64) -> [f64; 3] {
    let cfg = SimConfig {
        duration_s: 14.0 * 3600.0,
        snapshot_times_s: vec![4.0 * 3600.0, 8.0 * 3600.0, 14.0 * 3600.0],
        weights: CostWeights {
            w_visit,
            w_surv,
            ..CostWeights::default()
        },
        ..SimConfig::default()
    };
    let log = run(&cfg).expect("coverage run");
    [4.0, 8.0, 14.0].map(|h| {
        log.snapshot_at(h * 3600.0)
            .expect("snapshot recorded")
            .percent_at_or_below(10)
    })
}

fn coverage_improvement() -> Outcome {
    let aware = coverage_run(0.1, 2.0);
    let baseline = coverage_run(0.0, 20.0);
    let pass = aware[2] < baseline[2] && aware[0] > aware[1] && aware[1] > aware[2];
    outcome(
        pass,
        format!(
            "edges visited <= 10 times at 4/8/14 h: visit-aware {:.1}/{:.1}/{:.1}%, baseline {:.1}/{:.1}/{:.1}%",
            aware[0], aware[1], aware[2], baseline[0], baseline[1], baseline[2]
        ),
    )
}

// ---------------------------------------------------------------- 9

fn arrival_rates() -> Outcome {
    let graph: PlantGraph = default_map(DecayParams::default());
    let spec = ArrivalConfig::default().resolve(&graph).expect("default arrivals");
    let horizon = 7.0 * 86_400.0;
    let seeds = 20;
    let mut pass = true;
    let mut parts = Vec::new();
    for stream in &spec.streams {
        let lambda = horizon / stream.mean_interval_s;
        let total: usize = (1..=seeds)
            .map(|seed| {
                generate(&spec, &Streams::new(seed), 0.0, horizon)
                    .iter()
                    .filter(|q| q.kind == stream.kind)
                    .count()
            })
            .sum();
        let mean = total as f64 / seeds as f64;
        let ok = (mean - lambda).abs() <= 3.0 * lambda.sqrt();
        pass &= ok;
        parts.push(format!("{} mean {mean:.2} vs {lambda:.2}", stream.kind));
    }
    outcome(pass && spec.streams.len() == 3, parts.join(", "))
}

// ---------------------------------------------------------------- 10

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let e = e.expect("dir entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).expect("output file"),
            )
        })
        .collect();
    out.sort();
    out
}

fn determinism_and_conservation(weeks: &[&MetricsLog]) -> Outcome {
    let cfg = SimConfig {
        duration_s: 86_400.0,
        seed: 7,
        ..SimConfig::default()
    };
    let a = run(&cfg).expect("run a");
    let b = run(&cfg).expect("run b");
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_all(da.path(), &a, &cfg).expect("write a");
    write_all(db.path(), &b, &cfg).expect("write b");
    let (fa, fb) = (files_in(da.path()), files_in(db.path()));
    let identical = !fa.is_empty() && fa == fb;

    let mut worst_time: f64 = 0.0;
    let mut worst_energy: f64 = 0.0;
    for log in weeks.iter().copied().chain([&a]) {
        for v in &log.vehicles {
            worst_time = worst_time.max((v.total_seconds() - log.duration_s).abs() / log.step_s);
        }
        worst_energy = worst_energy.max(log.energy.balance_error());
    }
    outcome(
        identical && worst_time <= 1.0 && worst_energy <= 1e-6,
        format!(
            "{} output files identical: {identical}; state-time drift {worst_time:.3} steps; energy balance {worst_energy:.1e}",
            fa.len()
        ),
    )
}

// ----------------------------------------------------------------

fn timed(limit_s: Option<f64>, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let secs = t.elapsed().as_secs_f64();
    if let Some(limit) = limit_s {
        o.pass &= secs < limit;
        o.detail = format!("{}; {secs:.2} s", o.detail);
    }
    o
}

fn main() {
    let (plug, plug_s) = week(FleetMix::new(2, 4, 4), ChargeMode::Plug);
    let (swap, swap_s) = week(FleetMix::new(1, 3, 3), ChargeMode::Swap);

    let results = [
        ("forget-function halving", timed(Some(1.0), forget_halving)),
        ("routing oracle", timed(Some(10.0), routing_oracle)),
        ("fsm exhaustive table", timed(Some(1.0), fsm_table)),
        ("dispatch oracle", timed(Some(5.0), dispatch_oracle)),
        ("fleet sizing, plug mode", fleet_sizing(&plug, plug_s)),
        ("charging dominance, plug mode", charging_dominance(&plug)),
        ("battery swap superiority", swap_superiority(&plug, &swap, swap_s)),
        ("coverage improvement", timed(None, coverage_improvement)),
        ("arrival-rate fidelity", timed(None, arrival_rates)),
        ("determinism and conservation", timed(None, || determinism_and_conservation(&[&plug, &swap]))),
    ];

    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

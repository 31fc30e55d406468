//! How the Plant Manager picks a vehicle, and what each idle vehicle would
//! do on its own.

use fleetsim::dispatch::{dtm_select, pm_select, DtmVehicle, PmCandidate, TaskGeometry};
use fleetsim::fsm::VehicleClass;
use fleetsim::plant_graph::{default_map, NodeKind, Position};
use fleetsim::{CostWeights, DecayParams, VehicleId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let graph = default_map(DecayParams::default());
    let weights = CostWeights::default();
    let kind = |k| graph.nodes_of_kind(k).collect::<Vec<_>>();
    let pots = kind(NodeKind::PotCell);
    let stations = kind(NodeKind::ChargingStation);
    let depot = kind(NodeKind::Depot)[0];
    let cast = kind(NodeKind::CastHouse)[0];

    // collect aluminium at a far pot cell, deliver to a cast house
    let task = TaskGeometry {
        origin: pots[pots.len() - 1],
        dropoff: Some(cast),
    };
    let fleet = [
        (depot, 60_000.0),
        (stations[0], 80_000.0),
        (pots[0], 20_000.0),
        (pots[pots.len() - 2], 6_000.0),
    ];
    let candidates: Vec<PmCandidate> = fleet
        .iter()
        .enumerate()
        .map(|(i, &(node, soc_wh))| PmCandidate {
            id: VehicleId(i as u32),
            class: VehicleClass::Mtv,
            position: Position::Node(node),
            // 0.25 m/Wh of learned consumption
            range_m: soc_wh * 0.25,
            load_kg: 0.0,
        })
        .collect();
    let sel = pm_select(&task, &candidates, &graph, &weights, 0.0)?;
    println!("{:>3} {:>9} {:>9} {:>9} {:>10}", "id", "R m", "d_req m", "d_task m", "score");
    for s in &sel.scores {
        let mark = if s.vehicle == sel.chosen { "<-" } else if !s.is_feasible() { "x" } else { "" };
        println!(
            "{:>3} {:>9.0} {:>9.0} {:>9.0} {:>10.1} {mark}",
            s.vehicle.0, s.range_m, s.d_req_m, s.d_task_m, s.score
        );
    }

    println!("\nidle choices at the depot on a fresh map:");
    for soc_pct in [90.0, 50.0, 10.0] {
        let v = DtmVehicle {
            id: VehicleId(0),
            class: VehicleClass::Ffv,
            position: Position::Node(depot),
            soc_wh: soc_pct * 800.0,
            load_kg: 1_000.0,
        };
        let plan = dtm_select(&v, &graph, &weights, 0.0, &[]).ok_or("no idle task")?;
        println!("  FFV at {soc_pct:>2.0}%: {:?}  {:?}", plan.task, plan.costs);
    }
    Ok(())
}

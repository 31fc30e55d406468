//! Visit values bend routes: drive the same trip over and over and watch
//! Dijkstra start avoiding the streets it has worn in.

use fleetsim::plant_graph::{default_map, forget_value, NodeKind};
use fleetsim::{CostWeights, DecayParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut graph = default_map(DecayParams::default());
    let weights = CostWeights::default();
    let depot = graph.nodes_of_kind(NodeKind::Depot).next().ok_or("no depot")?;
    let cast = graph.nodes_of_kind(NodeKind::CastHouse).next().ok_or("no cast house")?;

    let mut now = 0.0;
    for trip in 0..6 {
        let path = graph.shortest_path(depot, cast, &weights, now)?;
        let worn = graph.path_visit_sum(&path.edges, now);
        println!(
            "trip {trip}: {} edges, {:.0} m, {:.0} s effective, path visit sum {worn:.1}",
            path.edges.len(),
            path.length_m,
            path.time_s
        );
        for &e in &path.edges {
            graph.record_traversal(e, now);
        }
        now += 60.0;
    }

    // the same edge left alone: the value halves towards 1 after delta_t
    let e = graph.shortest_path(depot, cast, &weights, now)?.edges[0];
    let state = graph.edges()[e.index()].visit;
    println!("\nedge {} after its last visit:", e.0);
    for dt in [0.0, 300.0, 600.0, 900.0, 1800.0] {
        println!(
            "  +{dt:>4.0} s  FF = {:.3}",
            forget_value(&state, graph.decay(), state.last_visit_time + dt)
        );
    }
    Ok(())
}

//! Writes the synthetic smelter layout as a map file.
//!
//! ```text
//! cargo run --example generate_map -- maps/default_plant.json
//! ```

use fleetsim::plant_graph::{synthetic_layout, NodeKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let layout = synthetic_layout();
    let count = |k: NodeKind| layout.nodes.iter().filter(|n| n.kind == k).count();
    eprintln!(
        "{} nodes ({} pot cells, {} charging stations), {} directed edges",
        layout.nodes.len(),
        count(NodeKind::PotCell),
        count(NodeKind::ChargingStation),
        layout.edges.len()
    );
    match std::env::args().nth(1) {
        Some(path) => std::fs::write(path, layout.to_json() + "\n")?,
        None => println!("{}", layout.to_json()),
    }
    Ok(())
}

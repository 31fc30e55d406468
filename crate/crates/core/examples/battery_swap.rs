//! Swapping packs instead of plugging in: a smaller fleet (1/3/3) with
//! swap stations against the 2/4/4 plug-charging fleet.

use fleetsim::engine::{run, ChargeMode, FleetMix, SimConfig};
use fleetsim::fsm::{StateGroup, VehicleClass};
use fleetsim::requests::RequestKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plug = SimConfig::default();
    let swap = SimConfig {
        fleet: FleetMix::new(1, 3, 3),
        mode: ChargeMode::Swap,
        ..SimConfig::default()
    };
    println!("{:<14} {:>24} {:>18}", "", "peak open requests", "charge share");
    for (name, cfg) in [("2/4/4 plug", &plug), ("1/3/3 swap", &swap)] {
        let log = run(cfg)?;
        let peaks = RequestKind::ALL.map(|k| log.peak_queue(k));
        let shares: Vec<String> = VehicleClass::ALL
            .iter()
            .map(|&c| format!("{:.0}%", 100.0 * log.class_group_share(c, StateGroup::Charge).unwrap_or(0.0)))
            .collect();
        println!("{name:<14} {:>24} {:>18}", format!("{peaks:?}"), shares.join(" "));
    }
    Ok(())
}

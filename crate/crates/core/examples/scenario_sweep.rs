//! A small sweep over fleets and seeds, written to a scratch directory.
//!
//! ```text
//! cargo run --release --example scenario_sweep -- [out-dir]
//! ```

use fleetsim::config::SweepSpec;
use fleetsim::engine::{FleetMix, SimConfig};
use fleetsim::fsm::{StateGroup, VehicleClass};
use fleetsim::sweep::{expand, run_cells};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "sweep-out".into());
    let base = SimConfig {
        duration_s: 2.0 * 86_400.0,
        ..SimConfig::default()
    };
    let sweep = SweepSpec {
        fleets: vec![FleetMix::new(1, 2, 2), FleetMix::new(2, 4, 4)],
        seeds: vec![1, 2],
        ..SweepSpec::default()
    };
    let cells = expand(&base, &sweep);
    for o in run_cells(&cells, Some(out.as_ref())) {
        let (log, _) = o.result?;
        let open: usize = log.queue_counts.last().map_or(0, |q| q.iter().map(|&n| n as usize).sum());
        let charge = log.class_group_share(VehicleClass::Aptv, StateGroup::Charge).unwrap_or(0.0);
        println!(
            "{:<36} open at end {open:>3}  APTV charging {:>4.1}%  -> {}",
            o.id,
            100.0 * charge,
            o.dir.map(|d| d.display().to_string()).unwrap_or_default()
        );
    }
    Ok(())
}

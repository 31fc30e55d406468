//! One simulated week with plug charging: do 2 FFV, 4 APTV and 4 MTV keep
//! up with the plant, and how much of their time goes to charging?
//!
//! ```text
//! cargo run --release --example fleet_sizing -- [ffv aptv mtv] [seed]
//! ```

use fleetsim::engine::{run, FleetMix, SimConfig};
use fleetsim::fsm::{StateGroup, VehicleClass};
use fleetsim::requests::RequestKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let mut cfg = SimConfig::default();
    if args.len() >= 3 {
        cfg.fleet = FleetMix::new(args[0] as u32, args[1] as u32, args[2] as u32);
    }
    if let Some(&seed) = args.get(3) {
        cfg.seed = seed;
    }
    let started = std::time::Instant::now();
    let log = run(&cfg)?;
    println!("fleet {} over {} days ({:.1?})", cfg.fleet, cfg.duration_s / 86_400.0, started.elapsed());

    println!("\n{:<20} {:>7} {:>9} {:>5} {:>12}", "request", "created", "completed", "peak", "daily zeros");
    for kind in RequestKind::ALL {
        let created = log.requests.iter().filter(|r| r.kind == kind).count();
        let zeros = log.daily_minimum(kind).iter().filter(|&&m| m == 0).count();
        println!(
            "{:<20} {:>7} {:>9} {:>5} {:>9}/{}",
            kind.as_str(),
            created,
            log.completed(kind),
            log.peak_queue(kind),
            zeros,
            log.daily_minimum(kind).len()
        );
    }

    println!("\n{:<6} {:>7} {:>7} {:>8}", "class", "idle", "charge", "routine");
    for class in VehicleClass::ALL {
        let share = |g| log.class_group_share(class, g).unwrap_or(0.0) * 100.0;
        println!(
            "{:<6} {:>6.1}% {:>6.1}% {:>7.1}%",
            class.as_str(),
            share(StateGroup::Idle),
            share(StateGroup::Charge),
            share(StateGroup::Routine)
        );
    }
    if !log.failures.is_empty() {
        println!("\n{} vehicle(s) stranded", log.failures.len());
    }
    Ok(())
}

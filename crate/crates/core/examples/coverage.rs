//! Visit-aware routing and surveillance against a fleet that ignores visit
//! values: share of streets driven at most 10, 20 and 30 times.

use fleetsim::engine::{run, SimConfig};
use fleetsim::output::{coverage_report, format_report, REPORT_THRESHOLDS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let times = [4.0 * 3600.0, 8.0 * 3600.0, 14.0 * 3600.0];
    for (w_visit, w_surv) in [(0.0, 20.0), (0.1, 2.0)] {
        let mut cfg = SimConfig {
            duration_s: 14.0 * 3600.0,
            snapshot_times_s: times.to_vec(),
            ..SimConfig::default()
        };
        cfg.weights.w_visit = w_visit;
        cfg.weights.w_surv = w_surv;
        let log = run(&cfg)?;
        println!("W_visit = {w_visit}, W_surv = {w_surv}");
        print!("{}", format_report(&coverage_report(&log, &times, &REPORT_THRESHOLDS)?));
        println!();
    }
    Ok(())
}

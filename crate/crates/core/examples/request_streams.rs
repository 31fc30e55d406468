//! One simulated week of plant requests on the default map: counts per
//! kind against their expectation, and a few service-time draws.

use fleetsim::plant_graph::default_map;
use fleetsim::requests::{generate, service_time, ArrivalConfig, RequestKind, ServiceSpec};
use fleetsim::rng::Streams;
use fleetsim::DecayParams;

const WEEK_S: f64 = 7.0 * 86_400.0;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let graph = default_map(DecayParams::default());
    let spec = ArrivalConfig::default().resolve(&graph)?;
    let streams = Streams::new(seed);
    let requests = generate(&spec, &streams, 0.0, WEEK_S);

    println!("{:<20} {:>6} {:>9}", "kind", "count", "expected");
    for k in &spec.streams {
        let n = requests.iter().filter(|r| r.kind == k.kind).count();
        println!("{:<20} {n:>6} {:>9.1}", k.kind.as_str(), WEEK_S / k.mean_interval_s);
    }

    let service = ServiceSpec::default();
    let mut rng = streams.stream("service");
    println!();
    for kind in RequestKind::ALL {
        let draws: Vec<String> = (0..5)
            .map(|_| format!("{:.0}", service_time(&service, kind, &mut rng)))
            .collect();
        println!("{:<20} service s: {}", kind.as_str(), draws.join(" "));
    }
    Ok(())
}

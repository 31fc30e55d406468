//! Range estimation learns the vehicle's consumption as it drives, and a
//! battery swap beats a plug charge by a wide margin.

use fleetsim::energy::{BatterySpec, ChargeTarget, ConsumptionModel, EnergyState};

fn main() {
    let battery = BatterySpec::default();
    let model = ConsumptionModel::default();
    let mass = 17_000.0;
    let v = 22.0 / 3.6;

    let mut e = EnergyState::new(battery.capacity_wh, battery.capacity_wh, model.nominal_d_avg_m_per_wh);
    println!("cold start: R = {:.1} km (nominal prior)", e.range_estimate() / 1000.0);
    let mut driven = 0.0;
    while e.soc_fraction() > battery.low_soc_threshold {
        // 500 m at cruise speed
        e.consume_leg(&model, mass, 500.0, v, v, 500.0 / v).expect("charge left");
        driven += 500.0;
        if (driven as u64) % 5_000 == 0 {
            println!(
                "{:>5.1} km driven  SOC {:>4.1}%  d_avg {:.3} m/Wh  R {:>5.1} km",
                driven / 1000.0,
                100.0 * e.soc_fraction(),
                e.d_avg(),
                e.range_estimate() / 1000.0
            );
        }
    }

    let mut plug = e;
    let mut t = 0.0;
    while !plug.charge_step(&battery, 1.0, ChargeTarget::Full).complete {
        t += 1.0;
    }
    println!(
        "\nfrom {:.0}%: plug charge {:.0} s, swap {:.0} s",
        100.0 * e.soc_fraction(),
        t + 1.0,
        battery.swap_duration_s
    );
}

//! Battery, traction consumption and range estimation.
//!
//! All energies are in Wh, powers in W, distances in m and times in s.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const J_PER_WH: f64 = 3600.0;

/// Below this net consumption the measured distance-per-Wh is not trusted.
pub const MIN_NET_CONSUMPTION_WH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatterySpec {
    pub capacity_wh: f64,
    pub charge_power_w: f64,
    pub swap_duration_s: f64,
    /// Fraction of capacity below which the vehicle must go charging.
    pub low_soc_threshold: f64,
    /// Fraction of capacity at which an opportunistic (idle) charge stops.
    pub idle_charge_target: f64,
    /// Vehicles start with a state of charge drawn uniformly from
    /// `[initial_soc_min, 1] * capacity`.
    pub initial_soc_min: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        Self {
            capacity_wh: 80_000.0,
            charge_power_w: 100_000.0,
            swap_duration_s: 600.0,
            low_soc_threshold: 0.20,
            idle_charge_target: 0.5,
            initial_soc_min: 0.5,
        }
    }
}

impl BatterySpec {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("capacity_wh", self.capacity_wh),
            ("charge_power_w", self.charge_power_w),
            ("swap_duration_s", self.swap_duration_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("battery.{name} must be > 0 (got {v})"));
            }
        }
        if !(0.0 < self.low_soc_threshold
            && self.low_soc_threshold < self.idle_charge_target
            && self.idle_charge_target <= 1.0)
        {
            return Err(format!(
                "battery: need 0 < low_soc_threshold ({}) < idle_charge_target ({}) <= 1",
                self.low_soc_threshold, self.idle_charge_target
            ));
        }
        if !(0.0..=1.0).contains(&self.initial_soc_min) {
            return Err(format!(
                "battery.initial_soc_min must be in [0, 1] (got {})",
                self.initial_soc_min
            ));
        }
        Ok(())
    }

    pub fn low_soc_wh(&self) -> f64 {
        self.low_soc_threshold * self.capacity_wh
    }
}

/// Rolling resistance + kinetic energy + constant hotel load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsumptionModel {
    pub rolling_coeff: f64,
    pub gravity: f64,
    pub drivetrain_efficiency: f64,
    pub regen_efficiency: f64,
    /// Hotel load drawn while the vehicle is driving, W.
    pub aux_power_w: f64,
    /// Distance per Wh assumed until enough consumption has been measured, m/Wh.
    pub nominal_d_avg_m_per_wh: f64,
}

impl Default for ConsumptionModel {
    fn default() -> Self {
        Self {
            rolling_coeff: 0.025,
            gravity: 9.81,
            drivetrain_efficiency: 0.85,
            regen_efficiency: 0.5,
            aux_power_w: 30_000.0,
            nominal_d_avg_m_per_wh: 0.15,
        }
    }
}

impl ConsumptionModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.drivetrain_efficiency > 0.0 && self.drivetrain_efficiency <= 1.0) {
            return Err("consumption.drivetrain_efficiency must be in (0, 1]".into());
        }
        if !(0.0..1.0).contains(&self.regen_efficiency) {
            return Err("consumption.regen_efficiency must be in [0, 1)".into());
        }
        for (name, v) in [
            ("rolling_coeff", self.rolling_coeff),
            ("gravity", self.gravity),
            ("aux_power_w", self.aux_power_w),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("consumption.{name} must be >= 0 (got {v})"));
            }
        }
        if !(self.nominal_d_avg_m_per_wh.is_finite() && self.nominal_d_avg_m_per_wh > 0.0) {
            return Err("consumption.nominal_d_avg_m_per_wh must be > 0".into());
        }
        Ok(())
    }
}

/// The battery ran dry during a leg. The state is left at zero charge.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("battery depleted, {unserved_wh:.3} Wh could not be supplied")]
pub struct Depleted {
    pub unserved_wh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyState {
    pub capacity_wh: f64,
    pub soc_wh: f64,
    pub total_distance_m: f64,
    pub total_consumed_wh: f64,
    pub total_regenerated_wh: f64,
    pub nominal_d_avg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChargeTarget {
    /// Charge until the battery is full.
    Full,
    /// Opportunistic top-up: stop at the idle-charging target.
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeProgress {
    pub delivered_wh: f64,
    pub complete: bool,
}

impl EnergyState {
    pub fn new(capacity_wh: f64, soc_wh: f64, nominal_d_avg: f64) -> Self {
        Self {
            capacity_wh,
            soc_wh: soc_wh.clamp(0.0, capacity_wh),
            total_distance_m: 0.0,
            total_consumed_wh: 0.0,
            total_regenerated_wh: 0.0,
            nominal_d_avg,
        }
    }

    pub fn soc_fraction(&self) -> f64 {
        self.soc_wh / self.capacity_wh
    }

    /// Updates the counters for one leg and draws the net energy from the battery.
    ///
    /// Regeneration is capped so the regenerated total never exceeds the
    /// consumed total, and energy that does not fit into a full battery is
    /// not counted as regenerated. On depletion the state is still updated
    /// (charge clamped at zero) and the undelivered energy is reported.
    #[allow(clippy::too_many_arguments)]
    pub fn consume_leg(
        &mut self,
        model: &ConsumptionModel,
        mass_kg: f64,
        distance_m: f64,
        v_start: f64,
        v_end: f64,
        elapsed_s: f64,
    ) -> Result<(), Depleted> {
        let rolling_j = model.rolling_coeff * mass_kg * model.gravity * distance_m;
        let kinetic_j = 0.5 * mass_kg * (v_end * v_end - v_start * v_start);
        let consumed_wh = (rolling_j + kinetic_j.max(0.0)) / model.drivetrain_efficiency
            / J_PER_WH
            + model.aux_power_w * elapsed_s / J_PER_WH;
        let mut regen_wh = model.regen_efficiency * (-kinetic_j).max(0.0) / J_PER_WH;

        self.total_consumed_wh += consumed_wh;
        regen_wh = regen_wh.min(self.total_consumed_wh - self.total_regenerated_wh);
        let headroom = self.capacity_wh - self.soc_wh + consumed_wh;
        regen_wh = regen_wh.min(headroom).max(0.0);
        self.total_regenerated_wh += regen_wh;
        self.total_distance_m += distance_m;

        self.soc_wh -= consumed_wh - regen_wh;
        if self.soc_wh < 0.0 {
            let unserved_wh = -self.soc_wh;
            self.soc_wh = 0.0;
            return Err(Depleted { unserved_wh });
        }
        self.soc_wh = self.soc_wh.min(self.capacity_wh);
        Ok(())
    }

    /// Average distance per Wh, falling back to the nominal prior while the
    /// net consumption is below [`MIN_NET_CONSUMPTION_WH`].
    pub fn d_avg(&self) -> f64 {
        let net = self.total_consumed_wh - self.total_regenerated_wh;
        if net < MIN_NET_CONSUMPTION_WH {
            self.nominal_d_avg
        } else {
            self.total_distance_m / net
        }
    }

    /// Estimated remaining range `R = SOC * d_avg`, m.
    pub fn range_estimate(&self) -> f64 {
        self.soc_wh * self.d_avg()
    }

    pub fn charge_step(
        &mut self,
        spec: &BatterySpec,
        elapsed_s: f64,
        target: ChargeTarget,
    ) -> ChargeProgress {
        let before = self.soc_wh;
        self.soc_wh = (self.soc_wh + spec.charge_power_w * elapsed_s / J_PER_WH).min(self.capacity_wh);
        let complete = match target {
            ChargeTarget::Full => self.soc_wh >= self.capacity_wh,
            ChargeTarget::Idle => {
                self.soc_wh >= self.capacity_wh
                    || self.soc_wh >= spec.idle_charge_target * self.capacity_wh
            }
        };
        ChargeProgress {
            delivered_wh: self.soc_wh - before,
            complete,
        }
    }

    /// Replaces the pack with a full one. History counters are kept so the
    /// range estimate carries over. Returns the energy delivered.
    pub fn swap_battery(&mut self) -> f64 {
        let delivered = self.capacity_wh - self.soc_wh;
        self.soc_wh = self.capacity_wh;
        delivered
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn no_aux() -> ConsumptionModel {
        ConsumptionModel {
            rolling_coeff: 0.01,
            aux_power_w: 0.0,
            ..ConsumptionModel::default()
        }
    }

    fn full(cap: f64) -> EnergyState {
        EnergyState::new(cap, cap, 2.0)
    }

    #[test]
    fn null_leg_is_noop() {
        let mut s = full(80_000.0);
        let before = s;
        s.consume_leg(&no_aux(), 17_000.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn rolling_resistance_leg() {
        let mut s = full(80_000.0);
        s.consume_leg(&no_aux(), 17_000.0, 1000.0, 4.0, 4.0, 240.0).unwrap();
        // 0.01 * 17000 * 9.81 * 1000 J = 1,667,700 J
        let expected = 0.01 * 17_000.0 * 9.81 * 1000.0 / 0.85 / 3600.0;
        assert!((s.total_consumed_wh - expected).abs() < 1e-9);
        assert!((s.soc_wh - (80_000.0 - expected)).abs() < 1e-9);
        assert_eq!(s.total_distance_m, 1000.0);
    }

    #[test]
    fn rolling_resistance_hand_values() {
        // 17 t over 1 km: 1,667,700 J -> 545.0 Wh at the wheel-to-battery efficiency
        let mut s = full(80_000.0);
        s.consume_leg(&no_aux(), 17_000.0, 1000.0, 3.0, 3.0, 300.0).unwrap();
        assert!((s.total_consumed_wh - 545.0).abs() < 1e-3);
        // 20 t over 1 km: 1,962,000 J -> 641.18 Wh
        let mut s = full(80_000.0);
        s.consume_leg(&no_aux(), 20_000.0, 1000.0, 3.0, 3.0, 300.0).unwrap();
        assert!((s.total_consumed_wh - 641.1765).abs() < 1e-3);
    }

    #[test]
    fn braking_regenerates() {
        let mut s = full(80_000.0);
        s.total_consumed_wh = 1_000.0;
        s.soc_wh = 70_000.0;
        let model = ConsumptionModel {
            rolling_coeff: 0.0,
            aux_power_w: 0.0,
            regen_efficiency: 0.5,
            ..ConsumptionModel::default()
        };
        s.consume_leg(&model, 17_000.0, 1.93, 4.17, 0.0, 0.93).unwrap();
        let expected = 0.5 * 0.5 * 17_000.0 * 4.17 * 4.17 / 3600.0;
        assert!((s.total_regenerated_wh - expected).abs() < 1e-9);
        assert!((expected - 20.5).abs() < 0.1);
        assert!((s.soc_wh - (70_000.0 + expected)).abs() < 1e-9);
    }

    #[test]
    fn regen_never_exceeds_consumption() {
        let mut s = full(80_000.0);
        s.soc_wh = 10_000.0;
        let model = ConsumptionModel {
            rolling_coeff: 0.0,
            aux_power_w: 0.0,
            ..ConsumptionModel::default()
        };
        s.consume_leg(&model, 17_000.0, 2.0, 4.17, 0.0, 1.0).unwrap();
        assert!(s.total_regenerated_wh <= s.total_consumed_wh);
    }

    #[test]
    fn depletion_clamps_and_reports() {
        let mut s = EnergyState::new(80_000.0, 1.0, 2.0);
        let err = s
            .consume_leg(&no_aux(), 17_000.0, 1000.0, 4.0, 4.0, 200.0)
            .unwrap_err();
        assert_eq!(s.soc_wh, 0.0);
        assert!(err.unserved_wh > 0.0);
        let net = s.total_consumed_wh - s.total_regenerated_wh;
        assert!((net - (1.0 + err.unserved_wh)).abs() < 1e-9);
    }

    #[test]
    fn range_from_history() {
        let mut s = EnergyState::new(80_000.0, 40_000.0, 2.0);
        s.total_distance_m = 1000.0;
        s.total_consumed_wh = 500.0;
        s.total_regenerated_wh = 100.0;
        assert_eq!(s.d_avg(), 2.5);
        assert_eq!(s.range_estimate(), 100_000.0);
    }

    #[test]
    fn range_cold_start_and_empty() {
        let s = EnergyState::new(80_000.0, 80_000.0, 2.0);
        assert_eq!(s.range_estimate(), 160_000.0);
        let s = EnergyState::new(80_000.0, 0.0, 2.0);
        assert_eq!(s.range_estimate(), 0.0);
    }

    #[test]
    fn charging() {
        let spec = BatterySpec::default();
        let mut s = full(80_000.0);
        let p = s.charge_step(&spec, 60.0, ChargeTarget::Full);
        assert!(p.complete);
        assert_eq!(p.delivered_wh, 0.0);

        let mut s = EnergyState::new(80_000.0, 16_000.0, 2.0);
        let p = s.charge_step(&spec, 3600.0, ChargeTarget::Full);
        assert_eq!(s.soc_wh, 80_000.0);
        assert!(p.complete);
        assert_eq!(p.delivered_wh, 64_000.0);

        let mut s = EnergyState::new(80_000.0, 16_000.0, 2.0);
        let p = s.charge_step(&spec, 60.0, ChargeTarget::Full);
        assert!((s.soc_wh - 17_666.666_666_7).abs() < 1e-3);
        assert!(!p.complete);
    }

    #[test]
    fn idle_charge_stops_at_target() {
        let spec = BatterySpec::default();
        let mut s = EnergyState::new(80_000.0, 39_000.0, 2.0);
        assert!(!s.charge_step(&spec, 30.0, ChargeTarget::Idle).complete);
        assert!(s.charge_step(&spec, 30.0, ChargeTarget::Idle).complete);
        assert!(s.soc_wh >= 40_000.0);
    }

    #[test]
    fn swap_restores_capacity_and_keeps_history() {
        let mut s = EnergyState::new(80_000.0, 12_345.0, 2.0);
        s.total_distance_m = 5_000.0;
        s.total_consumed_wh = 3_000.0;
        s.total_regenerated_wh = 500.0;
        let d_avg = s.d_avg();
        assert_eq!(s.swap_battery(), 80_000.0 - 12_345.0);
        assert_eq!(s.soc_wh, 80_000.0);
        assert_eq!(s.d_avg(), d_avg);
    }

    #[test]
    fn swap_speedup_over_plug() {
        let spec = BatterySpec::default();
        let plug_s = 64_000.0 * J_PER_WH / spec.charge_power_w;
        assert!((plug_s - 2304.0).abs() < 1e-9);
        assert!((plug_s / spec.swap_duration_s - 3.84).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(BatterySpec::default().validate().is_ok());
        let bad = BatterySpec {
            idle_charge_target: 0.1,
            ..BatterySpec::default()
        };
        assert!(bad.validate().is_err());
        assert!(ConsumptionModel::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn soc_bounds_and_accounting(
            legs in proptest::collection::vec((0.0f64..500.0, 0.0f64..6.0, 0.0f64..6.0, 1.0f64..60.0, 11_000.0f64..52_500.0), 1..60),
            soc0 in 0.0f64..80_000.0,
        ) {
            let model = ConsumptionModel::default();
            let mut s = EnergyState::new(80_000.0, soc0, 0.2);
            let mut unserved = 0.0;
            for (d, v0, v1, dt, m) in legs {
                let before = (s.total_distance_m, s.total_consumed_wh, s.total_regenerated_wh);
                if let Err(e) = s.consume_leg(&model, m, d, v0, v1, dt) {
                    unserved += e.unserved_wh;
                }
                prop_assert!(s.soc_wh >= 0.0 && s.soc_wh <= s.capacity_wh);
                prop_assert!(s.total_regenerated_wh <= s.total_consumed_wh);
                prop_assert!(s.total_distance_m >= before.0);
                prop_assert!(s.total_consumed_wh >= before.1);
                prop_assert!(s.total_regenerated_wh >= before.2);
            }
            let net = s.total_consumed_wh - s.total_regenerated_wh;
            let drawn = soc0 - s.soc_wh + unserved;
            prop_assert!((net - drawn).abs() <= 1e-6 * net.abs().max(1.0));
            let r = s.range_estimate();
            prop_assert!(r >= 0.0);
            prop_assert_eq!(r == 0.0, s.soc_wh == 0.0);
        }

        #[test]
        fn range_converges_under_constant_consumption(
            distances in proptest::collection::vec(10.0f64..800.0, 100),
            mass in 11_000.0f64..52_500.0,
        ) {
            let model = ConsumptionModel { aux_power_w: 0.0, ..ConsumptionModel::default() };
            let k = model.rolling_coeff * mass * model.gravity / model.drivetrain_efficiency / J_PER_WH;
            let mut s = EnergyState::new(1.0e9, 1.0e9, 0.01);
            for d in distances {
                s.consume_leg(&model, mass, d, 3.0, 3.0, d / 3.0).unwrap();
            }
            let ratio = s.range_estimate() * k / s.soc_wh;
            prop_assert!((ratio - 1.0).abs() < 0.01);
        }
    }
}

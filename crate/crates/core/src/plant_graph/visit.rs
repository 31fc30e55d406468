//! Visit values and the logistic forget function.

use super::{DecayParams, VisitState};

/// Visit value of an edge at `now`.
///
/// `FF(now) = 1 + FF(t) / (1 + exp(K * (now - t - delta_t)))` where `t` is the
/// time of the last visit. Edges that were never visited report 0.
pub fn forget_value(state: &VisitState, params: &DecayParams, now: f64) -> f64 {
    if !state.is_visited() {
        return 0.0;
    }
    let elapsed = (now - state.last_visit_time).max(0.0);
    1.0 + state.ff_value / (1.0 + (params.k * (elapsed - params.delta_t_s)).exp())
}

/// Visit state after a traversal completed at `now`: the decayed value plus
/// the configured increment.
pub fn record_traversal(state: &VisitState, params: &DecayParams, now: f64) -> VisitState {
    VisitState {
        ff_value: forget_value(state, params, now) + params.visit_increment,
        last_visit_time: now,
        cumulative_visit_count: state.cumulative_visit_count + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> DecayParams {
        DecayParams {
            k: 0.01,
            delta_t_s: 600.0,
            visit_increment: 1.0,
        }
    }

    fn visited(ff: f64, t: f64) -> VisitState {
        VisitState {
            ff_value: ff,
            last_visit_time: t,
            cumulative_visit_count: 1,
        }
    }

    #[test]
    fn halving_point() {
        let v = forget_value(&visited(10.0, 100.0), &params(), 700.0);
        assert!((v - 6.0).abs() < 1e-12);
    }

    #[test]
    fn fresh_visit_value() {
        // 1 + 10 / (1 + e^-6)
        let expected = 1.0 + 10.0 / (1.0 + (-6.0f64).exp());
        let v = forget_value(&visited(10.0, 0.0), &params(), 0.0);
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 10.9753).abs() < 1e-4);
    }

    #[test]
    fn asymptote_is_one() {
        let v = forget_value(&visited(10.0, 0.0), &params(), 1.0e7);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn unvisited_is_zero() {
        assert_eq!(forget_value(&VisitState::default(), &params(), 1e5), 0.0);
    }

    #[test]
    fn first_traversal() {
        let s = record_traversal(&VisitState::default(), &params(), 42.0);
        assert_eq!(s.ff_value, 1.0);
        assert_eq!(s.cumulative_visit_count, 1);
        assert_eq!(s.last_visit_time, 42.0);
    }

    #[test]
    fn traversal_on_decayed_value() {
        let s = record_traversal(&visited(10.0, 0.0), &params(), 600.0);
        assert!((s.ff_value - 7.0).abs() < 1e-12);
        assert_eq!(s.cumulative_visit_count, 2);
    }

    #[test]
    fn two_traversals_same_instant() {
        let p = params();
        let s = record_traversal(&VisitState::default(), &p, 5.0);
        let s = record_traversal(&s, &p, 5.0);
        let expected = 1.0 + 1.0 / (1.0 + (-p.k * p.delta_t_s).exp()) + 1.0;
        assert!((s.ff_value - expected).abs() < 1e-12);
        assert_eq!(s.cumulative_visit_count, 2);
    }

    proptest! {
        #[test]
        fn strictly_decreasing_in_time(
            ff in 0.1f64..100.0,
            k in 1e-4f64..0.05,
            dt in 10.0f64..5000.0,
            a in 0.0f64..2000.0,
            gap in 1.0f64..500.0,
        ) {
            let p = DecayParams { k, delta_t_s: dt, visit_increment: 1.0 };
            let s = visited(ff, 0.0);
            let near = forget_value(&s, &p, a);
            let far = forget_value(&s, &p, a + gap);
            // strictness is only observable while the logistic term is representable
            if k * (a + gap - dt) < 30.0 && k * (dt - a) < 30.0 {
                prop_assert!(far < near);
            } else {
                prop_assert!(far <= near);
            }
        }

        #[test]
        fn asymptote_within_tolerance(ff in 0.0f64..100.0, k in 1e-3f64..0.1, dt in 1.0f64..3600.0) {
            let p = DecayParams { k, delta_t_s: dt, visit_increment: 1.0 };
            let now = dt + 20.5 / k;
            let v = forget_value(&visited(ff, 0.0), &p, now);
            prop_assert!((v - 1.0).abs() < 1e-6);
        }
    }
}

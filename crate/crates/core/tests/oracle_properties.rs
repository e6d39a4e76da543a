use hydrate_core::{AdvectionScenario, Error};
use proptest::prelude::*;

fn reference(pulse_length: f64) -> AdvectionScenario {
    AdvectionScenario::new(0.02, pulse_length, 1.0, 0.04, -0.03, 0.1, 1.0).unwrap()
}

fn scenario() -> impl Strategy<Value = AdvectionScenario> {
    (0.01f64..0.08, 0.05f64..0.95, 0.0f64..5.0, 0.1f64..3.0, 0.02f64..0.2, 0.5f64..2.0).prop_map(
        |(c0, drop, pulse, q, room, d_max)| {
            let top = c0 * (1.0 - drop);
            let chi_l = top + (c0 - top) * 0.5;
            AdvectionScenario::new(chi_l, pulse, q, c0, (top - c0) / d_max, c0 + room, d_max)
                .unwrap()
        },
    )
}

#[test]
fn worked_values() {
    let sc = reference(4.0);
    assert!((sc.free_boundary() - 2.0 / 3.0).abs() < 1e-15);
    assert!((sc.chi(0.5, 1.0).unwrap() - 0.02).abs() < 1e-15);
    assert_eq!(sc.chi(0.9, 0.5).unwrap(), 0.0);
    assert!((sc.chi(0.8, 1.0).unwrap() - 0.016).abs() < 1e-15);
    assert_eq!(sc.saturation(0.5, 1.0).unwrap(), 0.0);
    assert!((sc.saturation(0.8, 1.2).unwrap() - 1.0 / 7.0).abs() < 1e-14);
    assert!((sc.saturation(2.0 / 3.0, 2.0).unwrap() - 0.5).abs() < 1e-14);
    assert!((sc.blowup_time(2.0 / 3.0).unwrap() - 10.0 / 3.0).abs() < 1e-14);
    assert!((sc.blowup_time(1.0).unwrap() - 4.0).abs() < 1e-14);
    let unsafe_pulse = sc.safe_pulse();
    assert!((unsafe_pulse.margin - 1.5).abs() < 1e-14 && !unsafe_pulse.safe);
    let safe = reference(0.5).safe_pulse();
    assert!((safe.margin - 0.1875).abs() < 1e-15 && safe.safe);
    assert_eq!(reference(0.0).safe_pulse().margin, 0.0);
}

#[test]
fn outside_the_window_is_rejected() {
    let sc = reference(0.5);
    assert!(matches!(sc.chi(0.1, 5.0), Err(Error::OutsideValidity { .. })));
    assert!(matches!(sc.saturation(1.5, 0.1), Err(Error::OutsideValidity { .. })));
    assert!(sc.blowup_time(0.3).is_err());
}

#[test]
fn free_boundary_limits() {
    let near = AdvectionScenario::new(0.04 - 1e-9, 1.0, 1.0, 0.04, -0.03, 0.1, 1.0).unwrap();
    assert!(near.free_boundary() > 0.0 && near.free_boundary() < 1e-7);
    let edge = AdvectionScenario::new(0.01, 1.0, 1.0, 0.04, -0.03, 0.1, 1.0).unwrap();
    assert!((edge.free_boundary() - 1.0).abs() < 1e-12);
    assert!(AdvectionScenario::new(0.041, 1.0, 1.0, 0.04, -0.03, 0.1, 1.0).is_err());
    assert!(AdvectionScenario::new(0.005, 1.0, 1.0, 0.04, -0.03, 0.1, 1.0).is_err());
}

#[test]
fn vanishing_gradient_postpones_blowup() {
    let times: Vec<f64> = [1e-2, 1e-4, 1e-6]
        .iter()
        .map(|g| {
            let sc = AdvectionScenario::new(0.04 - 0.5 * g, 1.0, 1.0, 0.04, -g, 0.1, 1.0).unwrap();
            sc.blowup_time(1.0).unwrap()
        })
        .collect();
    assert!(times[0] < times[1] && times[1] < times[2] && times[2] > 1e4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn content_grows_at_the_solubility_drop_rate(sc in scenario(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let xl = sc.free_boundary();
        let x = xl + (sc.d_max - xl) * (0.01 + 0.98 * a);
        let t_lo = sc.arrival_time(x);
        let t_hi = (x + sc.pulse_length) / sc.q;
        prop_assume!(t_hi - t_lo > 1e-6);
        let t = t_lo + (t_hi - t_lo) * (0.01 + 0.98 * b);
        let dt = 1e-3 * (t_hi - t_lo).min(t - t_lo);
        let rate = (sc.content(x, t + 0.5 * dt).unwrap() - sc.content(x, t - 0.5 * dt).unwrap()) / dt;
        let expected = -sc.q * sc.gradient;
        prop_assert!((rate - expected).abs() <= 1e-8 * (1.0 + expected.abs()), "{rate} vs {expected}");
    }

    #[test]
    fn zones_partition_the_column(sc in scenario(), t in 0.0f64..5.0) {
        let z = sc.zones(t);
        let pieces: Vec<(f64, f64)> = [z.minus, z.zero, z.plus].into_iter().flatten().collect();
        let covered: f64 = pieces.iter().map(|(a, b)| b - a).sum();
        prop_assert!((covered - sc.d_max).abs() <= 1e-12 * sc.d_max);
        for w in pieces.windows(2) {
            prop_assert!(w[0].1 <= w[1].0 + 1e-15);
        }
        if let Some((a, b)) = z.zero {
            let x = 0.5 * (a + b);
            if sc.is_valid(x, t) && t > sc.arrival_time(x) {
                prop_assert!(sc.saturation(x, t).unwrap() > 0.0);
            }
        }
        if let Some((a, b)) = z.minus {
            let x = 0.5 * (a + b);
            if sc.is_valid(x, t) {
                prop_assert_eq!(sc.saturation(x, t).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn saturation_is_one_at_blowup(sc in scenario(), a in 0.0f64..1.0) {
        let xl = sc.free_boundary();
        let x = xl + (sc.d_max - xl) * a;
        let ts = sc.blowup_time(x).unwrap();
        prop_assert!(ts > sc.arrival_time(x));
        let wide = AdvectionScenario { pulse_length: ts * sc.q, ..sc };
        prop_assert!((wide.saturation(x, ts).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn safe_pulses_stay_below_one(sc in scenario(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let verdict = sc.safe_pulse();
        let x = sc.d_max * a;
        let t = (x + sc.pulse_length) / sc.q * b;
        let s = sc.saturation(x, t).unwrap();
        prop_assert!(s <= verdict.margin * (1.0 + 1e-12));
        if verdict.safe {
            prop_assert!(s < 1.0);
        }
    }
}

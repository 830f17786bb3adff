use proptest::prelude::*;
use trafficsim::engine::{equilibrium_gap, idm_accel, IdmParams};

/// Direct scalar evaluation of the IDM law, written out term by term.
fn reference_accel(v: f64, dv: f64, gap: f64, p: &IdmParams, cap: f64) -> f64 {
    let v0 = if p.desired_speed < cap { p.desired_speed } else { cap };
    let dynamic = v * p.time_headway + v * dv / (2.0 * (p.max_accel * p.comfortable_decel).sqrt());
    let s_star = p.min_gap + if dynamic > 0.0 { dynamic } else { 0.0 };
    let free = (v / v0).powf(p.exponent);
    let interaction = if gap.is_infinite() { 0.0 } else { (s_star / gap) * (s_star / gap) };
    p.max_accel * (1.0 - free - interaction)
}

fn params() -> impl Strategy<Value = IdmParams> {
    (1.0..40.0f64, 0.5..3.0f64, 0.5..4.0f64, 0.5..5.0f64, 1.0..8.0f64, 0.5..5.0f64).prop_map(
        |(desired_speed, time_headway, max_accel, comfortable_decel, exponent, min_gap)| IdmParams {
            desired_speed,
            time_headway,
            max_accel,
            comfortable_decel,
            exponent,
            min_gap,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn matches_direct_evaluation(
        p in params(),
        cap in 1.0..40.0f64,
        v_frac in 0.0..1.2f64,
        dv in -15.0..15.0f64,
        gap in prop_oneof![0.5..300.0f64, Just(f64::INFINITY)],
    ) {
        let v = v_frac * p.desired_speed.min(cap);
        let got = idm_accel(v, dv, gap, &p, cap);
        let want = reference_accel(v, dv, gap, &p, cap);
        prop_assert!(got.is_finite());
        prop_assert!(got <= p.max_accel);
        prop_assert!((got - want).abs() <= 1e-12, "got {got}, want {want}");
    }
}

#[test]
fn free_road_extremes_are_exact() {
    let p = IdmParams::default();
    assert_eq!(idm_accel(0.0, 0.0, f64::INFINITY, &p, 50.0), p.max_accel);
    assert_eq!(idm_accel(p.desired_speed, 0.0, f64::INFINITY, &p, 50.0), 0.0);
    assert_eq!(idm_accel(12.0, 0.0, f64::INFINITY, &p, 12.0), 0.0);
}

#[test]
fn worked_tuple_matches_reference() {
    let p = IdmParams {
        desired_speed: 15.0,
        time_headway: 1.5,
        max_accel: 2.0,
        comfortable_decel: 2.0,
        exponent: 4.0,
        min_gap: 2.0,
    };
    // s* = 2 + 15 = 17; a = 2·(1 − (10/15)^4 − (17/30)^2).
    let hand = 2.0 * (1.0 - 16.0 / 81.0 - (17.0f64 / 30.0).powi(2));
    assert!((idm_accel(10.0, 0.0, 30.0, &p, 100.0) - hand).abs() < 1e-12);
}

#[test]
fn equilibrium_gap_is_closed_form() {
    let p = IdmParams::default();
    for v in [1.0, 5.0, 10.0, 20.0, 29.0] {
        let want = (p.min_gap + v * p.time_headway) / (1.0 - (v / p.desired_speed).powf(p.exponent)).sqrt();
        assert!((equilibrium_gap(v, &p, 100.0) - want).abs() < 1e-9 * want);
    }
}

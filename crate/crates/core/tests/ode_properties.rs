use nadrc_core::control::{td_deriv, TdState};
use nadrc_core::ode::{
    integrate, integrate_fixed, IntegratorConfig, Method, StateRecorder, StateVector,
};
use proptest::prelude::*;

fn decay(_t: f64, x: &[f64], dx: &mut [f64]) {
    dx[0] = -x[0];
}

fn final_error(h: f64) -> f64 {
    let tr = integrate_fixed(&decay, &StateVector::new(0.0, vec![1.0]), 1.0, h, None, &StateRecorder)
        .unwrap();
    (tr.channel("x0").unwrap().last().unwrap() - (-1.0f64).exp()).abs()
}

#[test]
fn halving_step_cuts_error_sixteenfold() {
    for h in [0.1, 0.05, 0.02] {
        let ratio = final_error(h) / final_error(h / 2.0);
        assert!((ratio - 16.0).abs() < 1.5, "h = {h}: ratio {ratio}");
    }
}

#[test]
fn both_integrators_repeat_bit_for_bit() {
    let osc = |t: f64, x: &[f64], dx: &mut [f64]| {
        dx[0] = x[1];
        dx[1] = -x[0] - 0.3 * x[1] + (3.0 * t).sin();
    };
    let x0 = StateVector::new(0.0, vec![1.0, 0.0]);
    for method in [Method::FixedRk4, Method::AdaptiveRk45] {
        let cfg = IntegratorConfig {
            method,
            step: 1e-3,
            max_step: 0.05,
            ..Default::default()
        };
        let a = integrate(&osc, &x0, 3.0, &cfg, Some(0.01), &StateRecorder).unwrap();
        let b = integrate(&osc, &x0, 3.0, &cfg, Some(0.01), &StateRecorder).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 301);
    }
}

#[test]
fn fixed_and_adaptive_agree_on_smooth_problem() {
    let osc = |_t: f64, x: &[f64], dx: &mut [f64]| {
        dx[0] = x[1];
        dx[1] = -4.0 * x[0];
    };
    let x0 = StateVector::new(0.0, vec![1.0, 0.0]);
    let fixed = IntegratorConfig::default();
    let adaptive = IntegratorConfig {
        method: Method::AdaptiveRk45,
        max_step: 0.1,
        ..Default::default()
    };
    let a = integrate(&osc, &x0, 2.0, &fixed, Some(0.1), &StateRecorder).unwrap();
    let b = integrate(&osc, &x0, 2.0, &adaptive, Some(0.1), &StateRecorder).unwrap();
    for ((t, p), q) in a.grid().iter().zip(a.channel("x0").unwrap()).zip(b.channel("x0").unwrap()) {
        let exact = (2.0 * t).cos();
        assert!((p - exact).abs() < 1e-9 && (q - exact).abs() < 1e-6, "t = {t}");
    }
}

fn td_settles(limit: f64, r: f64, r1: f64, r2: f64) -> f64 {
    let sys = |_t: f64, x: &[f64], dx: &mut [f64]| {
        let (a, b) = td_deriv(TdState { r1: x[0], r2: x[1] }, r, limit);
        dx[0] = a;
        dx[1] = b;
    };
    let settle = 10.0 / limit.sqrt();
    let tr = integrate_fixed(&sys, &StateVector::new(0.0, vec![r1, r2]), settle + 1.0, 1e-4, Some(1e-3), &StateRecorder)
        .unwrap();
    tr.grid()
        .iter()
        .zip(tr.channel("x0").unwrap())
        .filter(|(t, _)| **t >= settle)
        .map(|(_, v)| (v - r).abs())
        .fold(0.0, f64::max)
}

#[test]
fn td_reaches_constant_reference() {
    for limit in [1.0, 10.0, 100.0] {
        for (r1, r2) in [(0.0, 0.0), (-2.0, 1.0), (3.0, -0.5)] {
            let err = td_settles(limit, 1.0, r1, r2);
            assert!(err < 1e-3, "R = {limit}, start ({r1}, {r2}): {err}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trace_grid_strictly_increasing(tf in 0.05f64..2.0, h in 1e-3f64..0.05, out in 1e-3f64..0.1) {
        let tr = integrate_fixed(&decay, &StateVector::new(0.0, vec![1.0]), tf, h, Some(out), &StateRecorder)
            .unwrap();
        prop_assert!(tr.grid().windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(tr.channel("x0").unwrap().len(), tr.grid().len());
        prop_assert!((tr.grid().last().unwrap() - tf).abs() < 1e-12);
    }

    #[test]
    fn td_from_random_start(r in -2.0f64..2.0, r1 in -3.0f64..3.0, r2 in -1.0f64..1.0) {
        prop_assert!(td_settles(10.0, r, r1, r2) < 1e-3);
    }
}

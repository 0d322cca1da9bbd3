mod common;

use common::rng;
use nalgebra::{DMatrix, DVector};
use quadctrl::exact::RVec;
use quadctrl::fixtures::{self, system};
use quadctrl::lie::{classify, QuadraticData};
use quadctrl::linsynth::{
    gramian, hum_control, kalman_check, rho, steer, verify_steering, LinsynthError, DEFAULT_QUAD,
};
use quadctrl::numeric::Expm;
use quadctrl::rational::int;
use quadctrl::simulate::ControlSignal;
use rand::Rng;

fn v(xs: &[i64]) -> RVec {
    xs.iter().map(|&x| int(x)).collect()
}

fn double_integrator() -> (Vec<RVec>, RVec) {
    (vec![v(&[0, 0]), v(&[1, 0])], v(&[1, 0]))
}

fn random_state(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

#[test]
fn gramian_examples() {
    let g = gramian(&vec![v(&[0, 0]), v(&[0, 0])], &v(&[1, 0]), 1.0, 0.0, DEFAULT_QUAD).unwrap();
    assert!((g.c.clone() - DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).norm() < 1e-14);

    let (h0, b) = double_integrator();
    let g = gramian(&h0, &b, 1.0, 0.0, DEFAULT_QUAD).unwrap();
    let exact = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0 / 3.0]);
    assert!((g.c - exact).abs().max() <= 1e-10);
}

#[test]
fn smoothed_gramian_converges_linearly() {
    let (h0, b) = double_integrator();
    let plain = gramian(&h0, &b, 1.0, 0.0, DEFAULT_QUAD).unwrap();
    let mut prev = f64::INFINITY;
    for eps in [1e-1, 1e-2, 1e-3] {
        let g = gramian(&h0, &b, 1.0, eps, 1 << 16).unwrap();
        let gap = (&g.c - &plain.c).norm();
        // ρ vanishes on [0, ε] ∪ [T − ε, T], so the gap is at least 2ε|b|²
        assert!(gap >= 2.0 * eps * 0.99 && gap <= 4.0 * eps, "eps = {eps}: {gap}");
        assert!(gap < prev);
        prev = gap;
    }
}

#[test]
fn rho_is_a_smooth_window() {
    let (t, eps) = (1.0, 0.1);
    for i in 0..=1000 {
        let s = i as f64 / 1000.0;
        let r = rho(s, t, eps);
        assert!((0.0..=1.0).contains(&r));
        if s <= eps || s >= t - eps {
            assert_eq!(r, 0.0);
        }
        if (2.0 * eps..=t - 2.0 * eps).contains(&s) {
            assert_eq!(r, 1.0);
        }
        assert!((r - rho(t - s, t, eps)).abs() < 1e-12);
    }
}

#[test]
fn gramians_are_symmetric_psd_and_match_kalman() {
    for name in fixtures::NAMES {
        let qd = QuadraticData::extract(&system(name).unwrap());
        let g = gramian(&qd.h0, &qd.b, 1.0, 0.0, DEFAULT_QUAD).unwrap();
        assert_eq!(g.c, g.c.transpose());
        assert!(g.eigenvalues().min() >= -1e-12, "{name}");
        let (_, rep, _) = classify(&system(name).unwrap());
        assert_eq!(g.is_invertible(), rep.kalman(), "{name}");
        assert_eq!(kalman_check(&qd.h0, &qd.b).is_ok(), rep.kalman(), "{name}");
    }
}

#[test]
fn kalman_failure_names_the_missing_directions() {
    let qd = QuadraticData::extract(&system("easy_drift").unwrap());
    assert_eq!(kalman_check(&qd.h0, &qd.b), Err(LinsynthError::NotControllable { missing: vec!["(0,1)".into()] }));
    let e = hum_control(&qd.h0, &qd.b, &[0.0, 0.0], &[0.0, 1.0], 1.0, 0.0, 100).unwrap_err();
    assert!(e.to_string().contains("(0,1)"));
}

#[test]
fn bad_inputs() {
    let (h0, b) = double_integrator();
    assert!(matches!(gramian(&h0, &b, 1.0, 0.5, 64), Err(LinsynthError::BadHorizon { .. })));
    assert!(matches!(gramian(&h0, &b, 0.0, 0.0, 64), Err(LinsynthError::BadHorizon { .. })));
    assert!(matches!(
        hum_control(&h0, &b, &[0.0], &[0.0, 1.0], 1.0, 0.0, 100),
        Err(LinsynthError::Dimension { expected: 2, got: 1 })
    ));
}

#[test]
fn double_integrator_steering() {
    let (h0, b) = double_integrator();
    let hum = hum_control(&h0, &b, &[0.0, 0.0], &[0.0, 1.0], 1.0, 0.0, 10_000).unwrap();
    assert!(verify_steering(&h0, &b, &hum.control, &[0.0, 0.0], &[0.0, 1.0]).unwrap() <= 1e-6);
    // minimum-energy control for this target is u = 6 − 12t
    assert!((hum.control.sample(0.25) - 3.0).abs() < 1e-6);

    let hum = hum_control(&h0, &b, &[0.0, 0.0], &[0.0, 1.0], 1.0, 0.1, 10_000).unwrap();
    assert!(verify_steering(&h0, &b, &hum.control, &[0.0, 0.0], &[0.0, 1.0]).unwrap() <= 1e-6);
    for (t, u) in hum.control.times().iter().zip(hum.control.values()) {
        if *t <= 0.1 || *t >= 0.9 {
            assert_eq!(*u, 0.0);
        }
    }
}

#[test]
fn zero_data_gives_zero_control() {
    let (h0, b) = double_integrator();
    let hum = hum_control(&h0, &b, &[0.0, 0.0], &[0.0, 0.0], 1.0, 0.0, 1000).unwrap();
    assert!(hum.p.iter().all(|&p| p == 0.0));
    assert!(hum.control.values().iter().all(|&u| u == 0.0));
    let zero = ControlSignal::zero(1.0, 1000);
    assert_eq!(verify_steering(&h0, &b, &zero, &[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
}

#[test]
fn zero_control_error_is_the_free_response_gap() {
    let qd = QuadraticData::extract(&system("oscillator").unwrap());
    let x_star = [0.3, -0.2];
    let x_dag = [1.0, 0.5];
    let free = Expm::new(&qd.h0).at(2.0) * DVector::from_column_slice(&x_star);
    let expected = (DVector::from_column_slice(&x_dag) - free).norm();
    let err = verify_steering(&qd.h0, &qd.b, &ControlSignal::zero(2.0, 2000), &x_star, &x_dag).unwrap();
    assert!((err - expected).abs() < 1e-9);
}

#[test]
fn hum_is_linear_in_the_data() {
    let mut r = rng(51);
    for name in ["double_integrator", "oscillator", "scalar_unstable"] {
        let qd = QuadraticData::extract(&system(name).unwrap());
        let n = qd.n;
        for _ in 0..5 {
            let (a0, a1, b0, b1) = (random_state(&mut r, n), random_state(&mut r, n), random_state(&mut r, n), random_state(&mut r, n));
            let sum = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + q).collect::<Vec<f64>>();
            let ua = hum_control(&qd.h0, &qd.b, &a0, &a1, 1.0, 0.1, 2000).unwrap().control;
            let ub = hum_control(&qd.h0, &qd.b, &b0, &b1, 1.0, 0.1, 2000).unwrap().control;
            let uab = hum_control(&qd.h0, &qd.b, &sum(&a0, &b0), &sum(&a1, &b1), 1.0, 0.1, 2000).unwrap().control;
            let combined = ua.add(&ub).unwrap();
            for (x, y) in uab.values().iter().zip(combined.values()) {
                assert!((x - y).abs() <= 1e-9 * (1.0 + y.abs()), "{name}");
            }
        }
    }
}

#[test]
fn norm_bound_constant_is_scale_free() {
    let mut r = rng(52);
    let qd = QuadraticData::extract(&system("oscillator").unwrap());
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..10).map(|_| (random_state(&mut r, 2), random_state(&mut r, 2))).collect();
    let constant = |scale: f64| {
        pairs
            .iter()
            .map(|(a, b)| {
                let a: Vec<f64> = a.iter().map(|x| x * scale).collect();
                let b: Vec<f64> = b.iter().map(|x| x * scale).collect();
                let u = hum_control(&qd.h0, &qd.b, &a, &b, 1.0, 0.1, 2000).unwrap().control;
                let data = a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
                u.sup_norm() / data
            })
            .fold(0.0, f64::max)
    };
    let (c1, c10) = (constant(0.1), constant(1.0));
    assert!(c1.is_finite() && c1 > 0.0);
    assert!((c1 - c10).abs() <= 1e-9 * c10);
}

#[test]
fn random_pairs_are_steered() {
    let mut r = rng(53);
    for name in ["double_integrator", "oscillator", "scalar_unstable"] {
        let qd = QuadraticData::extract(&system(name).unwrap());
        for eps in [0.0, 0.1] {
            for _ in 0..5 {
                let (a, b) = (random_state(&mut r, qd.n), random_state(&mut r, qd.n));
                let hum = hum_control(&qd.h0, &qd.b, &a, &b, 1.0, eps, 10_000).unwrap();
                let err = verify_steering(&qd.h0, &qd.b, &hum.control, &a, &b).unwrap();
                assert!(err <= 1e-6, "{name} eps = {eps}: {err}");
            }
        }
    }
}

#[test]
fn nonlinear_fixed_point_steering() {
    let sys = system("oscillator").unwrap();
    let (u, rep) = steer(&sys, &[0.1, 0.0], &[0.0, 0.1], 1.0, 0.0, 10_000).unwrap();
    assert!(rep.converged, "{:?}", rep.history);
    assert!(rep.error < 1e-8);
    assert!(rep.iterations <= 20);
    assert_eq!(u.cells(), 10_000);
    assert!(rep.history.windows(2).all(|w| w[1] <= w[0]));
}

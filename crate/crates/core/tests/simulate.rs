use quadctrl::exact::to_f64_vec;
use quadctrl::fixtures::system;
use quadctrl::lie::classify;
use quadctrl::manifold::build_m2;
use quadctrl::numeric::Expm;
use quadctrl::simulate::*;

fn sup_dist(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn easy_drift_cosine_closed_form() {
    let sys = system("easy_drift").unwrap();
    let u = ControlSignal::from_fn(1.0, 1000, f64::cos).unwrap();
    let traj = integrate(&sys, &[0.0, 0.0], &u, 1e-3).unwrap();
    let exact = (1.0 - 2f64.sin() / 2.0) / 2.0;
    assert!((traj.final_state()[1] - exact).abs() < 1e-6);
    assert_eq!(traj.x[0], vec![0.0, 0.0]);
}

#[test]
fn zero_control_keeps_equilibrium() {
    for name in ["sussmann", "bilinear", "u2_drift", "oscillator"] {
        let sys = system(name).unwrap();
        let u = ControlSignal::zero(1.0, 100);
        let traj = integrate(&sys, &vec![0.0; sys.n()], &u, 1e-2).unwrap();
        assert!(traj.x.iter().flatten().all(|v| *v == 0.0), "{name}");
    }
}

#[test]
fn linear_system_matches_duhamel() {
    // x1' = x2, x2' = -x1 + u (linear part of the oscillator)
    let sys = system("oscillator").unwrap();
    let qd = quadctrl::lie::QuadraticData::extract(&sys);
    let lin = quadctrl::system::ControlSystem::affine(
        "lin",
        quadctrl::poly::PolyVectorField::linear(&qd.h0),
        quadctrl::poly::PolyVectorField::constant(&qd.b),
    )
    .unwrap();
    let u = ControlSignal::from_fn(1.0, 1000, |t| (3.0 * t).cos() + t).unwrap();
    let traj = integrate(&lin, &[0.0, 0.0], &u, 1e-3).unwrap();
    // Duhamel quadrature of the interpolated control, Simpson on 20 panels per
    // control cell, exact exponential.
    let e = Expm::new(&qd.h0);
    let b = nalgebra::DVector::from_vec(to_f64_vec(&qd.b));
    let m = 20_000;
    let h = 1.0 / m as f64;
    let mut acc = nalgebra::DVector::zeros(2);
    for i in 0..=m {
        let s = i as f64 * h;
        let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += e.at(1.0 - s) * &b * (w * u.sample(s));
    }
    acc *= h / 3.0;
    let x = traj.final_state();
    assert!((x[0] - acc[0]).abs() < 1e-8 && (x[1] - acc[1]).abs() < 1e-8);
}

#[test]
fn rk4_is_fourth_order() {
    let sys = system("oscillator").unwrap();
    let u = ControlSignal::from_fn(1.0, 1, |_| 0.5).unwrap();
    let x0 = [0.3, -0.2];
    let reference = integrate(&sys, &x0, &u, 1.0 / 512.0).unwrap();
    let coarse = integrate(&sys, &x0, &u, 1.0 / 32.0).unwrap();
    let fine = integrate(&sys, &x0, &u, 1.0 / 64.0).unwrap();
    let every = |t: &Trajectory, step: usize| t.x.iter().step_by(step).cloned().collect::<Vec<_>>();
    let e1 = sup_dist(&coarse.x, &every(&reference, 16));
    let e2 = sup_dist(&every(&fine, 2), &every(&reference, 16));
    let ratio = e1 / e2;
    assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
}

#[test]
fn divergence_reports_escape_time() {
    // x' = x + u blows past 1e6 around t = ln(1e6) ≈ 13.8
    let sys = system("scalar_unstable").unwrap();
    let u = ControlSignal::zero(20.0, 2000);
    match integrate(&sys, &[1.0], &u, 1e-2) {
        Err(SimError::Divergence { time }) => assert!((time - 1e6f64.ln()).abs() < 0.02),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn bad_step_is_rejected() {
    let sys = system("easy_drift").unwrap();
    let u = ControlSignal::zero(1.0, 10);
    assert!(matches!(integrate(&sys, &[0.0, 0.0], &u, 0.03), Err(SimError::BadGrid(_))));
}

#[test]
fn trajectory_csv_header_and_precision() {
    let sys = system("easy_drift").unwrap();
    let u = ControlSignal::from_fn(1.0, 10, |t| t).unwrap();
    let csv = integrate(&sys, &[0.0, 0.0], &u, 0.1).unwrap().to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,u"));
    let row: Vec<&str> = lines.nth(3).unwrap().split(',').collect();
    let v: f64 = row[1].parse().unwrap();
    assert!((v - 0.045).abs() < 1e-15);
}

#[test]
fn auxiliary_states_trivial_and_toy() {
    let sys = system("toy_manifold").unwrap();
    let zero = ControlSignal::zero(1.0, 100);
    let traj = integrate(&sys, &[0.2, 0.1], &zero, 1e-2).unwrap();
    assert_eq!(auxiliary_state(&sys, &traj, &zero, 1).unwrap(), traj.x);

    // f1 = (1, 2x1) is integrated exactly by the flow, so ξ₁ returns to 0.
    let mut sup = Vec::new();
    for amp in [1e-1, 1e-2] {
        let u = sinusoid(1.0, 1000, 3.0, amp).unwrap();
        let traj = integrate(&sys, &[0.0, 0.0], &u, 1e-3).unwrap();
        let xi = auxiliary_state(&sys, &traj, &u, 1).unwrap();
        sup.push(xi.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    assert!(sup[0] < 1e-2 && sup[1] <= sup[0] * 1e-2 * 1.01 + 1e-14, "{sup:?}");
}

#[test]
fn auxiliary_state_is_quadratically_small() {
    for name in ["easy_drift", "sussmann", "competition"] {
        let sys = system(name).unwrap();
        let (_, report, _) = classify(&sys);
        let d = report.d();
        let amps = [1e-1, 3e-2, 1e-2];
        let sups: Vec<f64> = amps
            .iter()
            .map(|&a| {
                let u = sinusoid(1.0, 500, 7.0, a).unwrap();
                let traj = integrate(&sys, &vec![0.0; sys.n()], &u, 2e-3).unwrap();
                let xi = auxiliary_state(&sys, &traj, &u, d).unwrap();
                xi.iter().map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
            })
            .collect();
        let slope = experiments::loglog_slope(&amps, &sups).unwrap();
        assert!(slope >= 1.8, "{name}: slope {slope}");
    }
}

#[test]
fn easy_drift_series_is_twice_x2() {
    let sys = system("easy_drift").unwrap();
    let (_, report, c) = classify(&sys);
    let m = build_m2(&report).unwrap();
    let u = bump_family(1.0, 1000, &BumpSpec { a: 0.1, b: 0.8, amp: 1e-2, deriv: 1 }).unwrap();
    let s = drift_check(&sys, &c, &m, &u, 1e-3).unwrap();
    let traj = integrate(&sys, &[0.0, 0.0], &u, 1e-3).unwrap();
    for (v, x) in s.values.iter().zip(&traj.x) {
        assert!((v - 2.0 * x[1]).abs() < 1e-18);
    }
    assert!(s.min >= 0.0);
    let zero = drift_check(&sys, &c, &m, &ControlSignal::zero(1.0, 100), 1e-2).unwrap();
    assert!(zero.values.iter().all(|v| *v == 0.0));
}

#[test]
fn sussmann_drift_dominates_half_u2_norm() {
    let sys = system("sussmann").unwrap();
    let (_, report, c) = classify(&sys);
    let m = build_m2(&report).unwrap();
    let u = bump_family(1.0, 1000, &BumpSpec { a: 0.2, b: 0.9, amp: 0.5, deriv: 2 }).unwrap();
    let s = drift_check(&sys, &c, &m, &u, 1e-3).unwrap();
    let u2 = u.primitive_table(2).l2_squared(2);
    assert!(s.min >= -1e-12);
    assert!(s.final_value >= 0.5 * u2);
}

#[test]
fn toy_manifold_residual_is_round_off() {
    let sys = system("toy_manifold").unwrap();
    let amps = [1e-1, 3e-2, 1e-2, 3e-3];
    let r = scaling_study(&sys, |e| sinusoid(1.0, 1000, 5.0, e), &amps, 1e-3).unwrap();
    assert!(r.rows.iter().all(|row| row.residual_sup < 1e-15 && row.drift_final.is_nan()));
    assert_eq!(r.drift_slope, None);
    assert!(scaling_study(&sys, |e| sinusoid(1.0, 10, 5.0, e), &amps[..2], 0.1).is_err());
}

#[test]
fn manifold_invariance_rejects_drift() {
    let u = sinusoid(1.0, 100, 5.0, 1.0).unwrap();
    assert!(matches!(
        manifold_invariance(&system("easy_drift").unwrap(), None, &u, 1e-2),
        Err(SimError::NotManifold(_))
    ));
    let r = manifold_invariance(&system("bent").unwrap(), None, &u, 1e-2).unwrap();
    assert!(r.sup_residual < 1e-12);
}

#[test]
fn dilation_scalings_k3() {
    let sys = system("opt_affine_k:3").unwrap();
    let p = experiments::DilationProfile::new(3);
    let r = dilation_experiment(&sys, &p, 1e-2, 4.0, 40_000).unwrap();
    assert!(r.quadratic_rel_error() < 0.02 && r.cubic_rel_error() < 0.02, "{r:?}");
    let predicted = r.quadratic_measured + r.cubic_measured;
    assert!((r.final_state - predicted).abs() < 1e-3 * predicted.abs());
}

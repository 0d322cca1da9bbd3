use serde::{Deserialize, Serialize};

use super::integrate::{integrate, Trajectory};
use super::jet::Jet;
use super::signal::{ControlSignal, Provenance};
use super::SimError;
use crate::exact::to_f64_vec;
use crate::lie::{classify, Classification, Verdict};
use crate::manifold::{build_homogeneous, build_m2, QuadraticManifold};
use crate::system::ControlSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSeries {
    pub t: Vec<f64>,
    /// `⟨P⊥x(t) − G₂(Px(t)), d_k⟩`.
    pub values: Vec<f64>,
    pub min: f64,
    pub final_value: f64,
}

impl DriftSeries {
    pub fn to_csv(&self) -> String {
        crate::io::write_csv(&["t", "drift"], self.t.iter().zip(&self.values).map(|(t, v)| vec![*t, *v]))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Projects a trajectory on the drift direction, relative to `M₂`.
pub fn drift_series(traj: &Trajectory, manifold: &QuadraticManifold, dk: &[f64]) -> DriftSeries {
    let values: Vec<f64> = traj.x.iter().map(|x| dot(&manifold.residual(x), dk)).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let final_value = *values.last().expect("trajectories are non-empty");
    DriftSeries { t: traj.t.clone(), values, min, final_value }
}

/// Simulates from the origin and returns the drift series.
pub fn drift_check(
    sys: &ControlSystem,
    classification: &Classification,
    manifold: &QuadraticManifold,
    u: &ControlSignal,
    dt: f64,
) -> Result<DriftSeries, SimError> {
    let dk = classification.verdict.direction().ok_or_else(|| SimError::NotDrift(sys.name().into()))?;
    let traj = integrate(sys, &vec![0.0; sys.n()], u, dt)?;
    Ok(drift_series(&traj, manifold, &to_f64_vec(dk)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub epsilon: f64,
    /// `⟨Q(x(T)), d_k⟩`; NaN without a drift verdict.
    pub drift_final: f64,
    pub residual_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Log-log slope of `|drift_final|`; absent without drift or when a value
    /// is at the round-off floor.
    pub drift_slope: Option<f64>,
    pub residual_slope: Option<f64>,
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        crate::io::write_csv(
            &["epsilon", "drift_final", "residual_sup"],
            self.rows.iter().map(|r| vec![r.epsilon, r.drift_final, r.residual_sup]),
        )
    }
}

/// Values below this are treated as exact zeros in regressions.
const SLOPE_FLOOR: f64 = 1e-14;

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if ys.iter().any(|y| !(y.abs() > SLOPE_FLOOR)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// Runs `family(ε)` for each amplitude and regresses drift and residual.
pub fn scaling_study(
    sys: &ControlSystem,
    family: impl Fn(f64) -> Result<ControlSignal, SimError>,
    amplitudes: &[f64],
    dt: f64,
) -> Result<ScalingReport, SimError> {
    if amplitudes.len() < 3 {
        return Err(SimError::DegenerateRegression(amplitudes.len()));
    }
    let (_, report, c) = classify(sys);
    let manifold = build_m2(&report)?;
    let dk = c.verdict.direction().map(|d| to_f64_vec(d));
    let mut rows = Vec::with_capacity(amplitudes.len());
    for &eps in amplitudes {
        let u = family(eps)?;
        let traj = integrate(sys, &vec![0.0; sys.n()], &u, dt)?;
        let residual_sup = traj.x.iter().map(|x| norm(&manifold.residual(x))).fold(0.0, f64::max);
        let drift_final = match &dk {
            Some(d) => dot(&manifold.residual(traj.final_state()), d),
            None => f64::NAN,
        };
        rows.push(ScalingRow { epsilon: eps, drift_final, residual_sup });
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let drift_slope = dk
        .as_ref()
        .and_then(|_| loglog_slope(&eps, &rows.iter().map(|r| r.drift_final).collect::<Vec<_>>()));
    let residual_slope = loglog_slope(&eps, &rows.iter().map(|r| r.residual_sup).collect::<Vec<_>>());
    Ok(ScalingReport { rows, drift_slope, residual_slope })
}

/// `φ(s) = c ψ(s) e^{4s}` on `(0, 1)` with `∫φ² = 1`; the exponential tilt
/// breaks the symmetry so that `∫(φ^{(k−1)})³ ≠ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationProfile {
    pub k: usize,
    pub c: f64,
    /// `a = ∫₀¹ (φ^{(k−1)})³`.
    pub a: f64,
}

fn tilted_bump(s: f64, order: usize) -> Vec<f64> {
    if s <= 0.0 || s >= 1.0 {
        return vec![0.0; order + 1];
    }
    let x = Jet::variable(s, order);
    let one_minus = x.scale(-1.0).add_const(1.0);
    let g = x.mul(&one_minus).recip().scale(-1.0);
    let e = Jet(g.0.iter().zip(x.scale(4.0).0.iter()).map(|(a, b)| a + b).collect()).exp();
    (0..=order).map(|r| e.derivative(r)).collect()
}

fn simpson(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = n + n % 2;
    let h = 1.0 / n as f64;
    let mut acc = f(0.0) + f(1.0);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    acc * h / 3.0
}

impl DilationProfile {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "dilation profiles need k ≥ 1");
        let quad = 20_000;
        let c = 1.0 / simpson(quad, |s| tilted_bump(s, 0)[0].powi(2)).sqrt();
        let a = simpson(quad, |s| (c * tilted_bump(s, k - 1)[k - 1]).powi(3));
        Self { k, c, a }
    }

    /// `φ^{(r)}(s)`.
    pub fn derivative(&self, s: f64, r: usize) -> f64 {
        self.c * tilted_bump(s, r)[r]
    }
}

/// `u = φ^{(k)}_{λ,μ}` with `φ_{λ,μ}(t) = λφ(μt)`, so that `u_k = φ_{λ,μ}`.
pub fn dilation_control(
    profile: &DilationProfile,
    horizon: f64,
    n: usize,
    lambda: f64,
    mu: f64,
) -> Result<ControlSignal, SimError> {
    if !(mu * horizon >= 1.0) {
        return Err(SimError::EmptySupport { a: 0.0, b: 1.0 / mu });
    }
    let k = profile.k;
    let scale = lambda * mu.powi(k as i32);
    Ok(ControlSignal::from_fn(horizon, n, |t| scale * profile.derivative(mu * t, k))?
        .with_provenance(Provenance::Dilation { k, lambda, mu }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationResult {
    pub lambda: f64,
    pub mu: f64,
    /// `∫u_k²` measured on the sampled control, and `λ²μ⁻¹`.
    pub quadratic_measured: f64,
    pub quadratic_predicted: f64,
    /// `∫u₁³` measured, and `aλ³μ^{3k−4}`.
    pub cubic_measured: f64,
    pub cubic_predicted: f64,
    /// `x_{k+1}(T)` from the simulation of the chain system.
    pub final_state: f64,
}

impl DilationResult {
    pub fn quadratic_rel_error(&self) -> f64 {
        (self.quadratic_measured / self.quadratic_predicted - 1.0).abs()
    }

    pub fn cubic_rel_error(&self) -> f64 {
        (self.cubic_measured / self.cubic_predicted - 1.0).abs()
    }
}

/// Runs the dilatation family on `sys` (a chain `ẋ₁ = u, …, ẋ_{k+1} = x_k² + x₁³`).
pub fn dilation_experiment(
    sys: &ControlSystem,
    profile: &DilationProfile,
    lambda: f64,
    mu: f64,
    n: usize,
) -> Result<DilationResult, SimError> {
    let k = profile.k;
    let u = dilation_control(profile, 1.0, n, lambda, mu)?;
    let table = u.primitive_table(k);
    let traj = integrate(sys, &vec![0.0; sys.n()], &u, u.dt())?;
    Ok(DilationResult {
        lambda,
        mu,
        quadratic_measured: table.l2_squared(k),
        quadratic_predicted: lambda * lambda / mu,
        cubic_measured: table.integral_pow(1, 3),
        cubic_predicted: profile.a * lambda.powi(3) * mu.powi(3 * k as i32 - 4),
        final_state: traj.final_state()[k],
    })
}

/// `μ` with `|λ| μ^{3k−3} |a| = ratio`, where the cubic term is `ratio` times
/// the quadratic one.
pub fn reversal_mu(profile: &DilationProfile, lambda: f64, ratio: f64) -> f64 {
    let e = 3.0 * profile.k as f64 - 3.0;
    (ratio / (lambda.abs() * profile.a.abs())).powf(1.0 / e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceResult {
    pub trajectory: Trajectory,
    /// `sup_t |Q(ζ(t))|`.
    pub sup_residual: f64,
}

/// Simulates the homogeneous ζ-system of `sys` from the origin and measures
/// the distance to `M₂`.
/// Integrates the ζ-system from `zeta0` (the origin when `None`) and records
/// `sup_t |Q(ζ(t))|`.
pub fn manifold_invariance(
    sys: &ControlSystem,
    zeta0: Option<&[f64]>,
    u: &ControlSignal,
    dt: f64,
) -> Result<InvarianceResult, SimError> {
    let (qd, report, c) = classify(sys);
    if c.verdict.is_drift() {
        return Err(SimError::NotManifold(sys.name().into()));
    }
    if c.verdict == Verdict::LinearlyControllable {
        return Err(SimError::BadGrid(format!("{} is linearly controllable; M2 is the whole space", sys.name())));
    }
    let m = build_m2(&report)?;
    let hs = build_homogeneous(&qd, &report);
    let zeta = hs.as_system();
    let origin = vec![0.0; zeta.n()];
    let start = zeta0.unwrap_or(&origin);
    if start.len() != zeta.n() {
        return Err(SimError::BadGrid(format!("initial state has length {}, expected {}", start.len(), zeta.n())));
    }
    let trajectory = integrate(&zeta, start, u, dt)?;
    let sup_residual = trajectory.x.iter().map(|x| norm(&m.residual(x))).fold(0.0, f64::max);
    Ok(InvarianceResult { trajectory, sup_residual })
}

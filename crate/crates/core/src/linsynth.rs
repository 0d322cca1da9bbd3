//! Controllability Gramians and minimum-energy (HUM) steering of the
//! linearized system.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::exact::{format_vec, to_f64_vec, RMat, RVec, Subspace};
use crate::lie::{krylov_vectors, QuadraticData};
use crate::numeric::Expm;
use crate::poly::PolyVectorField;
use crate::simulate::{integrate, ControlSignal, Provenance, SimError};
use crate::system::ControlSystem;

pub const DEFAULT_QUAD: usize = 2048;
pub const DEFAULT_CELLS: usize = 10_000;
/// Condition number above which a Gramian is declared singular.
pub const CONDITION_LIMIT: f64 = 1e10;
pub const MAX_ITERATIONS: usize = 20;
pub const FIXED_POINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinsynthError {
    #[error("the linearization is not controllable; unreachable directions (S1 complement): {}", missing.join(", "))]
    NotControllable { missing: Vec<String> },
    #[error("the Gramian is numerically singular (condition number {cond:e})")]
    Singular { cond: f64 },
    #[error("need T > 0 and 0 <= 2 epsilon < T, got T = {t}, epsilon = {epsilon}")]
    BadHorizon { t: f64, epsilon: f64 },
    #[error("state has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn smooth_step(x: f64) -> f64 {
    let h = |s: f64| if s <= 0.0 { 0.0 } else { (-1.0 / s).exp() };
    let (a, b) = (h(x), h(1.0 - x));
    a / (a + b)
}

/// `ρ_ε`: `C^∞`, equal to 1 on `[2ε, T − 2ε]`, supported in `[ε, T − ε]`;
/// `ρ ≡ 1` for `ε = 0`.
pub fn rho(t: f64, horizon: f64, epsilon: f64) -> f64 {
    if epsilon == 0.0 {
        return 1.0;
    }
    smooth_step((t - epsilon) / epsilon) * smooth_step((horizon - epsilon - t) / epsilon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramianData {
    pub t: f64,
    pub epsilon: f64,
    pub n_quad: usize,
    pub c: DMatrix<f64>,
}

impl GramianData {
    pub fn eigenvalues(&self) -> DVector<f64> {
        self.c.clone().symmetric_eigen().eigenvalues
    }

    pub fn condition(&self) -> f64 {
        let e = self.eigenvalues();
        let max = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = e.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn is_invertible(&self) -> bool {
        self.condition() < CONDITION_LIMIT
    }
}

fn check_horizon(t: f64, epsilon: f64) -> Result<(), LinsynthError> {
    if !(t > 0.0) || !(epsilon >= 0.0) || 2.0 * epsilon >= t {
        return Err(LinsynthError::BadHorizon { t, epsilon });
    }
    Ok(())
}

/// `∫₀ᵀ ρ_ε(t) e^{(T−t)H₀} b bᵀ e^{(T−t)H₀ᵀ} dt` by composite Simpson.
pub fn gramian(h0: &RMat, b: &[crate::rational::Rational], t: f64, epsilon: f64, n_quad: usize) -> Result<GramianData, LinsynthError> {
    check_horizon(t, epsilon)?;
    let n_quad = (n_quad + n_quad % 2).max(2);
    let e = Expm::new(h0);
    let bv = DVector::from_vec(to_f64_vec(b));
    let n = bv.len();
    let h = t / n_quad as f64;
    let mut c = DMatrix::zeros(n, n);
    for i in 0..=n_quad {
        let s = i as f64 * h;
        let w = if i == 0 || i == n_quad { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let r = rho(s, t, epsilon);
        if r == 0.0 {
            continue;
        }
        let v = e.at(t - s) * &bv;
        c += &v * v.transpose() * (w * r);
    }
    c *= h / 3.0;
    let c = (&c + c.transpose()) * 0.5;
    Ok(GramianData { t, epsilon, n_quad, c })
}

/// Exact Kalman test, listing a basis of `S1⊥` on failure.
pub fn kalman_check(h0: &RMat, b: &[crate::rational::Rational]) -> Result<(), LinsynthError> {
    let n = b.len();
    let s1 = Subspace::span(n, &krylov_vectors(h0, b, n));
    if s1.dim() == n {
        Ok(())
    } else {
        Err(LinsynthError::NotControllable { missing: s1.complement_basis().iter().map(|v| format_vec(v)).collect() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumControl {
    pub control: ControlSignal,
    pub p: Vec<f64>,
    pub gramian: GramianData,
}

/// `u(t) = ρ_ε(t) bᵀ e^{(T−t)H₀ᵀ} p` with `𝔠 p = x† − e^{TH₀} x*`.
pub fn hum_control(
    h0: &RMat,
    b: &RVec,
    x_star: &[f64],
    x_dag: &[f64],
    t: f64,
    epsilon: f64,
    n_cells: usize,
) -> Result<HumControl, LinsynthError> {
    let n = b.len();
    for x in [x_star, x_dag] {
        if x.len() != n {
            return Err(LinsynthError::Dimension { expected: n, got: x.len() });
        }
    }
    kalman_check(h0, b)?;
    let g = gramian(h0, b, t, epsilon, DEFAULT_QUAD)?;
    if !g.is_invertible() {
        return Err(LinsynthError::Singular { cond: g.condition() });
    }
    let e = Expm::new(h0);
    let target = DVector::from_column_slice(x_dag) - e.at(t) * DVector::from_column_slice(x_star);
    let p = g.c.clone().cholesky().map(|ch| ch.solve(&target)).ok_or(LinsynthError::Singular { cond: g.condition() })?;
    let bv = DVector::from_vec(to_f64_vec(b));
    let control = ControlSignal::from_fn(t, n_cells, |s| {
        let r = rho(s, t, epsilon);
        if r == 0.0 {
            0.0
        } else {
            r * (e.at(t - s) * &bv).dot(&p)
        }
    })?
    .with_provenance(Provenance::Samples);
    Ok(HumControl { control, p: p.iter().copied().collect(), gramian: g })
}

/// Integrates `ẏ = H₀y + ub` from `x*` and returns `|y(T) − x†|`.
pub fn verify_steering(h0: &RMat, b: &RVec, u: &ControlSignal, x_star: &[f64], x_dag: &[f64]) -> Result<f64, LinsynthError> {
    let lin = ControlSystem::affine("linearized", PolyVectorField::linear(h0), PolyVectorField::constant(b))
        .expect("linear fields vanish at the origin");
    let traj = integrate(&lin, x_star, u, u.dt())?;
    Ok(distance(traj.final_state(), x_dag))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteerReport {
    pub iterations: usize,
    pub error: f64,
    pub converged: bool,
    /// Endpoint error after each iteration.
    pub history: Vec<f64>,
}

/// Steers the full system by repeatedly correcting the linear target with
/// the endpoint error of the nonlinear simulation.
pub fn steer(
    sys: &ControlSystem,
    x_star: &[f64],
    x_dag: &[f64],
    t: f64,
    epsilon: f64,
    n_cells: usize,
) -> Result<(ControlSignal, SteerReport), LinsynthError> {
    let qd = QuadraticData::extract(sys);
    let mut aim = x_dag.to_vec();
    let mut history = Vec::new();
    let mut best: Option<ControlSignal> = None;
    for _ in 0..MAX_ITERATIONS {
        let hum = hum_control(&qd.h0, &qd.b, x_star, &aim, t, epsilon, n_cells)?;
        let traj = integrate(sys, x_star, &hum.control, hum.control.dt())?;
        let end = traj.final_state();
        let err = distance(end, x_dag);
        history.push(err);
        best = Some(hum.control);
        if err < FIXED_POINT_TOL {
            break;
        }
        for ((a, e), d) in aim.iter_mut().zip(end).zip(x_dag) {
            *a -= e - d;
        }
    }
    let error = *history.last().expect("at least one iteration");
    let report = SteerReport { iterations: history.len(), error, converged: error < FIXED_POINT_TOL, history };
    Ok((best.expect("at least one iteration"), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn rho_profile() {
        assert_eq!(rho(0.05, 1.0, 0.1), 0.0);
        assert_eq!(rho(0.5, 1.0, 0.1), 1.0);
        assert_eq!(rho(0.2, 1.0, 0.1), 1.0);
        assert!(rho(0.15, 1.0, 0.1) > 0.0 && rho(0.15, 1.0, 0.1) < 1.0);
        assert_eq!(rho(0.0, 1.0, 0.0), 1.0);
    }

    #[test]
    fn zero_drift_gramian() {
        let g = gramian(&vec![vec![int(0)]], &[int(1)], 1.0, 0.0, 64).unwrap();
        assert!((g.c[(0, 0)] - 1.0).abs() < 1e-14);
    }
}

use serde::{Deserialize, Serialize};

use super::signal::ControlSignal;
use super::SimError;
use crate::poly::{ad_power, CompiledField, PolyVectorField};
use crate::system::ControlSystem;

pub const BLOWUP_GUARD: f64 = 1e6;

/// Minimum number of RK4 substeps used for flow maps.
pub const FLOW_SUBSTEPS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub dt: f64,
    pub method: String,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.x.last().expect("trajectories are non-empty")
    }

    /// Header `t,x1..xn,u`.
    pub fn to_csv(&self) -> String {
        let n = self.x.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.push("u".to_string());
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        crate::io::write_csv(
            &h,
            self.t.iter().zip(&self.x).zip(&self.u).map(|((t, x), u)| {
                let mut row = vec![*t];
                row.extend(x);
                row.push(*u);
                row
            }),
        )
    }
}

fn axpy(x: &[f64], a: f64, k: &[f64], out: &mut [f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + a * ki;
    }
}

/// One classical RK4 step for `ẋ = f(t, x)`.
pub fn rk4_step(f: &mut impl FnMut(f64, &[f64], &mut [f64]), t: f64, x: &mut [f64], h: f64) {
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(t, x, &mut k1);
    axpy(x, 0.5 * h, &k1, &mut tmp);
    f(t + 0.5 * h, &tmp, &mut k2);
    axpy(x, 0.5 * h, &k2, &mut tmp);
    f(t + 0.5 * h, &tmp, &mut k3);
    axpy(x, h, &k3, &mut tmp);
    f(t + h, &tmp, &mut k4);
    for i in 0..n {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn steps_for(horizon: f64, dt: f64) -> Result<usize, SimError> {
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(SimError::BadGrid("dt and T must be positive".into()));
    }
    let steps = (horizon / dt).round() as usize;
    if steps == 0 || ((steps as f64) * dt - horizon).abs() > 1e-9 * horizon {
        return Err(SimError::BadGrid(format!("dt = {dt} does not divide T = {horizon}")));
    }
    Ok(steps)
}

/// Integrates a compiled right-hand side `f(x, u)` with classical RK4, the
/// control being interpolated at stage times.
pub fn integrate_field(
    f: &CompiledField,
    x0: &[f64],
    u: &ControlSignal,
    dt: f64,
) -> Result<Trajectory, SimError> {
    let horizon = u.horizon();
    let steps = steps_for(horizon, dt)?;
    let ratio = u.dt() / dt;
    let r = ratio.round();
    let inv = dt / u.dt();
    if !((ratio >= 1.0 && (ratio - r).abs() < 1e-6) || (inv >= 1.0 && (inv - inv.round()).abs() < 1e-6)) {
        return Err(SimError::BadGrid(format!(
            "integrator step {dt} and control step {} must divide one another",
            u.dt()
        )));
    }
    let h = horizon / steps as f64;
    let mut x = x0.to_vec();
    let mut t_out = Vec::with_capacity(steps + 1);
    let mut x_out = Vec::with_capacity(steps + 1);
    let mut u_out = Vec::with_capacity(steps + 1);
    t_out.push(0.0);
    x_out.push(x.clone());
    u_out.push(u.sample(0.0));
    let mut rhs = |t: f64, y: &[f64], out: &mut [f64]| f.eval_into(y, u.sample(t), out);
    for s in 0..steps {
        let t = s as f64 * h;
        rk4_step(&mut rhs, t, &mut x, h);
        let t1 = (s + 1) as f64 * h;
        if !x.iter().all(|v| v.is_finite()) || norm(&x) > BLOWUP_GUARD {
            return Err(SimError::Divergence { time: t1 });
        }
        t_out.push(t1);
        x_out.push(x.clone());
        u_out.push(u.sample(t1));
    }
    Ok(Trajectory { t: t_out, x: x_out, u: u_out, dt: h, method: "rk4".into() })
}

pub fn integrate(sys: &ControlSystem, x0: &[f64], u: &ControlSignal, dt: f64) -> Result<Trajectory, SimError> {
    if x0.len() != sys.n() {
        return Err(SimError::BadGrid(format!("initial state has length {}, expected {}", x0.len(), sys.n())));
    }
    integrate_field(&sys.full_field().compile(), x0, u, dt)
}

/// Flow of an autonomous field for pseudo-time `tau`, RK4 with at least
/// [`FLOW_SUBSTEPS`] substeps.
pub fn flow(f: &CompiledField, p: &[f64], tau: f64, substeps: usize) -> Result<Vec<f64>, SimError> {
    let m = substeps.max(FLOW_SUBSTEPS);
    let h = tau / m as f64;
    let mut x = p.to_vec();
    let mut rhs = |_t: f64, y: &[f64], out: &mut [f64]| f.eval_into(y, 0.0, out);
    for s in 0..m {
        rk4_step(&mut rhs, s as f64 * h, &mut x, h);
        if !x.iter().all(|v| v.is_finite()) || norm(&x) > BLOWUP_GUARD {
            return Err(SimError::Divergence { time: (s + 1) as f64 * h });
        }
    }
    Ok(x)
}

/// `f_j = (−1)^{j−1} ad^{j−1}_{f₀}(f₁)` for `j = 1..=jmax`.
pub fn auxiliary_fields(sys: &ControlSystem, jmax: usize) -> Result<Vec<PolyVectorField>, SimError> {
    let f0 = sys.drift();
    let f1 = sys.control_field();
    (1..=jmax)
        .map(|j| {
            let ad = ad_power(&f0, &f1, j - 1)?;
            Ok(if j % 2 == 1 { ad } else { ad.scale(&crate::rational::int(-1)) })
        })
        .collect()
}

/// `ξ_j(t)` at every trajectory sample: `ξ₀ = x(t)`,
/// `ξ_{l+1} = φ_{l+1}(−u_{l+1}(t), ξ_l)`.
pub fn auxiliary_state(
    sys: &ControlSystem,
    traj: &Trajectory,
    u: &ControlSignal,
    j: usize,
) -> Result<Vec<Vec<f64>>, SimError> {
    if j == 0 {
        return Ok(traj.x.clone());
    }
    let fields: Vec<CompiledField> = auxiliary_fields(sys, j)?.iter().map(PolyVectorField::compile).collect();
    let table = u.primitive_table(j);
    traj.t
        .iter()
        .zip(&traj.x)
        .map(|(&t, x)| {
            let mut xi = x.clone();
            for (l, f) in fields.iter().enumerate() {
                let tau = -table.eval(l + 1, t);
                if tau != 0.0 {
                    xi = flow(f, &xi, tau, FLOW_SUBSTEPS)?;
                }
            }
            Ok(xi)
        })
        .collect()
}

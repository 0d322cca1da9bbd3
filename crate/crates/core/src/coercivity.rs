//! The second-order drift form `Q_t(u) = Σ_j ∫₀ᵗ u_j(s)² w_j(t − s) ds`, its
//! coercivity constant relative to `‖u_k‖²_{L²}` and the coercivity time T*.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::brunovsky::{well_prepared, BrunovskyError};
use crate::exact::{is_zero_vec, mat_pow, mat_vec, to_f64_vec, vscale};
use crate::lie::{classify, Verdict};
use crate::numeric::{lambda_min, EigenError, Expm};
use crate::rational::frac;
use crate::system::{ControlSystem, SystemKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoercivityError {
    #[error("{name} has verdict {verdict}; the coercivity time is only defined for drift systems")]
    NotDrift { name: String, verdict: String },
    #[error(transparent)]
    Brunovsky(#[from] BrunovskyError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("need 0 < t and at least {min} cells, got t = {t}, N = {n}")]
    BadGrid { t: f64, n: usize, min: usize },
}

/// Which controls enter the form on `[0, t]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointMode {
    /// `u_j(t) = 0` for `j = 1..=d`, the class on which the drift estimate
    /// holds at every time.
    Vanishing,
    /// No condition at `t`.
    Free,
}

#[derive(Debug, Clone)]
pub struct Weight {
    pub j: usize,
    /// `G_j(0, 0)`.
    pub g: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CoercivityProblem {
    pub name: String,
    pub kind: SystemKind,
    pub k: usize,
    pub d: usize,
    pub dk: Vec<f64>,
    pub weights: Vec<Weight>,
    /// Weights `j < max(k, γ)`, which must vanish.
    pub lower: Vec<Weight>,
    pub endpoint: EndpointMode,
    expm: Expm,
}

impl CoercivityProblem {
    /// Classifies `sys`, applies the Brunovský feedback and collects the
    /// weights of the well-prepared system.
    pub fn new(sys: &ControlSystem, endpoint: EndpointMode) -> Result<Self, CoercivityError> {
        let (_, _, c) = classify(sys);
        let k = match c.verdict {
            Verdict::Drift { k, .. } => k,
            Verdict::DriftOrderZero { .. } => 0,
            ref v => return Err(CoercivityError::NotDrift { name: sys.name().into(), verdict: v.label().into() }),
        };
        let (wp, _) = well_prepared(sys)?;
        let (qd, report, c) = classify(&wp);
        let d = report.d();
        debug_assert!(is_zero_vec(&mat_vec(&mat_pow(&qd.h0, d), &qd.b)));
        let dk = to_f64_vec(c.verdict.direction().expect("feedback keeps the drift verdict"));
        let g = |j: usize| {
            let v = if j == 0 { vscale(&frac(1, 2), &qd.d0) } else { vscale(&frac(-1, 2), report.w_k(j)) };
            Weight { j, g: to_f64_vec(&v) }
        };
        let start = k.max(qd.gamma());
        Ok(Self {
            name: sys.name().into(),
            kind: qd.kind,
            k,
            d,
            dk,
            weights: (start..=d).map(g).collect(),
            lower: (qd.gamma()..start).map(g).collect(),
            endpoint,
            expm: Expm::new(&qd.h0),
        })
    }

    fn weight_at(&self, w: &Weight, tau: f64) -> f64 {
        let e = self.expm.at(tau);
        let v = e * DVector::from_column_slice(&w.g);
        v.iter().zip(&self.dk).map(|(a, b)| a * b).sum()
    }

    /// `w_j(τ) = ⟨e^{τH₀} G_j(0,0), d_k⟩`.
    pub fn weight(&self, j: usize, tau: f64) -> Option<f64> {
        self.weights.iter().chain(&self.lower).find(|w| w.j == j).map(|w| self.weight_at(w, tau))
    }

    /// `max |w_j(τ)|` over the lower weights and the sampled `τ`.
    pub fn lower_weight_max(&self, taus: &[f64]) -> f64 {
        self.lower
            .iter()
            .flat_map(|w| taus.iter().map(move |&t| self.weight_at(w, t).abs()))
            .fold(0.0, f64::max)
    }

    /// Smallest `N` for which the endpoint constraints leave free variables.
    fn min_cells(&self) -> usize {
        match self.endpoint {
            EndpointMode::Vanishing => self.d + 1,
            EndpointMode::Free => 1,
        }
    }
}

fn fact(j: usize) -> f64 {
    (1..=j).map(|i| i as f64).product()
}

/// `M_j`: values of `u_j` at the cell midpoints for piecewise-constant `u`
/// with `N` cells on `[0, t]`; `M₀ = I`.
pub fn primitive_matrix(t: f64, n: usize, j: usize) -> DMatrix<f64> {
    let h = t / n as f64;
    if j == 0 {
        return DMatrix::identity(n, n);
    }
    let fj = fact(j);
    DMatrix::from_fn(n, n, |i, l| {
        let s = (i as f64 + 0.5) * h;
        if l > i {
            0.0
        } else if l == i {
            (0.5 * h).powi(j as i32) / fj
        } else {
            let a = l as f64 * h;
            ((s - a).powi(j as i32) - (s - a - h).powi(j as i32)) / fj
        }
    })
}

/// Rows `u_j(t)`, `j = 1..=d`, as functionals of the cell values.
fn endpoint_rows(t: f64, n: usize, d: usize) -> DMatrix<f64> {
    let h = t / n as f64;
    DMatrix::from_fn(d, n, |r, l| {
        let j = r + 1;
        let a = l as f64 * h;
        ((t - a).powi(j as i32) - (t - a - h).powi(j as i32)) / fact(j)
    })
}

/// Basis `Z` (N × (N − d)) of the controls with `u_j(t) = 0`, obtained by
/// solving for the last `d` cells.
fn vanishing_basis(t: f64, n: usize, d: usize) -> DMatrix<f64> {
    let c = endpoint_rows(t, n, d);
    let free = n - d;
    let c_first = c.columns(0, free).into_owned();
    let c_last = c.columns(free, d).into_owned();
    let tail = -c_last.lu().solve(&c_first).expect("endpoint rows are independent");
    let mut z = DMatrix::zeros(n, free);
    z.view_mut((0, 0), (free, free)).fill_with_identity();
    z.view_mut((free, 0), (d, free)).copy_from(&tail);
    z
}

#[derive(Debug, Clone)]
pub struct Forms {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// Map from reduced coordinates to cell values.
    pub basis: Option<DMatrix<f64>>,
}

impl Forms {
    pub fn cells(&self, v: &DVector<f64>) -> DVector<f64> {
        match &self.basis {
            Some(z) => z * v,
            None => v.clone(),
        }
    }
}

/// `A_t = Σ_j M_jᵀ diag(Δs w_j(t − s_i)) M_j` and `B_t = Δs M_kᵀ M_k`,
/// restricted to the admissible controls.
pub fn assemble_forms(p: &CoercivityProblem, t: f64, n: usize) -> Result<Forms, CoercivityError> {
    if !(t > 0.0) || n < p.min_cells() {
        return Err(CoercivityError::BadGrid { t, n, min: p.min_cells() });
    }
    let h = t / n as f64;
    let mut a = DMatrix::zeros(n, n);
    for w in &p.weights {
        let m = primitive_matrix(t, n, w.j);
        let diag = DVector::from_fn(n, |i, _| h * p.weight_at(w, t - (i as f64 + 0.5) * h));
        let dm = DMatrix::from_diagonal(&diag) * &m;
        a += m.transpose() * dm;
    }
    let mk = primitive_matrix(t, n, p.k);
    let b = mk.transpose() * &mk * h;
    let a = (&a + a.transpose()) * 0.5;
    let b = (&b + b.transpose()) * 0.5;
    Ok(match p.endpoint {
        EndpointMode::Free => Forms { a, b, basis: None },
        EndpointMode::Vanishing => {
            let z = vanishing_basis(t, n, p.d);
            let zt = z.transpose();
            let a = &zt * a * &z;
            let b = &zt * b * &z;
            Forms { a: (&a + a.transpose()) * 0.5, b: (&b + b.transpose()) * 0.5, basis: Some(z) }
        }
    })
}

/// `λ_min(t)` and the minimizing control (cell values).
pub fn lambda_at(p: &CoercivityProblem, t: f64, n: usize) -> Result<(f64, DVector<f64>), CoercivityError> {
    let f = assemble_forms(p, t, n)?;
    let (l, v) = lambda_min(&f.a, &f.b)?;
    Ok((l, f.cells(&v)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "crossing_found")]
    CrossingFound,
    #[serde(rename = "no_crossing_up_to_Tmax")]
    NoCrossingUpToTmax,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::CrossingFound => "crossing_found",
            Status::NoCrossingUpToTmax => "no_crossing_up_to_Tmax",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub system: String,
    pub k: usize,
    pub endpoint: EndpointMode,
    pub status: Status,
    pub tstar_est: Option<f64>,
    pub tstar_err: Option<f64>,
    /// Sweep intervals `[t_a, t_b]` across which `λ_min` changes sign.
    pub crossings: Vec<(f64, f64)>,
    pub grid_n: usize,
    pub t_max: f64,
    /// `(t, λ_min(t))` on the sweep grid.
    pub samples: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

impl CoercivityReport {
    pub fn to_csv(&self) -> String {
        crate::io::write_csv(&["t", "lambda_min"], self.samples.iter().map(|(t, l)| vec![*t, *l]))
    }
}

/// Number of sweep points over `(0, T_max]`.
pub const SWEEP_POINTS: usize = 100;

fn bisect(p: &CoercivityProblem, mut lo: f64, mut hi: f64, n: usize, width: f64) -> Result<f64, CoercivityError> {
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if lambda_at(p, mid, n)?.0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sweeps `t ∈ (0, T_max]`, bisects the first sign change to width
/// `T_max/10³` and repeats the bisection with `2N` cells for an error
/// estimate.
pub fn estimate_tstar(p: &CoercivityProblem, t_max: f64, n: usize) -> Result<CoercivityReport, CoercivityError> {
    let samples = (1..=SWEEP_POINTS)
        .map(|i| {
            let t = t_max * i as f64 / SWEEP_POINTS as f64;
            lambda_at(p, t, n).map(|(l, _)| (t, l))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let crossings: Vec<(f64, f64)> = samples
        .windows(2)
        .filter(|w| (w[0].1 > 0.0) != (w[1].1 > 0.0))
        .map(|w| (w[0].0, w[1].0))
        .collect();
    let mut notes = vec![
        "lambda_min is evaluated for the horizon t itself on piecewise-constant controls; \
         the all-subinterval condition is only sampled"
            .to_string(),
    ];
    if p.k == 0 {
        notes.push("order-zero drift: cross terms between the j = 0 weight and higher weights are not controlled".into());
    }
    if crossings.len() > 1 {
        notes.push(format!("{} sign changes detected; T* is taken at the first", crossings.len()));
    }
    if samples.first().is_some_and(|s| s.1 <= 0.0) {
        notes.push("lambda_min is not positive at the first sweep point".into());
    }
    let width = t_max / 1e3;
    let (status, tstar_est, tstar_err) = match crossings.first() {
        Some(&(lo, hi)) => {
            let est = bisect(p, lo, hi, n, width)?;
            let refined = bisect(p, lo, hi, 2 * n, width)?;
            (Status::CrossingFound, Some(est), Some((refined - est).abs().max(0.5 * width)))
        }
        None => (Status::NoCrossingUpToTmax, None, None),
    };
    Ok(CoercivityReport {
        system: p.name.clone(),
        k: p.k,
        endpoint: p.endpoint,
        status,
        tstar_est,
        tstar_err,
        crossings,
        grid_n: n,
        t_max,
        samples,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_matrix_of_constant_control() {
        // u ≡ 1 ⇒ u_2(s) = s²/2 at midpoints.
        let m = primitive_matrix(2.0, 8, 2);
        let v = m * DVector::from_element(8, 1.0);
        for i in 0..8 {
            let s = (i as f64 + 0.5) * 0.25;
            assert!((v[i] - s * s / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn vanishing_basis_kills_traces() {
        let z = vanishing_basis(1.5, 12, 3);
        let c = endpoint_rows(1.5, 12, 3);
        assert!((c * z).amax() < 1e-12);
    }
}

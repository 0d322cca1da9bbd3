use serde::{Deserialize, Serialize};

use super::jet::psi_derivatives;
use super::SimError;

/// `ψ(½) = e^{−4}`, the maximum of the bump.
const PSI_MAX: f64 = 0.018_315_638_888_734_18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Bump(BumpSpec),
    Sinusoid { freq: f64, amp: f64 },
    Dilation { k: usize, lambda: f64, mu: f64 },
    Primitive { order: usize },
    File(String),
    Samples,
}

/// Samples on the uniform grid `t_i = i·T/N`, `i = 0..=N`, read back by
/// piecewise-linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    horizon: f64,
    values: Vec<f64>,
    provenance: Provenance,
}

impl ControlSignal {
    pub fn from_samples(horizon: f64, values: Vec<f64>) -> Result<Self, SimError> {
        if !(horizon > 0.0) || values.len() < 2 {
            return Err(SimError::BadGrid("need T > 0 and at least two samples".into()));
        }
        Ok(Self { horizon, values, provenance: Provenance::Samples })
    }

    /// Samples `f` on the uniform grid with `n` cells.
    pub fn from_fn(horizon: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self, SimError> {
        let dt = horizon / n as f64;
        Self::from_samples(horizon, (0..=n).map(|i| f(i as f64 * dt)).collect())
    }

    pub fn zero(horizon: f64, n: usize) -> Self {
        Self::from_fn(horizon, n, |_| 0.0).expect("valid grid")
    }

    /// Builds a signal from a `t,u` table, which must be uniform and start at 0.
    pub fn from_table(t: &[f64], u: &[f64], label: &str) -> Result<Self, SimError> {
        if t.len() < 2 || t.len() != u.len() || t[0].abs() > 1e-12 {
            return Err(SimError::BadGrid(format!("{label}: need ≥ 2 rows starting at t = 0")));
        }
        let dt = t[1] - t[0];
        for w in t.windows(2) {
            if !(w[1] > w[0]) || ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
                return Err(SimError::BadGrid(format!("{label}: grid must be strictly increasing and uniform")));
            }
        }
        let mut s = Self::from_samples(*t.last().expect("non-empty"), u.to_vec())?;
        s.provenance = Provenance::File(label.to_string());
        Ok(s)
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.cells() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.values.len()).map(|i| i as f64 * dt).collect()
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let dt = self.dt();
        let n = self.cells();
        let x = (t / dt).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n - 1);
        (i, t - i as f64 * dt)
    }

    /// Piecewise-linear interpolation, constant extension outside `[0, T]`.
    pub fn sample(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values[0];
        }
        if t >= self.horizon {
            return *self.values.last().expect("non-empty");
        }
        let (i, s) = self.locate(t);
        let w = s / self.dt();
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            horizon: self.horizon,
            values: self.values.iter().map(|v| v * a).collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn add(&self, other: &ControlSignal) -> Result<Self, SimError> {
        if other.values.len() != self.values.len() || (other.horizon - self.horizon).abs() > 1e-12 {
            return Err(SimError::BadGrid("signals live on different grids".into()));
        }
        Ok(Self {
            horizon: self.horizon,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            provenance: Provenance::Samples,
        })
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Exact iterated primitives of the interpolant.
    pub fn primitive_table(&self, jmax: usize) -> PrimitiveTable {
        PrimitiveTable::new(self, jmax)
    }

    /// `u_j` sampled on the control grid.
    pub fn primitive(&self, j: usize) -> ControlSignal {
        if j == 0 {
            return self.clone();
        }
        let table = self.primitive_table(j);
        Self {
            horizon: self.horizon,
            values: table.nodes.iter().map(|row| row[j - 1]).collect(),
            provenance: Provenance::Primitive { order: j },
        }
    }

    /// `∫₀ᵀ u²` for the interpolant, exact.
    pub fn l2_squared(&self) -> f64 {
        let h = self.dt();
        self.values
            .windows(2)
            .map(|w| h * (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0)
            .sum()
    }
}

/// `u_1..u_jmax` at every node, obtained by exact Taylor propagation of the
/// piecewise-linear interpolant, so `u_j(t)` can be evaluated anywhere.
#[derive(Debug, Clone)]
pub struct PrimitiveTable {
    jmax: usize,
    dt: f64,
    values: Vec<f64>,
    /// `nodes[i][j-1] = u_j(t_i)`.
    nodes: Vec<Vec<f64>>,
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for i in 1..=n {
        f[i] = f[i - 1] * i as f64;
    }
    f
}

impl PrimitiveTable {
    fn new(u: &ControlSignal, jmax: usize) -> Self {
        let dt = u.dt();
        let mut nodes = vec![vec![0.0; jmax]; u.values.len()];
        let fact = factorials(jmax + 2);
        for i in 0..u.cells() {
            let a = u.values[i];
            let b = (u.values[i + 1] - a) / dt;
            let next = Self::advance(&nodes[i], a, b, dt, &fact);
            nodes[i + 1] = next;
        }
        Self { jmax, dt, values: u.values.clone(), nodes }
    }

    /// `U_m(t + h) = Σ_{l<m} U_{m−l}(t) h^l/l! + a h^m/m! + b h^{m+1}/(m+1)!`
    /// for `u(t + s) = a + b s`.
    fn advance(start: &[f64], a: f64, b: f64, h: f64, fact: &[f64]) -> Vec<f64> {
        let jmax = start.len();
        let mut hp = vec![1.0; jmax + 2];
        for l in 1..hp.len() {
            hp[l] = hp[l - 1] * h;
        }
        (1..=jmax)
            .map(|m| {
                let mut acc = a * hp[m] / fact[m] + b * hp[m + 1] / fact[m + 1];
                for l in 0..m {
                    acc += start[m - l - 1] * hp[l] / fact[l];
                }
                acc
            })
            .collect()
    }

    pub fn jmax(&self) -> usize {
        self.jmax
    }

    pub fn at_node(&self, i: usize, j: usize) -> f64 {
        if j == 0 {
            self.values[i]
        } else {
            self.nodes[i][j - 1]
        }
    }

    /// `u_j(t)`, exact for the interpolant.
    pub fn eval(&self, j: usize, t: f64) -> f64 {
        let n = self.values.len() - 1;
        let x = (t / self.dt).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n - 1);
        let s = (t - i as f64 * self.dt).clamp(0.0, self.dt);
        let a = self.values[i];
        let b = (self.values[i + 1] - a) / self.dt;
        if j == 0 {
            return a + b * s;
        }
        let fact = factorials(self.jmax + 2);
        Self::advance(&self.nodes[i][..j], a, b, s, &fact)[j - 1]
    }

    /// `∫₀ᵀ u_j²` by Simpson's rule on each cell (midpoints evaluated exactly).
    pub fn l2_squared(&self, j: usize) -> f64 {
        let n = self.values.len() - 1;
        (0..n)
            .map(|i| {
                let t0 = i as f64 * self.dt;
                let a = self.at_node(i, j);
                let m = self.eval(j, t0 + 0.5 * self.dt);
                let b = self.at_node(i + 1, j);
                self.dt * (a * a + 4.0 * m * m + b * b) / 6.0
            })
            .sum()
    }

    /// `∫₀ᵀ u_j^p` (signed for odd `p`) by Simpson's rule per cell.
    pub fn integral_pow(&self, j: usize, p: i32) -> f64 {
        let n = self.values.len() - 1;
        (0..n)
            .map(|i| {
                let t0 = i as f64 * self.dt;
                let a = self.at_node(i, j).powi(p);
                let m = self.eval(j, t0 + 0.5 * self.dt).powi(p);
                let b = self.at_node(i + 1, j).powi(p);
                self.dt * (a + 4.0 * m + b) / 6.0
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub linf: f64,
    /// `w_inf[m]` = `‖u‖_{W^{m,∞}}` for `m = 0..=m_max`.
    pub w_inf: Vec<f64>,
    /// `h_neg[k-1]` = `‖u_k‖_{L²}` for `k = 1..=k_max`.
    pub h_neg: Vec<f64>,
}

/// Lᵖ norms, `W^{m,∞}` by repeated central differences and `H^{−k}` norms.
pub fn norms(u: &ControlSignal, m_max: usize, k_max: usize) -> Result<NormReport, SimError> {
    if u.values.len() < 2 * m_max + 1 {
        return Err(SimError::BadGrid(format!(
            "W^{{{m_max},inf}} needs at least {} samples, grid has {}",
            2 * m_max + 1,
            u.values.len()
        )));
    }
    let h = u.dt();
    // 3-point Gauss–Legendre per cell for |u| and |u|³.
    let g = [(-(0.6f64).sqrt(), 5.0 / 9.0), (0.0, 8.0 / 9.0), ((0.6f64).sqrt(), 5.0 / 9.0)];
    let mut l1 = 0.0;
    let mut l3 = 0.0;
    for w in u.values.windows(2) {
        for (x, wt) in g {
            let s = 0.5 * (1.0 + x);
            let v = (w[0] * (1.0 - s) + w[1] * s).abs();
            l1 += 0.5 * h * wt * v;
            l3 += 0.5 * h * wt * v * v * v;
        }
    }
    let linf = u.sup_norm();
    let mut w_inf = vec![linf];
    let mut deriv = u.values.clone();
    for _ in 1..=m_max {
        deriv = deriv.windows(3).map(|w| (w[2] - w[0]) / (2.0 * h)).collect();
        let sup = deriv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let prev = *w_inf.last().expect("non-empty");
        w_inf.push(prev.max(sup));
    }
    let table = u.primitive_table(k_max);
    let h_neg = (1..=k_max).map(|k| table.l2_squared(k).sqrt()).collect();
    Ok(NormReport { l1, l2: u.l2_squared().sqrt(), l3: l3.cbrt(), linf, w_inf, h_neg })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    /// Support `[a, b] ⊂ (0, T)`.
    pub a: f64,
    pub b: f64,
    /// Sup-norm of the resulting control.
    pub amp: f64,
    /// The control is the `deriv`-th derivative of the bump (zero-mean
    /// families for `deriv ≥ 1`).
    pub deriv: usize,
}

impl BumpSpec {
    /// Unscaled `d^r/dt^r` of `ψ((t−a)/(b−a))/ψ(½)`.
    fn raw(&self, t: f64, r: usize) -> f64 {
        let len = self.b - self.a;
        let s = (t - self.a) / len;
        psi_derivatives(s, r)[r] / PSI_MAX / len.powi(r as i32)
    }

    /// Derivatives `0..=order` of the control (not of the underlying bump).
    pub fn derivatives(&self, t: f64, order: usize, scale: f64) -> Vec<f64> {
        let len = self.b - self.a;
        let s = (t - self.a) / len;
        let d = psi_derivatives(s, order + self.deriv);
        (0..=order)
            .map(|r| scale * d[r + self.deriv] / PSI_MAX / len.powi((r + self.deriv) as i32))
            .collect()
    }
}

/// `C^∞` bump (or one of its derivatives) supported in `[a, b]`, scaled so
/// that the sampled sup-norm equals `amp`.
pub fn bump_family(horizon: f64, n: usize, spec: &BumpSpec) -> Result<ControlSignal, SimError> {
    if !(spec.a < spec.b) || spec.a < 0.0 || spec.b > horizon {
        return Err(SimError::EmptySupport { a: spec.a, b: spec.b });
    }
    let raw = ControlSignal::from_fn(horizon, n, |t| spec.raw(t, spec.deriv))?;
    let sup = raw.sup_norm();
    if sup == 0.0 {
        return Err(SimError::EmptySupport { a: spec.a, b: spec.b });
    }
    Ok(raw.scaled(spec.amp / sup).with_provenance(Provenance::Bump(spec.clone())))
}

/// Scale factor applied by [`bump_family`] to the unscaled derivative.
pub fn bump_scale(horizon: f64, n: usize, spec: &BumpSpec) -> f64 {
    let dt = horizon / n as f64;
    let sup = (0..=n).map(|i| spec.raw(i as f64 * dt, spec.deriv).abs()).fold(0.0, f64::max);
    spec.amp / sup
}

pub fn sinusoid(horizon: f64, n: usize, freq: f64, amp: f64) -> Result<ControlSignal, SimError> {
    Ok(ControlSignal::from_fn(horizon, n, |t| amp * (freq * t).sin())?.with_provenance(Provenance::Sinusoid { freq, amp }))
}

use num_traits::Zero;

use super::{degree_cap, Monomial, PolyError, Polynomial};
use crate::rational::{format_rational, to_f64, Rational};

/// Polynomial vector field on ℝⁿ, optionally depending on a scalar control.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyVectorField {
    n: usize,
    components: Vec<Polynomial>,
}

impl PolyVectorField {
    pub fn new(components: Vec<Polynomial>) -> Result<Self, PolyError> {
        let n = components.len();
        for c in &components {
            if c.n() != n {
                return Err(PolyError::DimensionMismatch { expected: n, got: c.n() });
            }
        }
        Ok(Self { n, components })
    }

    pub fn zero(n: usize) -> Self {
        Self { n, components: vec![Polynomial::zero(n); n] }
    }

    /// Constant field equal to `v` everywhere.
    pub fn constant(v: &[Rational]) -> Self {
        let n = v.len();
        Self {
            n,
            components: v.iter().map(|c| Polynomial::constant(n, c.clone())).collect(),
        }
    }

    /// Linear field `x ↦ A x` for a row-major square matrix.
    pub fn linear(a: &[Vec<Rational>]) -> Self {
        let n = a.len();
        let components = a
            .iter()
            .map(|row| {
                let mut p = Polynomial::zero(n);
                for (j, c) in row.iter().enumerate() {
                    p.add_term(Monomial::var(n, j), c.clone());
                }
                p
            })
            .collect();
        Self { n, components }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Polynomial {
        &self.components[i]
    }

    pub fn uses_control(&self) -> bool {
        self.components.iter().any(Polynomial::uses_control)
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    fn check_point(&self, len: usize, u: Option<()>) -> Result<(), PolyError> {
        if len != self.n {
            return Err(PolyError::DimensionMismatch { expected: self.n, got: len });
        }
        if u.is_none() && self.uses_control() {
            return Err(PolyError::MissingControl);
        }
        Ok(())
    }

    /// Exact evaluation. `u` may be omitted for pure state fields.
    pub fn evaluate_exact(&self, x: &[Rational], u: Option<&Rational>) -> Result<Vec<Rational>, PolyError> {
        self.check_point(x.len(), u.map(|_| ()))?;
        let zero = Rational::zero();
        let u = u.unwrap_or(&zero);
        Ok(self.components.iter().map(|p| p.eval_exact(x, u)).collect())
    }

    pub fn evaluate(&self, x: &[f64], u: Option<f64>) -> Result<Vec<f64>, PolyError> {
        self.check_point(x.len(), u.map(|_| ()))?;
        let u = u.unwrap_or(0.0);
        Ok(self.components.iter().map(|p| p.eval_f64(x, u)).collect())
    }

    /// Value at the origin with `u = 0`.
    pub fn value_at_origin(&self) -> Vec<Rational> {
        self.components
            .iter()
            .map(|p| p.coefficient(&Monomial::one(self.n)))
            .collect()
    }

    /// Symbolic Jacobian in the state variables; entry `(i, j)` is `∂f_i/∂x_j`.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial>> {
        self.components
            .iter()
            .map(|p| (0..self.n).map(|j| p.diff_x(j)).collect())
            .collect()
    }

    /// Jacobian at the origin (with `u = 0`) as a rational matrix.
    pub fn jacobian_at_origin(&self) -> Vec<Vec<Rational>> {
        let n = self.n;
        self.components
            .iter()
            .map(|p| {
                (0..n)
                    .map(|j| p.coefficient(&Monomial::var(n, j)))
                    .collect()
            })
            .collect()
    }

    /// Half the Hessian at the origin: `q[i][a][b] = ½ ∂²f_i/∂x_a∂x_b (0)`.
    pub fn half_hessian_at_origin(&self) -> Vec<Vec<Vec<Rational>>> {
        let n = self.n;
        let half = Rational::new(1.into(), 2.into());
        self.components
            .iter()
            .map(|p| {
                let mut q = vec![vec![Rational::zero(); n]; n];
                for a in 0..n {
                    for b in 0..n {
                        let mut px = vec![0u32; n];
                        px[a] += 1;
                        px[b] += 1;
                        let c = p.coefficient(&Monomial::new(px, 0));
                        q[a][b] = if a == b { c } else { c * &half };
                    }
                }
                q
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            components: self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self { n: self.n, components: self.components.iter().map(|p| p.scale(c)).collect() }
    }

    /// Multiplies every component by a scalar polynomial.
    pub fn mul_poly(&self, p: &Polynomial) -> Self {
        Self { n: self.n, components: self.components.iter().map(|c| c * p).collect() }
    }

    pub fn diff_u(&self) -> Self {
        Self { n: self.n, components: self.components.iter().map(Polynomial::diff_u).collect() }
    }

    pub fn at_zero_control(&self) -> Self {
        Self {
            n: self.n,
            components: self.components.iter().map(Polynomial::at_zero_control).collect(),
        }
    }

    /// Drops monomials of total degree (in `x` and `u` jointly) above `m`.
    pub fn taylor_truncate(&self, m: u32) -> Self {
        Self { n: self.n, components: self.components.iter().map(|p| p.truncate(m)).collect() }
    }

    /// Composition with polynomial substitutions for `x` and `u`.
    pub fn substitute(&self, xs: &[Polynomial], u_sub: &Polynomial) -> Self {
        Self {
            n: self.n,
            components: self.components.iter().map(|p| p.substitute(xs, u_sub)).collect(),
        }
    }

    /// Re-expands the field around the equilibrium `(x_e, u_e)` so that the
    /// origin becomes the equilibrium.
    pub fn translate_to_origin(&self, x_e: &[Rational], u_e: &Rational) -> Result<Self, PolyError> {
        if x_e.len() != self.n {
            return Err(PolyError::DimensionMismatch { expected: self.n, got: x_e.len() });
        }
        let residual = self.evaluate_exact(x_e, Some(u_e))?;
        if residual.iter().any(|r| !r.is_zero()) {
            return Err(PolyError::NotEquilibrium {
                residual: residual.iter().map(format_rational).collect(),
            });
        }
        Ok(self.shift(x_e, u_e))
    }

    /// Substitutes `x ↦ x + x_e`, `u ↦ u + u_e` without any equilibrium check.
    pub fn shift(&self, x_e: &[Rational], u_e: &Rational) -> Self {
        let n = self.n;
        let xs: Vec<Polynomial> = (0..n)
            .map(|i| &Polynomial::var(n, i) + &Polynomial::constant(n, x_e[i].clone()))
            .collect();
        let u = &Polynomial::control(n) + &Polynomial::constant(n, u_e.clone());
        self.substitute(&xs, &u)
    }

    /// Directional derivative of a scalar polynomial along this field,
    /// `∇p · X`.
    pub fn lie_derivative(&self, p: &Polynomial) -> Polynomial {
        let mut acc = Polynomial::zero(self.n);
        for (i, c) in self.components.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let dp = p.diff_x(i);
            if !dp.is_zero() {
                acc = &acc + &(&dp * c);
            }
        }
        acc
    }

    pub fn compile(&self) -> CompiledField {
        CompiledField::new(self)
    }

    /// Human-readable component list, e.g. `(u, x1^2)`.
    pub fn display(&self) -> String {
        let parts: Vec<String> = self.components.iter().map(|p| p.to_string()).collect();
        format!("({})", parts.join(", "))
    }
}

/// `[X, Y] = Y'X − X'Y` under the process-wide degree cap.
pub fn lie_bracket(x: &PolyVectorField, y: &PolyVectorField) -> Result<PolyVectorField, PolyError> {
    lie_bracket_capped(x, y, degree_cap())
}

pub fn lie_bracket_capped(
    x: &PolyVectorField,
    y: &PolyVectorField,
    cap: u32,
) -> Result<PolyVectorField, PolyError> {
    if x.n != y.n {
        return Err(PolyError::DimensionMismatch { expected: x.n, got: y.n });
    }
    if x.uses_control() || y.uses_control() {
        return Err(PolyError::ControlDependent);
    }
    let components: Vec<Polynomial> = (0..x.n)
        .map(|i| &x.lie_derivative(&y.components[i]) - &y.lie_derivative(&x.components[i]))
        .collect();
    let out = PolyVectorField { n: x.n, components };
    let degree = out.degree();
    if degree > cap {
        return Err(PolyError::DegreeCap { degree, cap });
    }
    Ok(out)
}

/// `ad_X^k(Y)`: `ad⁰ = Y`, `ad^{k+1} = [X, ad^k]`.
pub fn ad_power(x: &PolyVectorField, y: &PolyVectorField, k: usize) -> Result<PolyVectorField, PolyError> {
    let mut acc = y.clone();
    for _ in 0..k {
        if acc.is_zero() {
            break;
        }
        acc = lie_bracket(x, &acc)?;
    }
    Ok(acc)
}

/// Floating-point evaluator with coefficients converted once, used by the
/// integrators in the inner loop.
#[derive(Debug, Clone)]
pub struct CompiledField {
    n: usize,
    max_px: u32,
    max_pu: u32,
    terms: Vec<Vec<(f64, Vec<(usize, u32)>, u32)>>,
}

impl CompiledField {
    fn new(field: &PolyVectorField) -> Self {
        let mut max_px = 0;
        let mut max_pu = 0;
        let terms = field
            .components
            .iter()
            .map(|p| {
                p.terms()
                    .map(|(m, c)| {
                        let vars: Vec<(usize, u32)> = m
                            .px()
                            .iter()
                            .enumerate()
                            .filter(|(_, &e)| e > 0)
                            .map(|(i, &e)| (i, e))
                            .collect();
                        for &(_, e) in &vars {
                            max_px = max_px.max(e);
                        }
                        max_pu = max_pu.max(m.pu());
                        (to_f64(c), vars, m.pu())
                    })
                    .collect()
            })
            .collect();
        Self { n: field.n, max_px, max_pu, terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Writes `f(x, u)` into `out`.
    pub fn eval_into(&self, x: &[f64], u: f64, out: &mut [f64]) {
        let stride = self.max_px as usize + 1;
        let mut pows = vec![1.0; self.n * stride];
        for i in 0..self.n {
            for e in 1..stride {
                pows[i * stride + e] = pows[i * stride + e - 1] * x[i];
            }
        }
        let mut upows = vec![1.0; self.max_pu as usize + 1];
        for e in 1..upows.len() {
            upows[e] = upows[e - 1] * u;
        }
        for (o, comp) in out.iter_mut().zip(&self.terms) {
            let mut acc = 0.0;
            for (c, vars, pu) in comp {
                let mut t = *c * upows[*pu as usize];
                for &(i, e) in vars {
                    t *= pows[i * stride + e as usize];
                }
                acc += t;
            }
            *o = acc;
        }
    }

    pub fn eval(&self, x: &[f64], u: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.eval_into(x, u, &mut out);
        out
    }
}

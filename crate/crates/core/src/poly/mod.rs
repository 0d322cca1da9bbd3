//! Exact multivariate polynomials in the state variables `x1..xn` and an
//! optional scalar control `u`.
//!
//! Coefficients are arbitrary-precision rationals and the representation is
//! sparse and canonical: terms are kept in a `BTreeMap` under graded
//! lexicographic order and zero coefficients are never stored, so structural
//! equality is polynomial equality.

mod field;

pub use field::{ad_power, lie_bracket, lie_bracket_capped, CompiledField, PolyVectorField};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_traits::{One, Signed, Zero};

use crate::rational::{format_rational, to_f64, Rational};

/// Default total-degree cap for symbolic bracketing.
pub const DEFAULT_DEGREE_CAP: u32 = 24;

/// Environment variable overriding [`DEFAULT_DEGREE_CAP`].
pub const DEGREE_CAP_ENV: &str = "QUADCTRL_DEGREE_CAP";

/// Degree cap in effect for this process (read once from the environment).
pub fn degree_cap() -> u32 {
    static CAP: OnceLock<u32> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(DEGREE_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_DEGREE_CAP)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("field depends on the control; a pure state field is required")]
    ControlDependent,
    #[error("field depends on the control but no control value was supplied")]
    MissingControl,
    #[error("total degree {degree} exceeds the configured cap {cap} (set {env} to raise it)", env = DEGREE_CAP_ENV)]
    DegreeCap { degree: u32, cap: u32 },
    #[error("point is not an equilibrium; residual f(x_e, u_e) = ({})", residual.join(", "))]
    NotEquilibrium { residual: Vec<String> },
}

/// Exponent vector of a monomial `x1^px[0] ... xn^px[n-1] u^pu`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    px: Vec<u32>,
    pu: u32,
}

impl Monomial {
    pub fn new(px: Vec<u32>, pu: u32) -> Self {
        Self { px, pu }
    }

    pub fn one(n: usize) -> Self {
        Self { px: vec![0; n], pu: 0 }
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut px = vec![0; n];
        px[i] = 1;
        Self { px, pu: 0 }
    }

    pub fn px(&self) -> &[u32] {
        &self.px
    }

    pub fn pu(&self) -> u32 {
        self.pu
    }

    pub fn n(&self) -> usize {
        self.px.len()
    }

    /// Total degree in `x` and `u` jointly.
    pub fn degree(&self) -> u32 {
        self.px.iter().sum::<u32>() + self.pu
    }

    pub fn state_degree(&self) -> u32 {
        self.px.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            px: self.px.iter().zip(&other.px).map(|(a, b)| a + b).collect(),
            pu: self.pu + other.pu,
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.px.cmp(&other.px))
            .then_with(|| self.pu.cmp(&other.pu))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Rational) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Monomial::one(n), c);
        p
    }

    /// The coordinate function `x_{i+1}` (zero-based index `i`).
    pub fn var(n: usize, i: usize) -> Self {
        assert!(i < n, "variable index {i} out of range for n = {n}");
        let mut p = Self::zero(n);
        p.add_term(Monomial::var(n, i), Rational::one());
        p
    }

    /// The control variable `u`.
    pub fn control(n: usize) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Monomial::new(vec![0; n], 1), Rational::one());
        p
    }

    /// Builds a polynomial from `(coefficient, monomial)` pairs; repeated
    /// monomials are summed.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Rational, Monomial)>,
    {
        let mut p = Self::zero(n);
        for (c, m) in terms {
            if m.n() != n {
                return Err(PolyError::DimensionMismatch { expected: n, got: m.n() });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    /// Adds `c * m` in place, keeping the no-zero-coefficient invariant.
    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        debug_assert_eq!(m.n(), self.n);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Maximal total degree; `0` for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().next_back().map_or(0, Monomial::degree)
    }

    pub fn uses_control(&self) -> bool {
        self.terms.keys().any(|m| m.pu > 0)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.n);
        }
        Self {
            n: self.n,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    /// Partial derivative with respect to `x_{i+1}`.
    pub fn diff_x(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (m, c) in &self.terms {
            let e = m.px[i];
            if e == 0 {
                continue;
            }
            let mut px = m.px.clone();
            px[i] -= 1;
            out.add_term(Monomial::new(px, m.pu), c * Rational::from_integer(e.into()));
        }
        out
    }

    /// Partial derivative with respect to the control.
    pub fn diff_u(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (m, c) in &self.terms {
            if m.pu == 0 {
                continue;
            }
            out.add_term(
                Monomial::new(m.px.clone(), m.pu - 1),
                c * Rational::from_integer(m.pu.into()),
            );
        }
        out
    }

    /// Restriction to `u = 0`.
    pub fn at_zero_control(&self) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.pu == 0)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Drops every monomial of total degree (in `x` and `u`) above `m`.
    pub fn truncate(&self, max_degree: u32) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() <= max_degree)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Homogeneous part of state degree `deg` among control-free terms.
    pub fn state_homogeneous_part(&self, deg: u32) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.pu == 0 && m.state_degree() == deg)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn eval_exact(&self, x: &[Rational], u: &Rational) -> Rational {
        debug_assert_eq!(x.len(), self.n);
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &e) in x.iter().zip(&m.px) {
                if e > 0 {
                    t *= num_traits::pow(xi.clone(), e as usize);
                }
            }
            if m.pu > 0 {
                t *= num_traits::pow(u.clone(), m.pu as usize);
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64], u: f64) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut t = to_f64(c);
                for (xi, &e) in x.iter().zip(&m.px) {
                    if e > 0 {
                        t *= xi.powi(e as i32);
                    }
                }
                if m.pu > 0 {
                    t *= u.powi(m.pu as i32);
                }
                t
            })
            .sum()
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(self.n, Rational::one());
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Composition: replaces `x_i` by `xs[i]` and `u` by `u_sub`.
    ///
    /// All substituted polynomials must live in the same ambient dimension,
    /// which becomes the dimension of the result.
    pub fn substitute(&self, xs: &[Polynomial], u_sub: &Polynomial) -> Self {
        assert_eq!(xs.len(), self.n, "one substitute per state variable");
        let target_n = u_sub.n;
        let mut x_pows: Vec<Vec<Polynomial>> = xs
            .iter()
            .map(|p| vec![Polynomial::constant(target_n, Rational::one()), p.clone()])
            .collect();
        let mut u_pows = vec![Polynomial::constant(target_n, Rational::one()), u_sub.clone()];
        let mut out = Self::zero(target_n);
        for (m, c) in &self.terms {
            let mut t = Self::constant(target_n, c.clone());
            for (i, &e) in m.px.iter().enumerate() {
                if e > 0 {
                    while x_pows[i].len() <= e as usize {
                        let next = &x_pows[i][x_pows[i].len() - 1] * &xs[i];
                        x_pows[i].push(next);
                    }
                    t = &t * &x_pows[i][e as usize];
                }
            }
            if m.pu > 0 {
                while u_pows.len() <= m.pu as usize {
                    let next = &u_pows[u_pows.len() - 1] * u_sub;
                    u_pows.push(next);
                }
                t = &t * &u_pows[m.pu as usize];
            }
            out = &out + &t;
        }
        out
    }

    fn check_dims(&self, other: &Self) {
        assert_eq!(self.n, other.n, "polynomials live in different dimensions");
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.check_dims(rhs);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.check_dims(rhs);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.check_dims(rhs);
        let mut out = Polynomial::zero(self.n);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            n: self.n,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: Polynomial) -> Polynomial {
        &self + &rhs
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        &self - &rhs
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: Polynomial) -> Polynomial {
        &self * &rhs
    }
}

impl fmt::Display for Polynomial {
    /// Human-readable form such as `2*x1^2 - 1/3*x2*u`, highest degree first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let mut factors = Vec::new();
            for (i, &e) in m.px.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("x{}", i + 1)),
                    _ => factors.push(format!("x{}^{}", i + 1, e)),
                }
            }
            match m.pu {
                0 => {}
                1 => factors.push("u".to_string()),
                e => factors.push(format!("u^{e}")),
            }
            let mag = c.abs();
            let body = if factors.is_empty() {
                format_rational(&mag)
            } else if mag.is_one() {
                factors.join("*")
            } else {
                format!("{}*{}", format_rational(&mag), factors.join("*"))
            };
            match (idx, c.is_negative()) {
                (0, false) => write!(f, "{body}")?,
                (0, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, " + {body}")?,
                (_, true) => write!(f, " - {body}")?,
            }
        }
        Ok(())
    }
}

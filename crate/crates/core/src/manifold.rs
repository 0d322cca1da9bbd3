//! The quadratic manifold M₂, its residual polynomial Q, and the homogeneous
//! second-order ζ-system.

use num_traits::Zero;

use crate::exact::{is_zero_vec, mat_add, mat_mul, mat_vec, vscale, RMat, RVec};
use crate::lie::{LieReport, QuadraticData};
use crate::poly::{ad_power, lie_bracket, Monomial, PolyError, PolyVectorField, Polynomial};
use crate::rational::{frac, Rational};
use crate::system::ControlSystem;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ManifoldError {
    #[error("S1 is trivial (b = 0); there is no manifold to build")]
    Trivial,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("bracket identity fails for {what} at (k, j) = ({k}, {j})")]
    BracketMismatch { what: &'static str, k: usize, j: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticManifold {
    pub n: usize,
    pub d: usize,
    pub basis: Vec<RVec>,
    /// Row `i` gives the linear functional `P_i`.
    pub coordinates: RMat,
    /// `coef[i][j]` (i ≤ j): vector multiplying `P_i P_j` in `G₂`.
    pub coef: Vec<Vec<RVec>>,
    /// `Q(x) = P⊥x − G₂(Px)`, one polynomial per component.
    pub q: PolyVectorField,
    /// `G₂(Px)` as polynomials in `x`.
    pub g2: PolyVectorField,
    pub p: RMat,
    pub p_perp: RMat,
}

fn linear_form(row: &[Rational]) -> Polynomial {
    let n = row.len();
    let mut p = Polynomial::zero(n);
    for (j, c) in row.iter().enumerate() {
        p.add_term(Monomial::var(n, j), c.clone());
    }
    p
}

fn vec_times_poly(v: &[Rational], p: &Polynomial) -> Vec<Polynomial> {
    v.iter().map(|c| p.scale(c)).collect()
}

pub fn build_m2(report: &LieReport) -> Result<QuadraticManifold, ManifoldError> {
    let n = report.n;
    let d = report.d();
    if d == 0 {
        return Err(ManifoldError::Trivial);
    }
    let half = frac(1, 2);
    let mut coef = vec![vec![vec![Rational::zero(); n]; d]; d];
    for i in 0..d {
        for j in i..d {
            let v = report.perp(&mat_vec(&report.lk[i], &report.bk[j]));
            coef[i][j] = if i == j { vscale(&half, &v) } else { v };
        }
    }
    let coordinates = report.s1.coordinate_matrix().clone();
    let pi: Vec<Polynomial> = coordinates.iter().map(|r| linear_form(r)).collect();
    let mut g2 = vec![Polynomial::zero(n); n];
    for i in 0..d {
        for j in i..d {
            if is_zero_vec(&coef[i][j]) {
                continue;
            }
            let pp = &pi[i] * &pi[j];
            for (acc, t) in g2.iter_mut().zip(vec_times_poly(&coef[i][j], &pp)) {
                *acc = &*acc + &t;
            }
        }
    }
    let g2 = PolyVectorField::new(g2).expect("n components");
    let q = PolyVectorField::linear(&report.p_perp).sub(&g2);
    Ok(QuadraticManifold {
        n,
        d,
        basis: report.s1.basis().to_vec(),
        coordinates,
        coef,
        q,
        g2,
        p: report.p.clone(),
        p_perp: report.p_perp.clone(),
    })
}

impl QuadraticManifold {
    /// `G₂` at the point with coordinates `alpha` in the basis.
    pub fn g2_at(&self, alpha: &[Rational]) -> RVec {
        let mut out = vec![Rational::zero(); self.n];
        for i in 0..self.d {
            for j in i..self.d {
                let c = &alpha[i] * &alpha[j];
                for (o, v) in out.iter_mut().zip(&self.coef[i][j]) {
                    *o += &c * v;
                }
            }
        }
        out
    }

    /// `Q(p + G₂(p))` as polynomials in the `d` coordinates of `p`; identically
    /// zero for a consistent construction.
    pub fn graph_residual(&self) -> Vec<Polynomial> {
        let d = self.d;
        let alpha: Vec<Polynomial> = (0..d).map(|i| Polynomial::var(d, i)).collect();
        let mut point = vec![Polynomial::zero(d); self.n];
        for (a, b) in alpha.iter().zip(&self.basis) {
            for (pt, c) in point.iter_mut().zip(b) {
                *pt = &*pt + &a.scale(c);
            }
        }
        for i in 0..d {
            for j in i..d {
                let aa = &alpha[i] * &alpha[j];
                for (pt, c) in point.iter_mut().zip(&self.coef[i][j]) {
                    *pt = &*pt + &aa.scale(c);
                }
            }
        }
        let u = Polynomial::zero(d);
        self.q.components().iter().map(|qc| qc.substitute(&point, &u)).collect()
    }

    pub fn graph_identity_holds(&self) -> bool {
        self.graph_residual().iter().all(Polynomial::is_zero)
    }

    /// Degree-1 part of `G₂`; empty for tangency at the origin.
    pub fn g2_linear_part_is_zero(&self) -> bool {
        self.g2.components().iter().all(|p| p.truncate(1).is_zero())
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.q.evaluate(x, None).expect("Q is a pure state polynomial")
    }

    /// Human-readable equations `P⊥x = G₂(Px)` component by component.
    pub fn equations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let lhs = PolyVectorField::linear(&self.p_perp);
        for i in 0..self.n {
            let l = lhs.component(i);
            let r = self.g2.component(i);
            if l.is_zero() && r.is_zero() {
                continue;
            }
            out.push(format!("{l} = {r}"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogeneousSystem {
    pub g0: PolyVectorField,
    pub g1: PolyVectorField,
    /// Coefficient of `u²` in the ζ-dynamics, `½P⊥d₀`.
    pub drift_u2: RVec,
    pub well_prepared: bool,
}

pub fn build_homogeneous(qd: &QuadraticData, report: &LieReport) -> HomogeneousSystem {
    let n = qd.n;
    let p = &report.p;
    let pp = &report.p_perp;
    let lin = mat_add(&mat_mul(&qd.h0, p), &mat_mul(pp, &qd.h0));
    let mut g0 = PolyVectorField::linear(&lin);
    let pz: Vec<Polynomial> = p.iter().map(|r| linear_form(r)).collect();
    // Q₀(Pζ, Pζ) component i = Σ_{a,c} q0[i][a][c] (Pζ)_a (Pζ)_c, then project.
    let mut quad = vec![Polynomial::zero(n); n];
    for (i, qi) in qd.q0.iter().enumerate() {
        for a in 0..n {
            for c in 0..n {
                if qi[a][c].is_zero() {
                    continue;
                }
                quad[i] = &quad[i] + &(&pz[a] * &pz[c]).scale(&qi[a][c]);
            }
        }
    }
    let mut proj = vec![Polynomial::zero(n); n];
    for i in 0..n {
        for (k, q) in quad.iter().enumerate() {
            if !pp[i][k].is_zero() {
                proj[i] = &proj[i] + &q.scale(&pp[i][k]);
            }
        }
    }
    g0 = g0.add(&PolyVectorField::new(proj).expect("n components"));
    let g1 = PolyVectorField::constant(&qd.b).add(&PolyVectorField::linear(&mat_mul(&mat_mul(pp, &qd.h1), p)));
    let drift_u2 = vscale(&frac(1, 2), &report.perp(&qd.d0));
    let well_prepared = is_zero_vec(&report.bk[report.d().min(report.kmax)]);
    HomogeneousSystem { g0, g1, drift_u2, well_prepared }
}

impl HomogeneousSystem {
    /// The ζ-system as a control system with right-hand side
    /// `g₀ + u g₁ + u² ½P⊥d₀`.
    pub fn as_system(&self) -> ControlSystem {
        if is_zero_vec(&self.drift_u2) {
            return ControlSystem::affine("zeta", self.g0.clone(), self.g1.clone()).expect("origin is an equilibrium");
        }
        let n = self.g0.n();
        let u = Polynomial::control(n);
        let u2 = PolyVectorField::constant(&self.drift_u2).mul_poly(&u.pow(2));
        let f = self.g0.add(&self.g1.mul_poly(&u)).add(&u2);
        ControlSystem::nonlinear("zeta", f).expect("origin is an equilibrium")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZetaBracketReport {
    pub kmax: usize,
    pub first_order_checked: usize,
    pub second_order_checked: usize,
}

/// Checks `ad^k_{g₀}(g₁)(ζ) = b_k + P⊥L_kPζ` and
/// `[ad^k, ad^j](ζ) = P⊥(L_j b_k − L_k b_j)` symbolically for `k, j ≤ kmax`.
pub fn verify_zeta_brackets(
    hs: &HomogeneousSystem,
    report: &LieReport,
    kmax: usize,
) -> Result<ZetaBracketReport, ManifoldError> {
    let kmax = kmax.min(report.kmax);
    let mut ads = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let ad = ad_power(&hs.g0, &hs.g1, k)?;
        let lin = mat_mul(&mat_mul(&report.p_perp, &report.lk[k]), &report.p);
        let expected = PolyVectorField::constant(&report.bk[k]).add(&PolyVectorField::linear(&lin));
        if ad != expected {
            return Err(ManifoldError::BracketMismatch { what: "ad^k(g1)", k, j: k });
        }
        ads.push(ad);
    }
    let mut second = 0;
    for k in 0..=kmax {
        for j in (k + 1)..=kmax {
            let br = lie_bracket(&ads[k], &ads[j])?;
            let expected = PolyVectorField::constant(&report.perp(&report.second_order_bracket(k, j)));
            if br != expected {
                return Err(ManifoldError::BracketMismatch { what: "[ad^k, ad^j]", k, j });
            }
            second += 1;
        }
    }
    Ok(ZetaBracketReport { kmax, first_order_checked: kmax + 1, second_order_checked: second })
}

/// `dQ/dt − P⊥H₀Q` along the ζ-dynamics, as polynomials in `(ζ, u)`.
/// Vanishes identically in the invariant-manifold case.
pub fn q_transport_defect(hs: &HomogeneousSystem, m: &QuadraticManifold, h0: &RMat) -> Vec<Polynomial> {
    let rhs = hs.as_system().full_field();
    let n = m.n;
    let pph0 = mat_mul(&m.p_perp, h0);
    let lifted = m.q.components();
    (0..n)
        .map(|i| {
            let mut dq = Polynomial::zero(n);
            for (a, comp) in rhs.components().iter().enumerate() {
                let dqa = lifted[i].diff_x(a);
                if !dqa.is_zero() {
                    dq = &dq + &(&dqa * comp);
                }
            }
            let mut transport = Polynomial::zero(n);
            for (k, q) in lifted.iter().enumerate() {
                if !pph0[i][k].is_zero() {
                    transport = &transport + &q.scale(&pph0[i][k]);
                }
            }
            &dq - &transport
        })
        .collect()
}

//! Linear static feedback bringing `(H₀, b)` to the nilpotent chain form
//! `𝓗₀^d b = 0`, and the induced transformation of the full system.

use num_traits::One;

use crate::exact::{
    from_columns, inverse, is_zero_vec, mat_add, mat_mul, mat_pow, mat_vec, outer, transpose, zero_vec, RMat,
    RVec,
};
use crate::lie::{classify, LieReport, QuadraticData, Verdict};
use crate::poly::{Monomial, PolyError, PolyVectorField, Polynomial};
use crate::rational::Rational;
use crate::system::{ControlSystem, Dynamics, SystemError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BrunovskyError {
    #[error("b = 0: the linearization has no controllable direction")]
    NoControl,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("feedback changed the verdict: {before} before, {after} after")]
    VerdictChanged { before: String, after: String },
    #[error("P⊥W_{k} differs after feedback")]
    BracketChanged { k: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackTransform {
    pub d: usize,
    /// `α₁..α_d` of `χ(X) = X^d + α₁X^{d−1} + … + α_d`.
    pub alpha: RVec,
    pub beta: RVec,
    pub r: RMat,
    pub r_inv: RMat,
    /// `𝓗₀ = H₀ + bβᵀ`.
    pub h0_new: RMat,
}

impl FeedbackTransform {
    /// Upper-left `d × d` block of `R H₀ R⁻¹`.
    pub fn companion_block(&self, h0: &RMat) -> RMat {
        let full = mat_mul(&mat_mul(&self.r, h0), &self.r_inv);
        full.iter().take(self.d).map(|row| row[..self.d].to_vec()).collect()
    }

    pub fn is_identity(&self) -> bool {
        is_zero_vec(&self.beta)
    }
}

pub fn build_transform(qd: &QuadraticData, report: &LieReport) -> Result<FeedbackTransform, BrunovskyError> {
    let n = qd.n;
    let d = report.d();
    if d == 0 {
        return Err(BrunovskyError::NoControl);
    }
    // H₀^i b = (−1)^i b_i; write b_d in the Krylov basis and flip signs.
    let a = report.s1.coordinates(&report.bk[d]);
    let sign = |i: usize| if i % 2 == 0 { Rational::one() } else { -Rational::one() };
    let c: RVec = (0..d).map(|i| sign(d + i) * &a[i]).collect();
    let mut alpha = zero_vec(d + 1);
    alpha[0] = Rational::one();
    for i in 0..d {
        alpha[d - i] = -c[i].clone();
    }
    let powers: Vec<RVec> = (0..d).map(|i| mat_vec(&mat_pow(&qd.h0, i), &qd.b)).collect();
    let mut cols: Vec<RVec> = (1..=d)
        .map(|j| {
            (0..j).fold(zero_vec(n), |acc, i| {
                let term: RVec = powers[j - 1 - i].iter().map(|x| x * &alpha[i]).collect();
                acc.iter().zip(&term).map(|(p, q)| p + q).collect()
            })
        })
        .collect();
    cols.extend(report.s1.complement_basis());
    let r_inv = from_columns(&cols, n);
    let r = inverse(&r_inv).expect("Krylov basis extended by its complement is invertible");
    let mut alpha_full = zero_vec(n);
    alpha_full[..d].clone_from_slice(&alpha[1..]);
    let beta = mat_vec(&transpose(&r), &alpha_full);
    let h0_new = mat_add(&qd.h0, &outer(&qd.b, &beta));
    Ok(FeedbackTransform { d, alpha: alpha[1..].to_vec(), beta, r, r_inv, h0_new })
}

/// `𝓗₀^d b`, which vanishes for a well-prepared pair.
pub fn nilpotency_residual(t: &FeedbackTransform, b: &[Rational]) -> RVec {
    mat_vec(&mat_pow(&t.h0_new, t.d), b)
}

/// `g(x, v) = f(x, v + ⟨β, x⟩)`.
pub fn transform_system(sys: &ControlSystem, beta: &[Rational]) -> Result<ControlSystem, BrunovskyError> {
    let n = sys.n();
    let mut lin = Polynomial::zero(n);
    for (i, b) in beta.iter().enumerate() {
        lin.add_term(Monomial::var(n, i), b.clone());
    }
    let out = match sys.dynamics() {
        Dynamics::Affine { f0, f1 } => {
            let g0 = f0.add(&f1.mul_poly(&lin));
            check_cap(&g0)?;
            ControlSystem::affine(sys.name(), g0, f1.clone())?
        }
        Dynamics::Nonlinear { f } => {
            let xs: Vec<Polynomial> = (0..n).map(|i| Polynomial::var(n, i)).collect();
            let g = f.substitute(&xs, &(&Polynomial::control(n) + &lin));
            check_cap(&g)?;
            ControlSystem::nonlinear(sys.name(), g)?
        }
    };
    Ok(out)
}

fn check_cap(f: &PolyVectorField) -> Result<(), PolyError> {
    let cap = crate::poly::degree_cap();
    let degree = f.degree();
    if degree > cap {
        return Err(PolyError::DegreeCap { degree, cap });
    }
    Ok(())
}

/// Applies the Brunovský feedback, returning the well-prepared system.
pub fn well_prepared(sys: &ControlSystem) -> Result<(ControlSystem, FeedbackTransform), BrunovskyError> {
    let qd = QuadraticData::extract(sys);
    let report = LieReport::new(&qd, 2 * qd.n);
    let t = build_transform(&qd, &report)?;
    let g = if t.is_identity() { sys.clone() } else { transform_system(sys, &t.beta)? };
    Ok((g, t))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvarianceReport {
    pub verdict: String,
    pub k: Option<usize>,
    pub perp_w_before: Option<RVec>,
    pub perp_w_after: Option<RVec>,
}

/// Compares verdicts, drift orders and `P⊥W_k` between a system and its
/// feedback transform.
pub fn verify_feedback_invariance(
    sys: &ControlSystem,
    transformed: &ControlSystem,
) -> Result<InvarianceReport, BrunovskyError> {
    let (_, r0, c0) = classify(sys);
    let (_, r1, c1) = classify(transformed);
    let same_kind = std::mem::discriminant(&c0.verdict) == std::mem::discriminant(&c1.verdict);
    if !same_kind || c0.drift_k() != c1.drift_k() {
        return Err(BrunovskyError::VerdictChanged {
            before: describe(&c0.verdict),
            after: describe(&c1.verdict),
        });
    }
    let (before, after) = match c0.verdict {
        Verdict::Drift { k, .. } => {
            let a = r0.perp(r0.w_k(k));
            let b = r1.perp(r1.w_k(k));
            if a != b {
                return Err(BrunovskyError::BracketChanged { k });
            }
            (Some(a), Some(b))
        }
        Verdict::DriftOrderZero { ref direction, .. } => {
            let other = c1.verdict.direction();
            if other != Some(direction) {
                return Err(BrunovskyError::BracketChanged { k: 0 });
            }
            (Some(direction.clone()), other.cloned())
        }
        _ => (None, None),
    };
    Ok(InvarianceReport {
        verdict: c0.verdict.label().to_string(),
        k: c0.drift_k(),
        perp_w_before: before,
        perp_w_after: after,
    })
}

fn describe(v: &Verdict) -> String {
    match v.drift_order() {
        Some(k) => format!("{} (k = {k})", v.label()),
        None => v.label().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;
    use num_traits::Zero;

    #[test]
    fn scalar_unstable_feedback() {
        let sys = crate::fixtures::system("scalar_unstable").unwrap();
        let (g, t) = well_prepared(&sys).unwrap();
        assert_eq!(t.alpha, vec![int(-1)]);
        assert_eq!(t.beta, vec![int(-1)]);
        assert_eq!(t.h0_new, vec![vec![Rational::zero()]]);
        assert_eq!(QuadraticData::extract(&g).h0, vec![vec![Rational::zero()]]);
    }

    #[test]
    fn rejects_zero_b() {
        let f = PolyVectorField::zero(1);
        let sys = ControlSystem::affine("z", f.clone(), f).unwrap();
        let qd = QuadraticData::extract(&sys);
        let r = LieReport::new(&qd, 2);
        assert_eq!(build_transform(&qd, &r), Err(BrunovskyError::NoControl));
    }
}

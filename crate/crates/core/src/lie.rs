//! Quadratic data at the origin, the Lie spaces S1 and S2, and the
//! classification of a system by its quadratic behaviour.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::exact::{is_zero_vec, mat_mul, mat_sub, mat_vec, vneg, vsub, RMat, RVec, Subspace};
use crate::rational::{int, Rational};
use crate::system::{ControlSystem, SystemKind};

/// Second-order Taylor data of a system at the origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticData {
    pub n: usize,
    pub kind: SystemKind,
    pub h0: RMat,
    pub b: RVec,
    pub h1: RMat,
    /// `q0[i][a][c] = ½ ∂²(f₀)_i / ∂x_a ∂x_c (0)`, symmetric in `(a, c)`.
    pub q0: Vec<RMat>,
    pub d0: RVec,
}

impl QuadraticData {
    pub fn extract(sys: &ControlSystem) -> Self {
        let f0 = sys.drift();
        let f1 = sys.control_field();
        Self {
            n: sys.n(),
            kind: sys.kind(),
            h0: f0.jacobian_at_origin(),
            b: f1.value_at_origin(),
            h1: f1.jacobian_at_origin(),
            q0: f0.half_hessian_at_origin(),
            d0: sys.d0(),
        }
    }

    /// `Q₀(h, g)`.
    pub fn q0_apply(&self, h: &[Rational], g: &[Rational]) -> RVec {
        self.q0.iter().map(|q| crate::exact::dot(h, &mat_vec(q, g))).collect()
    }

    /// Matrix of `g ↦ Q₀(h, g)`.
    pub fn q0_partial(&self, h: &[Rational]) -> RMat {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|c| (0..n).fold(Rational::zero(), |acc, a| acc + &h[a] * &self.q0[i][a][c])).collect())
            .collect()
    }

    pub fn gamma(&self) -> usize {
        match self.kind {
            SystemKind::Affine => 1,
            SystemKind::Nonlinear => 0,
        }
    }
}

/// `b_k = (−H₀)^k b` for `k = 0..=kmax`.
pub fn krylov_vectors(h0: &RMat, b: &[Rational], kmax: usize) -> Vec<RVec> {
    let mut out = vec![b.to_vec()];
    for k in 0..kmax {
        let next = vneg(&mat_vec(h0, &out[k]));
        out.push(next);
    }
    out
}

/// `L₀ = H₁`, `L_{k+1} = L_k H₀ − H₀ L_k − 2 Q₀(b_k, ·)` for `k = 0..=kmax`.
pub fn compute_lk(qd: &QuadraticData, bk: &[RVec], kmax: usize) -> Vec<RMat> {
    let mut out = vec![qd.h1.clone()];
    let two = int(2);
    for k in 0..kmax {
        let l = &out[k];
        let comm = mat_sub(&mat_mul(l, &qd.h0), &mat_mul(&qd.h0, l));
        let q = qd.q0_partial(&bk[k]);
        let next: RMat = comm
            .iter()
            .zip(&q)
            .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - &two * y).collect())
            .collect();
        out.push(next);
    }
    out
}

/// Everything derived from the quadratic data: Krylov vectors, `L_k`, S1 and
/// the critical brackets `W_k`.
#[derive(Debug, Clone)]
pub struct LieReport {
    pub n: usize,
    pub kmax: usize,
    pub bk: Vec<RVec>,
    pub lk: Vec<RMat>,
    pub s1: Subspace,
    /// Indices of the Krylov vectors forming the S1 basis (always `0..d`).
    pub s1_indices: Vec<usize>,
    pub p: RMat,
    pub p_perp: RMat,
    /// `w[k-1] = W_k = L_k b_{k−1} − L_{k−1} b_k` for `k = 1..=kmax`.
    pub w: Vec<RVec>,
}

impl LieReport {
    /// Builds the report with `b_k`, `L_k` up to `kmax` (at least `2n`).
    pub fn new(qd: &QuadraticData, kmax: usize) -> Self {
        let n = qd.n;
        let kmax = kmax.max(2 * n).max(1);
        let bk = krylov_vectors(&qd.h0, &qd.b, kmax);
        let lk = compute_lk(qd, &bk, kmax);
        let (s1, s1_indices) = compute_s1(qd);
        let p = s1.projector();
        let p_perp = s1.projector_perp();
        let w = (1..=kmax)
            .map(|k| vsub(&mat_vec(&lk[k], &bk[k - 1]), &mat_vec(&lk[k - 1], &bk[k])))
            .collect();
        Self { n, kmax, bk, lk, s1, s1_indices, p, p_perp, w }
    }

    pub fn d(&self) -> usize {
        self.s1.dim()
    }

    pub fn kalman(&self) -> bool {
        self.d() == self.n
    }

    pub fn w_k(&self, k: usize) -> &RVec {
        &self.w[k - 1]
    }

    /// `[ad^k_{f₀}(f₁), ad^j_{f₀}(f₁)](0) = L_j b_k − L_k b_j`.
    pub fn second_order_bracket(&self, k: usize, j: usize) -> RVec {
        vsub(&mat_vec(&self.lk[j], &self.bk[k]), &mat_vec(&self.lk[k], &self.bk[j]))
    }

    pub fn perp(&self, v: &[Rational]) -> RVec {
        mat_vec(&self.p_perp, v)
    }
}

/// Krylov span of `(−H₀)^k b`, `k ≤ n−1`, with the basis made of the first
/// `d` vectors (which are independent whenever any later vector adds rank).
pub fn compute_s1(qd: &QuadraticData) -> (Subspace, Vec<usize>) {
    let n = qd.n;
    let bk = krylov_vectors(&qd.h0, &qd.b, n.saturating_sub(1));
    let mut basis: Vec<RVec> = Vec::new();
    let mut idx = Vec::new();
    for (k, v) in bk.iter().enumerate() {
        let trial = Subspace::span(n, &basis);
        if trial.contains(v) {
            break;
        }
        basis.push(v.clone());
        idx.push(k);
    }
    (Subspace::span(n, &basis), idx)
}

/// Span of `(−H₀)^i (L_j b_k − L_k b_j)` over `i ≤ n−1` and `j, k ≤ kmax`.
pub fn compute_s2(qd: &QuadraticData, report: &LieReport, kmax: usize) -> Subspace {
    let n = qd.n;
    let kmax = kmax.min(report.kmax);
    let mut gens: Vec<RVec> = Vec::new();
    for k in 0..=kmax {
        for j in (k + 1)..=kmax {
            let mut v = report.second_order_bracket(k, j);
            for _ in 0..n {
                if is_zero_vec(&v) {
                    break;
                }
                gens.push(v.clone());
                v = vneg(&mat_vec(&qd.h0, &v));
            }
        }
    }
    let mut basis: Vec<RVec> = Vec::new();
    for g in gens {
        if basis.len() == n {
            break;
        }
        if !Subspace::span(n, &basis).contains(&g) {
            basis.push(g);
        }
    }
    Subspace::span(n, &basis)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    LinearlyControllable,
    InvariantManifold,
    /// Nonlinear system with `d₀ ∉ S1`; the drift points along `P⊥d₀`.
    DriftOrderZero { d0: RVec, direction: RVec },
    /// Quadratic drift of order `k` along `d_k = −P⊥W_k`.
    Drift { k: usize, dk: RVec },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::LinearlyControllable => "linearly_controllable",
            Verdict::InvariantManifold => "invariant_manifold",
            Verdict::DriftOrderZero { .. } => "drift_order_zero",
            Verdict::Drift { .. } => "drift",
        }
    }

    /// Drift order, `0` for order-zero drift.
    pub fn drift_order(&self) -> Option<usize> {
        match self {
            Verdict::DriftOrderZero { .. } => Some(0),
            Verdict::Drift { k, .. } => Some(*k),
            _ => None,
        }
    }

    /// The signed drift direction, if any.
    pub fn direction(&self) -> Option<&RVec> {
        match self {
            Verdict::DriftOrderZero { direction, .. } => Some(direction),
            Verdict::Drift { dk, .. } => Some(dk),
            _ => None,
        }
    }

    pub fn is_drift(&self) -> bool {
        self.drift_order().is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormThreshold {
    /// Sobolev order `m` of `W^{m,∞}`.
    pub order: i64,
    pub statement: String,
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub verdict: Verdict,
    pub kind: SystemKind,
    pub n: usize,
    pub d: usize,
    pub threshold: Option<NormThreshold>,
}

impl Classification {
    pub fn drift_k(&self) -> Option<usize> {
        self.verdict.drift_order()
    }
}

fn threshold(kind: SystemKind, k: usize) -> NormThreshold {
    let k = k as i64;
    let order = match kind {
        SystemKind::Nonlinear => 2 * k,
        SystemKind::Affine => 2 * k - 3,
    };
    NormThreshold {
        order,
        statement: format!(
            "not small-time locally controllable with controls small in W^{{{order},inf}}; \
             the state drifts with respect to the invariant manifold"
        ),
    }
}

/// Applies the quadratic alternative using exact S1 membership.
pub fn classify_with(qd: &QuadraticData, report: &LieReport) -> Classification {
    let d = report.d();
    let verdict = if report.kalman() {
        Verdict::LinearlyControllable
    } else if qd.kind == SystemKind::Nonlinear && !report.s1.contains(&qd.d0) {
        Verdict::DriftOrderZero { d0: qd.d0.clone(), direction: report.perp(&qd.d0) }
    } else {
        (1..=d)
            .find(|&k| !report.s1.contains(report.w_k(k)))
            .map(|k| Verdict::Drift { k, dk: vneg(&report.perp(report.w_k(k))) })
            .unwrap_or(Verdict::InvariantManifold)
    };
    let threshold = verdict.drift_order().map(|k| threshold(qd.kind, k));
    Classification { verdict, kind: qd.kind, n: qd.n, d, threshold }
}

/// Full pipeline: extract data, build the report and classify.
pub fn classify(sys: &ControlSystem) -> (QuadraticData, LieReport, Classification) {
    let qd = QuadraticData::extract(sys);
    let report = LieReport::new(&qd, 2 * qd.n);
    let c = classify_with(&qd, &report);
    (qd, report, c)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KrenerError {
    #[error("bracket [ad^{a}, ad^{b}](0) should lie in S1 but does not")]
    NotInS1 { a: usize, b: usize },
    #[error("bracket [ad^{a}, ad^{b}](0) should leave S1 along ±P⊥W_k")]
    NotCritical { a: usize, b: usize },
    #[error("Krylov vectors b_0..b_{} are dependent", .k - 1)]
    Dependent { k: usize },
    #[error("drift order {k} out of range 1..={max}")]
    BadOrder { k: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignRecord {
    pub l: usize,
    /// `s` such that `P⊥[ad^l, ad^{2k−1−l}](0) = s·P⊥W_k`.
    pub observed: i8,
    /// Sign predicted by alternation, `(−1)^{k−1−l}`.
    pub alternating: i8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KrenerReport {
    pub k: usize,
    /// Pairs `(a, b)` with `a < b`, `a + b ≤ 2k−2` that were checked.
    pub checked_pairs: Vec<(usize, usize)>,
    pub signs: Vec<SignRecord>,
    pub independent: bool,
}

/// Cross-checks the structure of brackets around the first violating order.
pub fn krener_checks(report: &LieReport, k: usize) -> Result<KrenerReport, KrenerError> {
    if k == 0 || 2 * k - 1 > report.kmax {
        return Err(KrenerError::BadOrder { k, max: report.kmax.div_ceil(2) });
    }
    let mut checked_pairs = Vec::new();
    for total in 1..=(2 * k).saturating_sub(2) {
        for a in 0..=total / 2 {
            let b = total - a;
            if a == b {
                continue;
            }
            if !report.s1.contains(&report.second_order_bracket(a, b)) {
                return Err(KrenerError::NotInS1 { a, b });
            }
            checked_pairs.push((a, b));
        }
    }
    let target = report.perp(report.w_k(k));
    let neg_target = vneg(&target);
    let mut signs = Vec::new();
    for l in 0..=(2 * k - 1) {
        let m = 2 * k - 1 - l;
        let v = report.perp(&report.second_order_bracket(l, m));
        let observed = if is_zero_vec(&target) {
            return Err(KrenerError::NotCritical { a: l, b: m });
        } else if v == target {
            1
        } else if v == neg_target {
            -1
        } else {
            return Err(KrenerError::NotCritical { a: l, b: m });
        };
        let alternating = if (k - 1 + l) % 2 == 0 { 1 } else { -1 };
        signs.push(SignRecord { l, observed, alternating });
    }
    let independent = crate::exact::rank(&report.bk[..k]) == k;
    if !independent {
        return Err(KrenerError::Dependent { k });
    }
    Ok(KrenerReport { k, checked_pairs, signs, independent })
}

mod common;

use common::{random_affine, random_chain, rng};
use quadctrl::exact::{is_zero_vec, mat_vec, unit, RVec, Subspace};
use quadctrl::fixtures::{self, system};
use quadctrl::lie::{
    classify, compute_lk, compute_s1, compute_s2, krener_checks, krylov_vectors, LieReport, QuadraticData, Verdict,
};
use quadctrl::poly::{ad_power, lie_bracket, Monomial, PolyVectorField, Polynomial};
use quadctrl::rational::{frac, int, Rational};
use quadctrl::system::{ControlSystem, SystemKind};

fn v(xs: &[i64]) -> RVec {
    xs.iter().map(|&x| int(x)).collect()
}

fn zeros(n: usize) -> Vec<RVec> {
    vec![v(&vec![0; n]); n]
}

/// `Q₀(h, g)` from the tensor, written out directly.
fn q0(qd: &QuadraticData, h: &[Rational], g: &[Rational]) -> RVec {
    let n = qd.n;
    (0..n)
        .map(|i| {
            let mut acc = int(0);
            for a in 0..n {
                for c in 0..n {
                    acc += &qd.q0[i][a][c] * &h[a] * &g[c];
                }
            }
            acc
        })
        .collect()
}

fn report(sys: &ControlSystem) -> (QuadraticData, LieReport) {
    let qd = QuadraticData::extract(sys);
    let r = LieReport::new(&qd, 2 * qd.n);
    (qd, r)
}

#[test]
fn extract_easy_drift() {
    let qd = QuadraticData::extract(&system("easy_drift").unwrap());
    assert_eq!(qd.h0, zeros(2));
    assert_eq!(qd.b, v(&[1, 0]));
    assert_eq!(qd.h1, zeros(2));
    assert_eq!(qd.d0, v(&[0, 0]));
    let (h, g) = (v(&[3, 5]), v(&[-2, 7]));
    assert_eq!(q0(&qd, &h, &g), v(&[0, -6]));
    assert_eq!(qd.q0_apply(&h, &g), v(&[0, -6]));
}

#[test]
fn extract_competition() {
    let qd = QuadraticData::extract(&system("competition").unwrap());
    let mut h0 = zeros(3);
    h0[1][0] = int(1);
    assert_eq!(qd.h0, h0);
    for (h, g) in [(v(&[1, 2, 3]), v(&[4, 5, 6])), (v(&[0, 1, 0]), v(&[0, 1, 0]))] {
        let expected = vec![int(0), int(0), &h[0] * &g[0] - &h[1] * &g[1]];
        assert_eq!(qd.q0_apply(&h, &g), expected);
    }
}

#[test]
fn quadratic_form_is_symmetric() {
    let mut r = rng(11);
    for name in fixtures::NAMES.iter().copied() {
        let qd = QuadraticData::extract(&system(name).unwrap());
        for i in 0..qd.n {
            for j in 0..qd.n {
                let (ei, ej) = (unit(qd.n, i), unit(qd.n, j));
                assert_eq!(qd.q0_apply(&ei, &ej), qd.q0_apply(&ej, &ei), "{name}");
            }
        }
        if qd.kind == SystemKind::Affine {
            assert!(is_zero_vec(&qd.d0));
        }
    }
    for _ in 0..20 {
        let qd = QuadraticData::extract(&random_affine(&mut r, 3));
        let (h, g) = (v(&[1, -2, 3]), v(&[2, 0, -1]));
        assert_eq!(qd.q0_apply(&h, &g), qd.q0_apply(&g, &h));
    }
}

#[test]
fn extract_order_zero_drift() {
    for (param, d0) in [("1", v(&[0, 2])), ("1/2", v(&[0, 1])), ("-3", v(&[0, -6]))] {
        let qd = QuadraticData::extract(&system(&format!("u2_drift:{param}")).unwrap());
        assert_eq!(qd.d0, d0);
        assert_eq!(qd.gamma(), 0);
    }
}

#[test]
fn s1_examples() {
    let qd = QuadraticData::extract(&system("competition").unwrap());
    let (s1, idx) = compute_s1(&qd);
    assert_eq!(s1.dim(), 2);
    assert_eq!(idx, vec![0, 1]);
    assert_eq!(s1.basis(), &[v(&[1, 0, 0]), v(&[0, -1, 0])]);

    let (s1, _) = compute_s1(&QuadraticData::extract(&system("integrator1d").unwrap()));
    assert_eq!(s1.dim(), 1);
    let (_, r) = report(&system("integrator1d").unwrap());
    assert!(r.kalman());

    let f1 = PolyVectorField::new(vec![Polynomial::var(1, 0)]).unwrap();
    let sys = ControlSystem::affine("b0", PolyVectorField::zero(1), f1).unwrap();
    let (s1, idx) = compute_s1(&QuadraticData::extract(&sys));
    assert_eq!(s1.dim(), 0);
    assert!(idx.is_empty());
}

#[test]
fn lk_examples() {
    let (_, r) = report(&system("easy_drift").unwrap());
    assert_eq!(r.lk[0], zeros(2));
    assert_eq!(r.lk[1], vec![v(&[0, 0]), v(&[-2, 0])]);
    let (_, r) = report(&system("double_integrator").unwrap());
    assert!(r.lk.iter().all(|l| *l == zeros(2)));
}

/// `ad^k_{f₀}(f₁)` agrees with `b_k + L_k x` up to degree one.
#[test]
fn lk_matches_symbolic_brackets() {
    let mut r = rng(12);
    let mut systems: Vec<ControlSystem> = fixtures::NAMES.iter().map(|n| system(n).unwrap()).collect();
    systems.retain(|s| s.kind() == SystemKind::Affine);
    for n in 1..=4 {
        for _ in 0..8 {
            systems.push(random_affine(&mut r, n));
        }
    }
    for sys in &systems {
        let (qd, rep) = report(sys);
        let (f0, f1) = (sys.drift(), sys.control_field());
        let kmax = (2 * qd.n).min(5);
        for k in 0..=kmax {
            let ad = ad_power(&f0, &f1, k).unwrap();
            let lin = PolyVectorField::constant(&rep.bk[k]).add(&PolyVectorField::linear(&rep.lk[k]));
            assert_eq!(ad.taylor_truncate(1), lin, "{} k = {k}", sys.name());
        }
    }
}

#[test]
fn lk_recursion_matches_report() {
    let qd = QuadraticData::extract(&system("sussmann").unwrap());
    let bk = krylov_vectors(&qd.h0, &qd.b, 6);
    let rep = LieReport::new(&qd, 6);
    assert_eq!(compute_lk(&qd, &bk, 6), rep.lk);
}

#[test]
fn second_order_bracket_examples() {
    let (_, r) = report(&system("easy_drift").unwrap());
    assert_eq!(r.second_order_bracket(0, 1), v(&[0, -2]));
    for m in 0..4 {
        assert!(is_zero_vec(&r.second_order_bracket(m, m)));
    }
    let (_, r) = report(&system("sussmann").unwrap());
    assert_eq!(r.second_order_bracket(0, 3), v(&[0, 0, 2]));
}

#[test]
fn second_order_bracket_matches_symbolic() {
    let mut r = rng(13);
    let mut systems: Vec<ControlSystem> = vec![system("sussmann").unwrap(), system("bilinear").unwrap()];
    for n in 2..=4 {
        for _ in 0..6 {
            systems.push(random_affine(&mut r, n));
            systems.push(random_chain(&mut r, n));
        }
    }
    for sys in &systems {
        let (_, rep) = report(sys);
        let ads: Vec<PolyVectorField> = (0..=4).map(|k| ad_power(&sys.drift(), &sys.control_field(), k).unwrap()).collect();
        for k in 0..=4 {
            for j in 0..=4 {
                let direct = lie_bracket(&ads[k], &ads[j]).unwrap().value_at_origin();
                assert_eq!(direct, rep.second_order_bracket(k, j), "{} ({k},{j})", sys.name());
            }
        }
    }
}

#[test]
fn s2_examples() {
    let sys = system("easy_drift").unwrap();
    let (qd, r) = report(&sys);
    let s2 = compute_s2(&qd, &r, 4);
    assert_eq!(s2.dim(), 1);
    assert!(s2.contains(&v(&[0, 1])));

    let sys = system("toy_manifold").unwrap();
    let (qd, r) = report(&sys);
    assert!(r.s1.contains_subspace(&compute_s2(&qd, &r, 4)));
    assert_eq!(r.s1.basis(), &[v(&[1, 0])]);

    let sys = system("double_integrator").unwrap();
    let (qd, r) = report(&sys);
    assert_eq!(compute_s2(&qd, &r, 4).dim(), 0);
}

#[test]
fn classify_examples() {
    let cases: [(&str, Verdict); 6] = [
        ("easy_drift", Verdict::Drift { k: 1, dk: v(&[0, 2]) }),
        ("sussmann", Verdict::Drift { k: 2, dk: v(&[0, 0, 2]) }),
        ("competition", Verdict::Drift { k: 1, dk: v(&[0, 0, 2]) }),
        ("toy_manifold", Verdict::InvariantManifold),
        ("cubic", Verdict::InvariantManifold),
        ("integrator1d", Verdict::LinearlyControllable),
    ];
    for (name, expected) in cases {
        assert_eq!(classify(&system(name).unwrap()).2.verdict, expected, "{name}");
    }
    let (_, _, c) = classify(&system("u2_drift:3/2").unwrap());
    assert_eq!(c.verdict, Verdict::DriftOrderZero { d0: v(&[0, 3]), direction: v(&[0, 3]) });
    assert_eq!(c.threshold.unwrap().order, 0);
}

#[test]
fn thresholds_follow_the_system_kind() {
    let (_, _, c) = classify(&system("sussmann").unwrap());
    assert_eq!(c.threshold.unwrap().order, 1);
    let (_, _, c) = classify(&system("opt_nonlinear_k:3").unwrap());
    assert_eq!(c.drift_k(), Some(3));
    assert_eq!(c.threshold.unwrap().order, 6);
    let (_, _, c) = classify(&system("opt_affine_k:4").unwrap());
    assert_eq!(c.drift_k(), Some(4));
    assert_eq!(c.threshold.unwrap().order, 5);
    assert!(classify(&system("bent").unwrap()).2.threshold.is_none());
}

#[test]
fn drift_verdicts_are_well_formed() {
    let mut r = rng(14);
    for _ in 0..60 {
        let sys = random_chain(&mut r, 4);
        let (_, rep, c) = classify(&sys);
        if let Verdict::Drift { k, dk } = &c.verdict {
            assert!(*k >= 1 && *k <= rep.d());
            assert!(!is_zero_vec(dk));
        }
    }
}

#[test]
fn krener_sussmann() {
    let (_, r, _) = classify(&system("sussmann").unwrap());
    let kr = krener_checks(&r, 2).unwrap();
    assert!(kr.independent);
    assert_eq!(kr.checked_pairs, vec![(0, 1), (0, 2)]);
    assert_eq!(r.bk[..2], [v(&[1, 0, 0]), v(&[0, -1, 0])]);
    // P⊥[ad^0, ad^3](0) = 2e₃ = d₂
    let s = kr.signs.iter().find(|s| s.l == 0).unwrap();
    assert_eq!(r.perp(&r.second_order_bracket(0, 3)), v(&[0, 0, 2]));
    assert_eq!(s.observed, -1);
    assert_eq!(kr.signs.len(), 4);
}

#[test]
fn krener_easy_drift() {
    let (_, r, _) = classify(&system("easy_drift").unwrap());
    let kr = krener_checks(&r, 1).unwrap();
    assert!(kr.checked_pairs.is_empty());
    assert!(kr.independent);
    assert_eq!(kr.signs.len(), 2);
}

#[test]
fn krener_holds_for_every_drift_fixture() {
    let mut r = rng(15);
    let mut systems: Vec<ControlSystem> = fixtures::NAMES.iter().map(|n| system(n).unwrap()).collect();
    for _ in 0..40 {
        systems.push(random_chain(&mut r, 4));
    }
    for sys in &systems {
        let (_, rep, c) = classify(sys);
        if let Verdict::Drift { k, .. } = c.verdict {
            if 2 * k - 1 <= rep.kmax {
                krener_checks(&rep, k).unwrap_or_else(|e| panic!("{}: {e}", sys.name()));
            }
        }
    }
}

/// Independent scan with symbolic brackets: the first `k` for which
/// `[ad^{k−1}, ad^k](0)` leaves S1.
fn symbolic_scan(sys: &ControlSystem, s1: &Subspace, d: usize) -> Option<usize> {
    let ads: Vec<PolyVectorField> =
        (0..=d).map(|k| ad_power(&sys.drift(), &sys.control_field(), k).unwrap()).collect();
    (1..=d).find(|&k| !s1.contains(&lie_bracket(&ads[k - 1], &ads[k]).unwrap().value_at_origin()))
}

#[test]
fn scan_agrees_with_symbolic_brackets() {
    let mut r = rng(16);
    let mut seen_manifold = 0;
    for i in 0..80 {
        let sys = random_chain(&mut r, 2 + i % 3);
        let (_, rep, c) = classify(&sys);
        if rep.kalman() {
            continue;
        }
        let scan = symbolic_scan(&sys, &rep.s1, rep.d());
        match c.verdict {
            Verdict::InvariantManifold => {
                seen_manifold += 1;
                assert_eq!(scan, None);
            }
            Verdict::Drift { k, .. } => assert_eq!(scan, Some(k)),
            _ => unreachable!("affine systems have no order-zero drift"),
        }
    }
    assert!(seen_manifold > 0);
}

#[test]
fn cayley_hamilton_closure() {
    let mut r = rng(17);
    let mut systems: Vec<ControlSystem> = fixtures::NAMES.iter().map(|n| system(n).unwrap()).collect();
    for n in 1..=4 {
        for _ in 0..10 {
            systems.push(random_affine(&mut r, n));
        }
    }
    for sys in &systems {
        let (qd, rep) = report(sys);
        let n = qd.n;
        let first = Subspace::span(n, &rep.bk[..n]);
        for k in n..=rep.kmax {
            assert!(first.contains(&rep.bk[k]), "{}", sys.name());
        }
        assert_eq!(first, rep.s1);
        for b in rep.s1.basis() {
            assert!(rep.s1.contains(&mat_vec(&qd.h0, b)));
        }
        let p = &rep.p;
        let pp = &rep.p_perp;
        for i in 0..n {
            let e = unit(n, i);
            let sum: RVec = mat_vec(p, &e).iter().zip(mat_vec(pp, &e)).map(|(a, b)| a + b).collect();
            assert_eq!(sum, e);
            let pe = mat_vec(p, &e);
            assert_eq!(mat_vec(p, &pe), pe);
        }
        for b in rep.s1.basis() {
            assert!(is_zero_vec(&mat_vec(pp, b)));
        }
    }
}

#[test]
fn s2_inclusion_agrees_with_classification() {
    let mut r = rng(18);
    let mut systems: Vec<ControlSystem> = fixtures::NAMES.iter().map(|n| system(n).unwrap()).collect();
    for i in 0..60 {
        systems.push(random_chain(&mut r, 2 + i % 3));
    }
    for sys in &systems {
        let (qd, rep, c) = classify(sys);
        if rep.kalman() {
            continue;
        }
        let s2 = compute_s2(&qd, &rep, 2 * qd.n);
        let included = rep.s1.contains_subspace(&s2) && rep.s1.contains(&qd.d0);
        assert_eq!(included, c.verdict == Verdict::InvariantManifold, "{}", sys.name());
    }
}

#[test]
fn nonlinear_with_d0_in_s1_uses_the_scan() {
    // x1' = u + u², x2' = x1²: d₀ = 2e₁ ∈ S1, so the verdict comes from W₁
    let n = 2;
    let mut c0 = Polynomial::zero(n);
    c0.add_term(Monomial::new(vec![0, 0], 1), int(1));
    c0.add_term(Monomial::new(vec![0, 0], 2), int(1));
    let mut c1 = Polynomial::zero(n);
    c1.add_term(Monomial::new(vec![2, 0], 0), frac(1, 1));
    let sys = ControlSystem::nonlinear("u_plus_u2", PolyVectorField::new(vec![c0, c1]).unwrap()).unwrap();
    let (qd, _, c) = classify(&sys);
    assert_eq!(qd.d0, v(&[2, 0]));
    assert_eq!(c.verdict, Verdict::Drift { k: 1, dk: v(&[0, 2]) });
}

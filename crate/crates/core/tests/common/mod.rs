#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quadctrl::poly::{Monomial, PolyVectorField, Polynomial};
use quadctrl::rational::{frac, int, Rational};
use quadctrl::system::ControlSystem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rat(r: &mut ChaCha8Rng) -> Rational {
    frac(r.gen_range(-6..=6), r.gen_range(1..=2))
}

pub fn small_int(r: &mut ChaCha8Rng) -> Rational {
    int(r.gen_range(-3..=3))
}

/// Exponent vectors of total degree `lo..=hi` in `n` variables.
pub fn exponents(n: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|e: Vec<u32>| {
                (0..=hi).map(move |p| {
                    let mut e = e.clone();
                    e.push(p);
                    e
                })
            })
            .collect();
    }
    out.retain(|e| (lo..=hi).contains(&e.iter().sum()));
    out
}

/// Sparse random polynomial with integer coefficients in `[−3, 3]`.
pub fn random_poly(r: &mut ChaCha8Rng, n: usize, lo: u32, hi: u32, density: f64) -> Polynomial {
    let mut p = Polynomial::zero(n);
    for e in exponents(n, lo, hi) {
        if r.gen_bool(density) {
            p.add_term(Monomial::new(e, 0), small_int(r));
        }
    }
    p
}

pub fn random_field(r: &mut ChaCha8Rng, n: usize, lo: u32, hi: u32, density: f64) -> PolyVectorField {
    PolyVectorField::new((0..n).map(|_| random_poly(r, n, lo, hi, density)).collect()).unwrap()
}

/// Random affine system whose drift vanishes at the origin.
pub fn random_affine(r: &mut ChaCha8Rng, n: usize) -> ControlSystem {
    let f0 = random_field(r, n, 1, 2, 0.3);
    let f1 = random_field(r, n, 0, 1, 0.3);
    ControlSystem::affine("random", f0, f1).unwrap()
}

/// Random affine system in chain form, so the linearization has a nontrivial
/// but usually incomplete S1 and the classification is varied.
pub fn random_chain(r: &mut ChaCha8Rng, n: usize) -> ControlSystem {
    let d = r.gen_range(1..n);
    let mut comps = vec![Polynomial::zero(n); n];
    for j in 1..d {
        comps[j].add_term(Monomial::var(n, j - 1), int(1));
    }
    for c in comps.iter_mut() {
        *c = &*c + &random_poly(r, n, 2, 2, 0.25);
    }
    let mut f1 = vec![Polynomial::zero(n); n];
    f1[0] = Polynomial::constant(n, int(1));
    for c in f1.iter_mut().skip(1) {
        *c = random_poly(r, n, 1, 1, 0.3);
    }
    ControlSystem::affine("chain", PolyVectorField::new(comps).unwrap(), PolyVectorField::new(f1).unwrap()).unwrap()
}

pub fn random_point(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

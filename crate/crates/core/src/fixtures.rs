//! Built-in example systems.
//!
//! Parametrised families accept a suffix: `opt_affine_k:4`,
//! `opt_nonlinear_k:3`, `u2_drift:1/2`, `drift_bent:2`.

use num_traits::Zero;

use crate::io::SystemFile;
use crate::poly::{Monomial, PolyVectorField, Polynomial};
use crate::rational::{int, parse_rational, Rational};
use crate::system::{ControlSystem, Dynamics};

pub const NAMES: &[&str] = &[
    "easy_drift",
    "sussmann",
    "competition",
    "toy_manifold",
    "drift_bent",
    "bent",
    "cubic",
    "opt_affine_k",
    "opt_nonlinear_k",
    "bilinear",
    "u2_drift",
    "integrator1d",
    "double_integrator",
    "oscillator",
    "scalar_unstable",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FixtureError {
    #[error("unknown example `{0}`; run `examples list`")]
    Unknown(String),
    #[error("bad parameter `{param}` for example `{name}`")]
    BadParam { name: String, param: String },
}

/// A term `c · x^px · u^pu`.
fn t(c: i64, px: &[u32], pu: u32) -> (Rational, Monomial) {
    (int(c), Monomial::new(px.to_vec(), pu))
}

fn poly(n: usize, terms: Vec<(Rational, Monomial)>) -> Polynomial {
    Polynomial::from_terms(n, terms).expect("fixture monomials match the dimension")
}

fn field(n: usize, comps: Vec<Vec<(Rational, Monomial)>>) -> PolyVectorField {
    PolyVectorField::new(comps.into_iter().map(|c| poly(n, c)).collect()).expect("square fixture")
}

fn e(n: usize, i: usize, pow: u32) -> Vec<u32> {
    let mut px = vec![0; n];
    px[i] += pow;
    px
}

fn unit_field(n: usize, i: usize) -> PolyVectorField {
    let mut v = vec![Rational::zero(); n];
    v[i] = int(1);
    PolyVectorField::constant(&v)
}

/// Chain `ẋ₁ = u, ẋ_{j+1} = x_j` (j < k) with a custom last component.
fn chain(n: usize, k: usize, last: Vec<(Rational, Monomial)>) -> Vec<Vec<(Rational, Monomial)>> {
    let mut comps: Vec<Vec<(Rational, Monomial)>> = vec![Vec::new(); n];
    for j in 1..k {
        comps[j] = vec![t(1, &e(n, j - 1, 1), 0)];
    }
    comps[k] = last;
    comps
}

struct Raw {
    description: &'static str,
    dynamics: Dynamics,
    x_e: Vec<Rational>,
    u_e: Rational,
}

fn affine(description: &'static str, f0: PolyVectorField, f1: PolyVectorField) -> Raw {
    let n = f0.n();
    Raw { description, dynamics: Dynamics::Affine { f0, f1 }, x_e: vec![Rational::zero(); n], u_e: Rational::zero() }
}

fn nonlinear(description: &'static str, f: PolyVectorField) -> Raw {
    let n = f.n();
    Raw { description, dynamics: Dynamics::Nonlinear { f }, x_e: vec![Rational::zero(); n], u_e: Rational::zero() }
}

fn parse_k(name: &str, param: Option<&str>, default: usize) -> Result<usize, FixtureError> {
    match param {
        None => Ok(default),
        Some(p) => p
            .parse::<usize>()
            .ok()
            .filter(|&k| (1..=12).contains(&k))
            .ok_or_else(|| FixtureError::BadParam { name: name.into(), param: p.into() }),
    }
}

fn parse_lambda(name: &str, param: Option<&str>) -> Result<Rational, FixtureError> {
    match param {
        None => Ok(int(1)),
        Some(p) => parse_rational(p).map_err(|_| FixtureError::BadParam { name: name.into(), param: p.into() }),
    }
}

fn raw(full_name: &str) -> Result<Raw, FixtureError> {
    let (name, param) = match full_name.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (full_name, None),
    };
    let no_param = |r: Raw| match param {
        None => Ok(r),
        Some(p) => Err(FixtureError::BadParam { name: name.into(), param: p.into() }),
    };
    match name {
        "easy_drift" => no_param(affine(
            "x1' = u, x2' = x1^2",
            field(2, vec![vec![], vec![t(1, &[2, 0], 0)]]),
            unit_field(2, 0),
        )),
        "sussmann" => no_param(affine(
            "x1' = u, x2' = x1, x3' = x1^3 + x2^2",
            field(3, vec![vec![], vec![t(1, &[1, 0, 0], 0)], vec![t(1, &[3, 0, 0], 0), t(1, &[0, 2, 0], 0)]]),
            unit_field(3, 0),
        )),
        "competition" => no_param(affine(
            "x1' = u, x2' = x1, x3' = x1^2 - x2^2",
            field(3, vec![vec![], vec![t(1, &[1, 0, 0], 0)], vec![t(1, &[2, 0, 0], 0), t(-1, &[0, 2, 0], 0)]]),
            unit_field(3, 0),
        )),
        "toy_manifold" => no_param(affine(
            "x1' = u, x2' = 2 u x1",
            PolyVectorField::zero(2),
            field(2, vec![vec![t(1, &[0, 0], 0)], vec![t(2, &[1, 0], 0)]]),
        )),
        "drift_bent" => {
            let lambda = parse_lambda(name, param)?;
            let mut f0 = Polynomial::zero(2);
            f0.add_term(Monomial::new(vec![2, 0], 0), lambda);
            Ok(affine(
                "x1' = u, x2' = 2 u x1 + lambda x1^2 (lambda = 1 unless given as drift_bent:LAMBDA)",
                PolyVectorField::new(vec![Polynomial::zero(2), f0]).expect("n = 2"),
                field(2, vec![vec![t(1, &[0, 0], 0)], vec![t(2, &[1, 0], 0)]]),
            ))
        }
        "bent" => no_param(affine(
            "x1' = u, x2' = 2 u x1 + u x2",
            PolyVectorField::zero(2),
            field(2, vec![vec![t(1, &[0, 0], 0)], vec![t(2, &[1, 0], 0), t(1, &[0, 1], 0)]]),
        )),
        "cubic" => no_param(affine(
            "x1' = u, x2' = x1^3",
            field(2, vec![vec![], vec![t(1, &[3, 0], 0)]]),
            unit_field(2, 0),
        )),
        "opt_affine_k" => {
            let k = parse_k(name, param, 3)?;
            let n = k + 1;
            let last = vec![t(1, &e(n, k - 1, 2), 0), t(1, &e(n, 0, 3), 0)];
            Ok(affine(
                "x1' = u, x_{j+1}' = x_j (j < k), x_{k+1}' = x_k^2 + x1^3 (k = 3 unless given as opt_affine_k:K)",
                field(n, chain(n, k, last)),
                unit_field(n, 0),
            ))
        }
        "opt_nonlinear_k" => {
            let k = parse_k(name, param, 2)?;
            let n = k + 1;
            let mut comps = chain(n, k, vec![t(1, &e(n, k - 1, 2), 0), t(1, &vec![0; n], 3)]);
            comps[0] = vec![t(1, &vec![0; n], 1)];
            Ok(nonlinear(
                "x1' = u, x_{j+1}' = x_j (j < k), x_{k+1}' = x_k^2 + u^3 (k = 2 unless given as opt_nonlinear_k:K)",
                field(n, comps),
            ))
        }
        "bilinear" => {
            let n = 5;
            let f0 = field(n, vec![vec![], vec![], vec![], vec![], vec![t(1, &e(n, 4, 1), 0), t(1, &e(n, 3, 1), 0)]]);
            let f1 = field(
                n,
                vec![
                    vec![],
                    vec![t(1, &e(n, 0, 1), 0)],
                    vec![t(2, &e(n, 1, 1), 0)],
                    vec![t(3, &e(n, 2, 1), 0)],
                    vec![t(1, &e(n, 1, 1), 0)],
                ],
            );
            let mut r = affine(
                "x1' = 0, x2' = u x1, x3' = 2 u x2, x4' = 3 u x3, x5' = x5 + u x2 + x4, around x = (1,0,0,0,0)",
                f0,
                f1,
            );
            r.x_e = vec![int(1), int(0), int(0), int(0), int(0)];
            no_param(r)
        }
        "u2_drift" => {
            let lambda = parse_lambda(name, param)?;
            let mut f2 = poly(2, vec![t(1, &[2, 0], 0), t(1, &[0, 0], 3)]);
            f2.add_term(Monomial::new(vec![0, 0], 2), lambda);
            let f = PolyVectorField::new(vec![poly(2, vec![t(1, &[0, 0], 1)]), f2]).expect("n = 2");
            Ok(nonlinear("x1' = u, x2' = x1^2 + lambda u^2 + u^3 (lambda = 1 unless given as u2_drift:LAMBDA)", f))
        }
        "integrator1d" => no_param(affine("x' = u", PolyVectorField::zero(1), unit_field(1, 0))),
        "double_integrator" => no_param(affine(
            "x1' = u, x2' = x1",
            field(2, vec![vec![], vec![t(1, &[1, 0], 0)]]),
            unit_field(2, 0),
        )),
        "oscillator" => no_param(affine(
            "x1' = x2, x2' = -x1 + x1^2 + u",
            field(2, vec![vec![t(1, &[0, 1], 0)], vec![t(-1, &[1, 0], 0), t(1, &[2, 0], 0)]]),
            unit_field(2, 1),
        )),
        "scalar_unstable" => no_param(affine("x' = x + u", field(1, vec![vec![t(1, &[1], 0)]]), unit_field(1, 0))),
        _ => Err(FixtureError::Unknown(full_name.to_string())),
    }
}

/// The system file for a fixture, in its original coordinates.
pub fn system_file(name: &str) -> Result<SystemFile, FixtureError> {
    let r = raw(name)?;
    Ok(SystemFile::from_dynamics(name, Some(r.description), &r.dynamics, &r.x_e, &r.u_e))
}

/// The fixture re-centred at its equilibrium.
pub fn system(name: &str) -> Result<ControlSystem, FixtureError> {
    let r = raw(name)?;
    Ok(ControlSystem::at_equilibrium(name, r.dynamics, &r.x_e, &r.u_e).expect("fixtures are valid systems"))
}

pub fn description(name: &str) -> Result<&'static str, FixtureError> {
    raw(name).map(|r| r.description)
}

//! JSON system files and CSV writers.

use std::fmt::Write as _;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::poly::{Monomial, PolyVectorField, Polynomial};
use crate::rational::{format_rational, parse_rational, Rational};
use crate::system::{ControlSystem, Dynamics, SystemError, SystemKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialRecord {
    /// Exact coefficient, `"p/q"` or a decimal literal.
    pub c: String,
    pub px: Vec<u32>,
    #[serde(default, skip_serializing_if = "is_zero_u32")]
    pub pu: u32,
}

fn is_zero_u32(v: &u32) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub x: Vec<String>,
    pub u: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemFile {
    pub name: String,
    pub n: usize,
    pub kind: SystemKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub equilibrium: Equilibrium,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f0: Option<Vec<Vec<MonomialRecord>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<Vec<Vec<MonomialRecord>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<Vec<MonomialRecord>>>,
}

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("cannot read `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> InputError {
    InputError::Field { field: field.into(), message: message.into() }
}

fn parse_field(
    label: &str,
    comps: &[Vec<MonomialRecord>],
    n: usize,
    allow_u: bool,
) -> Result<PolyVectorField, InputError> {
    if comps.len() != n {
        return Err(field_err(label, format!("expected {n} components, found {}", comps.len())));
    }
    let mut out = Vec::with_capacity(n);
    for (i, comp) in comps.iter().enumerate() {
        let mut p = Polynomial::zero(n);
        for (j, rec) in comp.iter().enumerate() {
            let at = format!("{label}[{i}][{j}]");
            if rec.px.len() != n {
                return Err(field_err(&at, format!("px has length {}, expected {n}", rec.px.len())));
            }
            if rec.pu > 0 && !allow_u {
                return Err(field_err(&at, "pu must be 0 for affine fields"));
            }
            let c = parse_rational(&rec.c).map_err(|e| field_err(format!("{at}.c"), e.to_string()))?;
            p.add_term(Monomial::new(rec.px.clone(), rec.pu), c);
        }
        out.push(p);
    }
    Ok(PolyVectorField::new(out).expect("components share the dimension"))
}

pub fn field_records(field: &PolyVectorField) -> Vec<Vec<MonomialRecord>> {
    field
        .components()
        .iter()
        .map(|p| {
            p.terms()
                .map(|(m, c)| MonomialRecord { c: format_rational(c), px: m.px().to_vec(), pu: m.pu() })
                .collect()
        })
        .collect()
}

impl SystemFile {
    pub fn from_json(text: &str) -> Result<Self, InputError> {
        serde_json::from_str(text).map_err(|e| InputError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn read(path: &str) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| InputError::Io { path: path.to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system files always serialize")
    }

    /// Builds a file from raw dynamics around an equilibrium.
    pub fn from_dynamics(
        name: &str,
        description: Option<&str>,
        dynamics: &Dynamics,
        x_e: &[Rational],
        u_e: &Rational,
    ) -> Self {
        let (kind, n, f0, f1, f) = match dynamics {
            Dynamics::Affine { f0, f1 } => {
                (SystemKind::Affine, f0.n(), Some(field_records(f0)), Some(field_records(f1)), None)
            }
            Dynamics::Nonlinear { f } => (SystemKind::Nonlinear, f.n(), None, None, Some(field_records(f))),
        };
        Self {
            name: name.to_string(),
            n,
            kind,
            description: description.map(str::to_string),
            equilibrium: Equilibrium {
                x: x_e.iter().map(format_rational).collect(),
                u: format_rational(u_e),
            },
            f0,
            f1,
            f,
        }
    }

    /// File for a system already centred at the origin.
    pub fn from_system(sys: &ControlSystem) -> Self {
        let n = sys.n();
        Self::from_dynamics(sys.name(), None, sys.dynamics(), &vec![Rational::zero(); n], &Rational::zero())
    }

    pub fn dynamics(&self) -> Result<Dynamics, InputError> {
        let n = self.n;
        if n == 0 {
            return Err(field_err("n", "dimension must be positive"));
        }
        match self.kind {
            SystemKind::Affine => {
                if self.f.is_some() {
                    return Err(field_err("f", "affine systems use f0 and f1"));
                }
                let f0 = self.f0.as_ref().ok_or_else(|| field_err("f0", "missing"))?;
                let f1 = self.f1.as_ref().ok_or_else(|| field_err("f1", "missing"))?;
                Ok(Dynamics::Affine { f0: parse_field("f0", f0, n, false)?, f1: parse_field("f1", f1, n, false)? })
            }
            SystemKind::Nonlinear => {
                if self.f0.is_some() || self.f1.is_some() {
                    return Err(field_err("f0", "nonlinear systems use f"));
                }
                let f = self.f.as_ref().ok_or_else(|| field_err("f", "missing"))?;
                Ok(Dynamics::Nonlinear { f: parse_field("f", f, n, true)? })
            }
        }
    }

    pub fn equilibrium_point(&self) -> Result<(Vec<Rational>, Rational), InputError> {
        if self.equilibrium.x.len() != self.n {
            return Err(field_err(
                "equilibrium.x",
                format!("expected {} entries, found {}", self.n, self.equilibrium.x.len()),
            ));
        }
        let x = self
            .equilibrium
            .x
            .iter()
            .enumerate()
            .map(|(i, s)| parse_rational(s).map_err(|e| field_err(format!("equilibrium.x[{i}]"), e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let u = parse_rational(&self.equilibrium.u).map_err(|e| field_err("equilibrium.u", e.to_string()))?;
        Ok((x, u))
    }

    /// Parses and re-centres the system at its equilibrium.
    pub fn to_system(&self) -> Result<ControlSystem, InputError> {
        let (x, u) = self.equilibrium_point()?;
        Ok(ControlSystem::at_equilibrium(self.name.clone(), self.dynamics()?, &x, &u)?)
    }
}

/// Shortest round-trip representation with at least 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with a header row; every value is written with 17 significant digits.
pub fn write_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Reads a two-column `t,u` CSV (header optional).
pub fn read_control_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>), InputError> {
    let mut t = Vec::new();
    let mut u = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() < 2 {
            return Err(field_err(format!("line {}", lineno + 1), "expected `t,u`"));
        }
        match (cells[0].parse::<f64>(), cells[1].parse::<f64>()) {
            (Ok(a), Ok(b)) => {
                t.push(a);
                u.push(b);
            }
            _ if lineno == 0 => continue,
            _ => return Err(field_err(format!("line {}", lineno + 1), "non-numeric value")),
        }
    }
    Ok((t, u))
}

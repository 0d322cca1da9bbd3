//! Control systems with an equilibrium at the origin.

use num_traits::Zero;

use crate::poly::{PolyError, PolyVectorField, Polynomial};
use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Affine,
    Nonlinear,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dynamics {
    /// `ẋ = f₀(x) + u f₁(x)`.
    Affine { f0: PolyVectorField, f1: PolyVectorField },
    /// `ẋ = f(x, u)`.
    Nonlinear { f: PolyVectorField },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SystemError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("affine fields must not depend on the control")]
    ControlInAffineField,
    #[error("origin is not an equilibrium: f(0,0) = ({})", .0.join(", "))]
    NotAtEquilibrium(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlSystem {
    name: String,
    dynamics: Dynamics,
}

impl ControlSystem {
    pub fn affine(name: impl Into<String>, f0: PolyVectorField, f1: PolyVectorField) -> Result<Self, SystemError> {
        if f0.n() != f1.n() {
            return Err(PolyError::DimensionMismatch { expected: f0.n(), got: f1.n() }.into());
        }
        if f0.uses_control() || f1.uses_control() {
            return Err(SystemError::ControlInAffineField);
        }
        let sys = Self { name: name.into(), dynamics: Dynamics::Affine { f0, f1 } };
        sys.check_equilibrium()?;
        Ok(sys)
    }

    pub fn nonlinear(name: impl Into<String>, f: PolyVectorField) -> Result<Self, SystemError> {
        let sys = Self { name: name.into(), dynamics: Dynamics::Nonlinear { f } };
        sys.check_equilibrium()?;
        Ok(sys)
    }

    fn check_equilibrium(&self) -> Result<(), SystemError> {
        let v = self.drift().value_at_origin();
        if v.iter().any(|c| !c.is_zero()) {
            return Err(SystemError::NotAtEquilibrium(v.iter().map(format_rational).collect()));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        match &self.dynamics {
            Dynamics::Affine { f0, .. } => f0.n(),
            Dynamics::Nonlinear { f } => f.n(),
        }
    }

    pub fn kind(&self) -> SystemKind {
        match self.dynamics {
            Dynamics::Affine { .. } => SystemKind::Affine,
            Dynamics::Nonlinear { .. } => SystemKind::Nonlinear,
        }
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    /// 1 for affine systems, 0 for nonlinear ones.
    pub fn gamma(&self) -> usize {
        match self.kind() {
            SystemKind::Affine => 1,
            SystemKind::Nonlinear => 0,
        }
    }

    /// Exponent label `q`: `"1"` for affine systems, `"inf"` otherwise.
    pub fn q_label(&self) -> &'static str {
        match self.kind() {
            SystemKind::Affine => "1",
            SystemKind::Nonlinear => "inf",
        }
    }

    /// `f₀ = f(·, 0)`.
    pub fn drift(&self) -> PolyVectorField {
        match &self.dynamics {
            Dynamics::Affine { f0, .. } => f0.clone(),
            Dynamics::Nonlinear { f } => f.at_zero_control(),
        }
    }

    /// `f₁ = ∂_u f(·, 0)`.
    pub fn control_field(&self) -> PolyVectorField {
        match &self.dynamics {
            Dynamics::Affine { f1, .. } => f1.clone(),
            Dynamics::Nonlinear { f } => f.diff_u().at_zero_control(),
        }
    }

    /// The full right-hand side `f(x, u)` as a single field in `(x, u)`.
    pub fn full_field(&self) -> PolyVectorField {
        match &self.dynamics {
            Dynamics::Affine { f0, f1 } => f0.add(&f1.mul_poly(&Polynomial::control(f0.n()))),
            Dynamics::Nonlinear { f } => f.clone(),
        }
    }

    /// `∂²_u f(0, 0)`; zero for affine systems.
    pub fn d0(&self) -> Vec<Rational> {
        match &self.dynamics {
            Dynamics::Affine { f0, .. } => vec![Rational::zero(); f0.n()],
            Dynamics::Nonlinear { f } => f.diff_u().diff_u().value_at_origin(),
        }
    }

    /// Builds a system whose equilibrium is `(x_e, u_e)` by re-expressing it in
    /// the shifted coordinates `x − x_e`, `u − u_e`.
    pub fn at_equilibrium(
        name: impl Into<String>,
        dynamics: Dynamics,
        x_e: &[Rational],
        u_e: &Rational,
    ) -> Result<Self, SystemError> {
        match dynamics {
            Dynamics::Affine { f0, f1 } => {
                if f0.uses_control() || f1.uses_control() {
                    return Err(SystemError::ControlInAffineField);
                }
                if f0.n() != f1.n() {
                    return Err(PolyError::DimensionMismatch { expected: f0.n(), got: f1.n() }.into());
                }
                let full = f0.add(&f1.mul_poly(&Polynomial::control(f0.n())));
                let shifted = full.translate_to_origin(x_e, u_e)?;
                let g1 = f1.shift(x_e, &Rational::zero());
                Self::affine(name, shifted.at_zero_control(), g1)
            }
            Dynamics::Nonlinear { f } => Self::nonlinear(name, f.translate_to_origin(x_e, u_e)?),
        }
    }

    /// Truncation of the dynamics to total degree `m` in `(x, u)`.
    pub fn taylor_truncate(&self, m: u32) -> Self {
        let dynamics = match &self.dynamics {
            Dynamics::Affine { f0, f1 } => Dynamics::Affine {
                f0: f0.taylor_truncate(m),
                f1: f1.taylor_truncate(m.saturating_sub(1)),
            },
            Dynamics::Nonlinear { f } => Dynamics::Nonlinear { f: f.taylor_truncate(m) },
        };
        Self { name: self.name.clone(), dynamics }
    }
}

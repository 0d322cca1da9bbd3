//! Fixed-step simulation, control-signal calculus and the numerical
//! experiments built on them.

pub mod experiments;
pub mod integrate;
pub mod jet;
pub mod signal;

pub use experiments::{
    dilation_control, dilation_experiment, drift_check, manifold_invariance, reversal_mu, scaling_study,
    DilationProfile, DilationResult, DriftSeries, InvarianceResult, ScalingReport, ScalingRow,
};
pub use integrate::{auxiliary_fields, auxiliary_state, flow, integrate, integrate_field, Trajectory, BLOWUP_GUARD};
pub use signal::{bump_family, bump_scale, norms, sinusoid, BumpSpec, ControlSignal, NormReport, PrimitiveTable, Provenance};

use crate::manifold::ManifoldError;
use crate::poly::PolyError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("empty support [{a}, {b}]")]
    EmptySupport { a: f64, b: f64 },
    #[error("state left the ball of radius 1e6 at t = {time}")]
    Divergence { time: f64 },
    #[error("{0} is not a drift system")]
    NotDrift(String),
    #[error("{0} drifts; the manifold experiment needs the invariant-manifold case")]
    NotManifold(String),
    #[error("a log-log regression needs at least 3 amplitudes, got {0}")]
    DegenerateRegression(usize),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

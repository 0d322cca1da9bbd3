//! Quadratic controllability analysis for scalar-input polynomial control
//! systems.
//!
//! The crate classifies a system `ẋ = f(x, u)` (or `ẋ = f₀(x) + u f₁(x)`)
//! around an equilibrium: either the linearization is controllable, or the
//! state stays close to an explicit quadratic manifold, or it drifts along a
//! computable direction at quadratic order. Symbolic work is done in exact
//! rational arithmetic; simulations and spectral computations use `f64`.

pub mod rational;
pub mod poly;
pub mod exact;
pub mod system;
pub mod lie;
pub mod io;
pub mod fixtures;
pub mod brunovsky;
pub mod manifold;
pub mod numeric;
pub mod simulate;
pub mod coercivity;
pub mod linsynth;
pub mod report;

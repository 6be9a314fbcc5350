//! Simulation of an incompressible heat-conducting viscoelastic fluid with
//! spherical elastic response and stress diffusion, with a runtime audit of
//! its energy and entropy structure.
//!
//! The crate is layered bottom-up: [`constitutive`] models, their
//! [`regularization`], the [`closure`] relations, the [`spectral`]
//! discretization, the Galerkin [`solver`] and the [`audit`].

pub mod audit;
pub mod closure;
pub mod constitutive;
pub mod error;
pub mod regularization;
pub mod solver;
pub mod spectral;

pub use closure::{DissipationBreakdown, FluxSet, StateGradients};
pub use constitutive::{
    CoefficientFn, FreeEnergyModel, MaterialCoefficients, Relaxation, ScalarFunction,
    ValidationReport,
};
pub use error::{Error, Result};
pub use regularization::{CutoffSpec, RegularizedModel, StickSlipParams};
pub use spectral::{Discretization, Rectangle, ScalarBasis, VelocityBasis};

//! Galerkin time integration: configuration, right-hand side, integrator and
//! parameter sweeps.

pub mod config;
pub mod integrator;
mod problem;
pub mod sweep;

pub use config::{
    BodyForce, CutoffLevel, InitialData, Mode, ModeCoefficient, ModelSpec, OdeSettings,
    OutputSettings, ScalarField, SimulationConfig, VelocitySpec,
};
pub use integrator::{dopri5, IntegrationStats, StepReport};
pub use problem::{Accumulators, Problem, SimState, N_ACCUMULATORS};
pub use sweep::{SweepAxis, SweepSpec};

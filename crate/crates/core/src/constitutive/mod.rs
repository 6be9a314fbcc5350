//! Free-energy models, derived thermodynamic quantities, assumption checks
//! and the scalar Oldroyd-B / Giesekus presets.

pub mod functions;
pub mod model;
pub mod presets;
pub mod validate;

pub use functions::{Domain, ScalarFunction};
pub use model::{CoefficientFn, FreeEnergyModel, MaterialCoefficients, Relaxation};
pub use presets::{preset_giesekus, preset_oldroyd_b, Giesekus, OldroydB};
pub use validate::{
    entropy_upper_bound, validate_assumptions, SampleSpec, ValidationReport, ValidationRow,
};

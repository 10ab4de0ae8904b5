//! Numerical probes of strong continuity, generator consistency, the
//! viscosity residual and the structural inequalities of the envelope.

mod continuity;
mod properties;
mod viscosity;

pub use continuity::{
    cutoff_decay_probe, cutoff_function, log_log_slope, strong_continuity_probe, ContinuityReport,
    CutoffReport,
};
pub use properties::{property_suite, PropertyCheck, PropertyReport, SuiteOptions};
pub use viscosity::{
    generator_consistency, hamiltonian, viscosity_residual, ConsistencyReport, ViscosityReport,
};

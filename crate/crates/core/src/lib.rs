//! Pointwise-maximum envelopes of linear Markov semigroups on discretized
//! state spaces.
//!
//! Given member semigroups `S_λ`, the one-step envelope is
//! `E_h u = max_λ S_λ(h)u`, and the envelope semigroup is the monotone limit
//! `S(t)u = lim_n E_{t/2^n}^{2^n} u`. The crate provides the members
//! ([`zoo`]), the envelope itself ([`envelope`]), diagnostics of its
//! structural properties ([`diagnostics`]), the dual control representation
//! ([`control`]) and a Monte Carlo cross-check ([`mc`]).
//!
//! ```
//! use std::sync::Arc;
//! use nisio::{envelope::{nisio_value, Refine}, grid::*, operator::*, zoo::Heat};
//!
//! let grid = WeightedGrid::line(-8.0, 8.0, 0.05)?
//!     .with_boundary(BoundaryPolicy::Reflect)
//!     .into_shared();
//! let family = SemigroupFamily::new(vec![
//!     Arc::new(Heat::new(grid.clone(), 0.5)?) as Arc<dyn TransitionOperator>,
//!     Arc::new(Heat::new(grid.clone(), 1.0)?),
//! ])?;
//! let u = GridFunction::from_fn(grid.clone(), |s| s.real().unwrap().powi(2))?;
//! let v = nisio_value(&family, 1.0, &u, Refine::default())?;
//! let mid = grid.nearest(State::Real(0.0))?;
//! assert!((v.value.values()[mid] - 1.0).abs() < 1e-9);
//! # Ok::<(), nisio::Error>(())
//! ```

pub mod control;
pub mod diagnostics;
pub mod envelope;
mod error;
pub mod grid;
pub mod mc;
pub mod operator;
pub mod partition;
pub mod probe;
pub mod tolerance;
pub mod zoo;

pub use control::{duality_gap, greedy_policy, policy_value, ControlPolicy, Stage};
pub use envelope::{dpp_check, envelope_step, nisio_value, partition_apply, upper_bound_check, Refine};
pub use error::{Error, Result};
pub use grid::{BoundaryPolicy, GridFunction, Kappa, Region, State, WeightedGrid};
pub use operator::{FamilyBounds, GeneratorField, SemigroupFamily, TransitionOperator};
pub use partition::Partition;
pub use probe::Probe;
pub use tolerance::{quadrature_tolerance, quadrature_tolerance_with, QuadratureTolerance};
pub use zoo::MemberSpec;

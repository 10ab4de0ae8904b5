//! The member-semigroup interface and finite families of members.

use std::fmt::Debug;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{config, invalid, Error, Result};
use crate::grid::{GridFunction, State, WeightedGrid};

/// Growth rates from the standing growth assumption:
/// `‖S(t)u‖_κ ≤ e^{αt}‖u‖_κ` and `‖S(t)u‖_Lip ≤ e^{βt}‖u‖_Lip`.
///
/// Only used to size tolerances; values are never clamped with them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FamilyBounds {
    pub alpha: f64,
    pub beta: f64,
}

impl FamilyBounds {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(config(format!("growth bounds must be finite, got ({alpha}, {beta})")));
        }
        Ok(FamilyBounds { alpha, beta })
    }

    pub fn max(self, other: FamilyBounds) -> FamilyBounds {
        FamilyBounds { alpha: self.alpha.max(other.alpha), beta: self.beta.max(other.beta) }
    }
}

/// Generator values together with a per-row validity mask. Rows whose
/// stencil would leave the grid are marked invalid and must be ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorField {
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl GeneratorField {
    pub fn all_valid(values: Vec<f64>) -> Self {
        let valid = vec![true; values.len()];
        GeneratorField { values, valid }
    }
}

/// One linear member semigroup `S_λ` discretized on a fixed grid.
///
/// Implementations must satisfy, on the grid: `apply(0, u) == u`,
/// `apply(t, 1) == 1` bit for bit (for conservative members), monotonicity
/// (nonnegative weights) and linearity.
pub trait TransitionOperator: Send + Sync + Debug {
    /// Short human-readable description, e.g. `heat(sigma=0.5)`.
    fn label(&self) -> String;

    fn grid(&self) -> &Arc<WeightedGrid>;

    fn apply(&self, t: f64, u: &GridFunction) -> Result<GridFunction>;

    fn generator(&self, u: &GridFunction) -> Result<GeneratorField>;

    fn growth_bounds(&self) -> FamilyBounds;

    /// Whether the discrete Lipschitz seminorm obeys the `e^{βt}` bound.
    fn propagates_lipschitz(&self) -> bool {
        false
    }

    /// Draws the state reached after time `h` from `state`.
    fn sample_step(&self, _state: State, _h: f64, _rng: &mut dyn RngCore) -> Result<State> {
        Err(Error::Unsupported(format!("{} has no path sampler", self.label())))
    }

    /// Whether `sample_step` is implemented.
    fn has_sampler(&self) -> bool {
        false
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("duration must be finite and nonnegative, got {t}")))
    }
}

pub(crate) fn check_grid(op: &dyn TransitionOperator, u: &GridFunction) -> Result<()> {
    if op.grid().same_as(u.grid()) {
        Ok(())
    } else {
        Err(invalid(format!("{}: function lives on a different grid", op.label())))
    }
}

/// Finite discretization of the index set `Λ`.
#[derive(Clone, Debug)]
pub struct SemigroupFamily {
    members: Vec<Arc<dyn TransitionOperator>>,
    bounds: FamilyBounds,
    grid: Arc<WeightedGrid>,
}

impl SemigroupFamily {
    pub fn new(members: Vec<Arc<dyn TransitionOperator>>) -> Result<Self> {
        let first = members.first().ok_or_else(|| config("family must have at least one member"))?;
        let grid = first.grid().clone();
        let mut bounds = first.growth_bounds();
        for m in &members[1..] {
            if !m.grid().same_as(&grid) {
                return Err(config(format!("member {} uses a different grid", m.label())));
            }
            bounds = bounds.max(m.growth_bounds());
        }
        Ok(SemigroupFamily { members, bounds, grid })
    }

    pub fn singleton(member: Arc<dyn TransitionOperator>) -> Self {
        let grid = member.grid().clone();
        let bounds = member.growth_bounds();
        SemigroupFamily { members: vec![member], bounds, grid }
    }

    pub fn members(&self) -> &[Arc<dyn TransitionOperator>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn bounds(&self) -> FamilyBounds {
        self.bounds
    }

    pub fn grid(&self) -> &Arc<WeightedGrid> {
        &self.grid
    }

    pub fn labels(&self) -> Vec<String> {
        self.members.iter().map(|m| m.label()).collect()
    }

    pub(crate) fn check(&self, u: &GridFunction) -> Result<()> {
        if self.grid.same_as(u.grid()) {
            Ok(())
        } else {
            Err(invalid("function does not live on the family grid"))
        }
    }
}

//! Time-dilated members `S_λ(t) = S(λt)` with generator `λA`.

use std::sync::Arc;

use rand::RngCore;

use crate::error::{config, Result};
use crate::grid::{GridFunction, State, WeightedGrid};
use crate::operator::{check_time, FamilyBounds, GeneratorField, TransitionOperator};

#[derive(Debug, Clone)]
pub struct Scaled {
    base: Arc<dyn TransitionOperator>,
    lambda: f64,
}

impl Scaled {
    pub fn new(base: Arc<dyn TransitionOperator>, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(config(format!("time scale must be >= 0, got {lambda}")));
        }
        Ok(Scaled { base, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl TransitionOperator for Scaled {
    fn label(&self) -> String {
        format!("scaled({}, {})", self.lambda, self.base.label())
    }

    fn grid(&self) -> &Arc<WeightedGrid> {
        self.base.grid()
    }

    fn apply(&self, t: f64, u: &GridFunction) -> Result<GridFunction> {
        check_time(t)?;
        self.base.apply(self.lambda * t, u)
    }

    fn generator(&self, u: &GridFunction) -> Result<GeneratorField> {
        let mut g = self.base.generator(u)?;
        g.values.iter_mut().for_each(|v| *v *= self.lambda);
        Ok(g)
    }

    fn growth_bounds(&self) -> FamilyBounds {
        let b = self.base.growth_bounds();
        FamilyBounds { alpha: self.lambda * b.alpha, beta: self.lambda * b.beta }
    }

    fn propagates_lipschitz(&self) -> bool {
        self.base.propagates_lipschitz()
    }

    fn sample_step(&self, state: State, h: f64, rng: &mut dyn RngCore) -> Result<State> {
        self.base.sample_step(state, self.lambda * h, rng)
    }

    fn has_sampler(&self) -> bool {
        self.base.has_sampler()
    }
}

//! Heat semigroup `σ²/2 ∂ₓₓ` by discrete Gaussian convolution.

use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{config, Result};
use crate::grid::{GridFunction, Kappa, State, WeightedGrid};
use crate::operator::{check_grid, check_time, FamilyBounds, GeneratorField, TransitionOperator};
use crate::zoo::{convolve_line, line_derivatives};

/// Brownian motion with volatility `sigma` on a 1D grid.
#[derive(Debug, Clone)]
pub struct Heat {
    grid: Arc<WeightedGrid>,
    sigma: f64,
    bounds: FamilyBounds,
}

impl Heat {
    pub fn new(grid: Arc<WeightedGrid>, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(config(format!("heat volatility must be >= 0, got {sigma}")));
        }
        if grid.line_axis().is_none() {
            return Err(config("heat members need a 1D grid"));
        }
        let v = 0.5 * sigma * sigma;
        // Bound on κ·(σ²/2)(1/κ)'' for the smooth weights; a kinked weight
        // like (1+|x|)^{-p} has no exponential bound at small t.
        let alpha = match grid.kappa_kind() {
            Kappa::Constant { .. } => 0.0,
            Kappa::InverseQuadratic { q } => v * (2.0 * q + (4.0 * q * q - 2.0 * q).abs()),
            Kappa::Polynomial { .. } => {
                return Err(config(
                    "heat members need a constant or inverse-quadratic weight",
                ))
            }
        };
        Ok(Heat { grid, sigma, bounds: FamilyBounds { alpha, beta: 0.0 } })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Symmetric discrete kernel whose variance is exactly `var`.
    pub fn kernel(var: f64, dx: f64) -> Vec<f64> {
        if var <= 0.0 {
            return vec![1.0];
        }
        if var < dx * dx / 100.0 {
            let r = var / (2.0 * dx * dx);
            return vec![r, 1.0 - 2.0 * r, r];
        }
        let s = var.sqrt();
        let radius = (8.0 * s / dx).ceil() as i64 + 1;
        let sample = |tau: f64| -> Vec<f64> {
            (-radius..=radius)
                .map(|j| {
                    let y = j as f64 * dx;
                    (-y * y / (2.0 * tau)).exp()
                })
                .collect()
        };
        let variance = |w: &[f64]| -> f64 {
            let mut m2 = 0.0;
            let mut m0 = 0.0;
            for (k, wk) in w.iter().enumerate() {
                let y = (k as i64 - radius) as f64 * dx;
                m2 += wk * y * y;
                m0 += wk;
            }
            m2 / m0
        };
        // The discrete variance increases with the continuous one; match it by bisection.
        let (mut lo, mut hi) = (0.0, var + dx * dx);
        while variance(&sample(hi)) < var {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if variance(&sample(mid)) < var {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        sample(0.5 * (lo + hi))
    }
}

impl TransitionOperator for Heat {
    fn label(&self) -> String {
        format!("heat(sigma={})", self.sigma)
    }

    fn grid(&self) -> &Arc<WeightedGrid> {
        &self.grid
    }

    fn apply(&self, t: f64, u: &GridFunction) -> Result<GridFunction> {
        check_time(t)?;
        check_grid(self, u)?;
        let var = self.sigma * self.sigma * t;
        if var == 0.0 {
            return Ok(u.clone());
        }
        let axis = self.grid.line_axis().expect("checked at construction");
        let w = Heat::kernel(var, axis.step);
        let values = convolve_line(axis.len, self.grid.is_periodic(), self.grid.boundary(), &w, u.values());
        Ok(GridFunction::from_parts(self.grid.clone(), values))
    }

    fn generator(&self, u: &GridFunction) -> Result<GeneratorField> {
        check_grid(self, u)?;
        let axis = self.grid.line_axis().expect("checked at construction");
        let (_, d2, valid) = line_derivatives(axis, self.grid.is_periodic(), u.values());
        let v = 0.5 * self.sigma * self.sigma;
        Ok(GeneratorField { values: d2.iter().map(|d| v * d).collect(), valid })
    }

    fn growth_bounds(&self) -> FamilyBounds {
        self.bounds
    }

    fn propagates_lipschitz(&self) -> bool {
        true
    }

    fn sample_step(&self, state: State, h: f64, rng: &mut dyn RngCore) -> Result<State> {
        check_time(h)?;
        let x = state.real().ok_or_else(|| config("heat sampler needs a real state"))?;
        let z: f64 = StandardNormal.sample(rng);
        Ok(State::Real(x + self.sigma * h.sqrt() * z))
    }

    fn has_sampler(&self) -> bool {
        true
    }
}

//! Geometric Brownian motion `dX = μX dt + σX dW`.
//!
//! `(S(t)u)(x) = E u(x·exp((μ − σ²/2)t + σW_t))`, integrated in the Gaussian
//! variable and evaluated by linear interpolation on the grid. The origin is
//! a fixed point and is reproduced exactly.

use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{config, Result};
use crate::grid::{interp_line, GridFunction, Kappa, State, WeightedGrid};
use crate::operator::{check_grid, check_time, FamilyBounds, GeneratorField, TransitionOperator};
use crate::zoo::{gauss_nodes, line_derivatives, map_rows};

const MAX_NODES: f64 = 4000.0;
const HALF_WIDTH: f64 = 8.0;

#[derive(Debug, Clone)]
pub struct Gbm {
    grid: Arc<WeightedGrid>,
    mu: f64,
    sigma: f64,
    bounds: FamilyBounds,
}

impl Gbm {
    pub fn new(grid: Arc<WeightedGrid>, mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) || !mu.is_finite() {
            return Err(config(format!("invalid GBM parameters mu={mu}, sigma={sigma}")));
        }
        if grid.line_axis().is_none() || grid.is_periodic() {
            return Err(config("GBM members need a bounded 1D grid"));
        }
        let beta = mu.abs() + 0.5 * sigma * sigma;
        // (E|X_t|^p)^{1/p} = exp((μ + (p−1)σ²/2)t); for p ≤ 2 this is at most e^{βt}.
        let alpha = match grid.kappa_kind() {
            Kappa::Constant { .. } => 0.0,
            Kappa::Polynomial { p } => p * beta.max(mu.abs() + 0.5 * (p - 1.0) * sigma * sigma),
            Kappa::InverseQuadratic { .. } => {
                return Err(config("GBM members need a constant or polynomial weight"))
            }
        };
        Ok(Gbm { grid, mu, sigma, bounds: FamilyBounds { alpha, beta } })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl TransitionOperator for Gbm {
    fn label(&self) -> String {
        format!("gbm(mu={}, sigma={})", self.mu, self.sigma)
    }

    fn grid(&self) -> &Arc<WeightedGrid> {
        &self.grid
    }

    fn apply(&self, t: f64, u: &GridFunction) -> Result<GridFunction> {
        check_time(t)?;
        check_grid(self, u)?;
        if t == 0.0 {
            return Ok(u.clone());
        }
        let axis = *self.grid.line_axis().expect("checked at construction");
        let drift = (self.mu - 0.5 * self.sigma * self.sigma) * t;
        let s = self.sigma * t.sqrt();
        let reach = axis.min.abs().max(axis.max().abs());
        let (factors, weights) = if s > 0.0 {
            // Node spacing such that neighbouring nodes map at most one cell apart.
            let delta = (axis.step / (reach * s)).min(0.25).max(2.0 * HALF_WIDTH / MAX_NODES);
            let (z, w) = gauss_nodes(delta, HALF_WIDTH);
            (z.iter().map(|z| (drift + s * z).exp()).collect::<Vec<_>>(), w)
        } else {
            (vec![drift.exp()], vec![1.0])
        };
        let total: f64 = weights.iter().sum();
        let v = u.values();
        let values = map_rows(axis.len, |i| {
            let x = axis.coord(i);
            if x == 0.0 {
                return v[i];
            }
            let mut num = 0.0;
            for (f, w) in factors.iter().zip(&weights) {
                num += w * interp_line(&axis, v, x * f);
            }
            num / total
        });
        Ok(GridFunction::from_parts(self.grid.clone(), values))
    }

    fn generator(&self, u: &GridFunction) -> Result<GeneratorField> {
        check_grid(self, u)?;
        let axis = self.grid.line_axis().expect("checked at construction");
        let (d1, d2, valid) = line_derivatives(axis, false, u.values());
        let values = (0..axis.len)
            .map(|i| {
                let x = axis.coord(i);
                self.mu * x * d1[i] + 0.5 * self.sigma * self.sigma * x * x * d2[i]
            })
            .collect();
        Ok(GeneratorField { values, valid })
    }

    fn growth_bounds(&self) -> FamilyBounds {
        self.bounds
    }

    fn propagates_lipschitz(&self) -> bool {
        true
    }

    fn sample_step(&self, state: State, h: f64, rng: &mut dyn RngCore) -> Result<State> {
        check_time(h)?;
        let x = state.real().ok_or_else(|| config("GBM sampler needs a real state"))?;
        let z: f64 = StandardNormal.sample(rng);
        let growth = ((self.mu - 0.5 * self.sigma * self.sigma) * h + self.sigma * h.sqrt() * z).exp();
        Ok(State::Real(x * growth))
    }

    fn has_sampler(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<WeightedGrid> {
        WeightedGrid::line(-4.0, 4.0, 0.01)
            .unwrap()
            .with_kappa(Kappa::Polynomial { p: 2.0 })
            .unwrap()
            .into_shared()
    }

    #[test]
    fn constants_exact_and_origin_fixed() {
        let g = grid();
        let gbm = Gbm::new(g.clone(), 0.1, 0.2).unwrap();
        let one = gbm.apply(0.7, &GridFunction::constant(g.clone(), 1.0)).unwrap();
        assert!(one.values().iter().all(|&v| v == 1.0));
        let u = GridFunction::from_fn(g.clone(), |s| (s.real().unwrap() - 0.3).powi(2)).unwrap();
        let v = gbm.apply(1.0, &u).unwrap();
        let zero = g.nearest(State::Real(0.0)).unwrap();
        assert_eq!(v.values()[zero], u.values()[zero]);
    }

    #[test]
    fn lognormal_moments() {
        let g = grid();
        let gbm = Gbm::new(g.clone(), 0.1, 0.2).unwrap();
        let lin = GridFunction::from_fn(g.clone(), |s| s.real().unwrap()).unwrap();
        let sq = GridFunction::from_fn(g.clone(), |s| s.real().unwrap().powi(2)).unwrap();
        let v1 = gbm.apply(1.0, &lin).unwrap();
        let v2 = gbm.apply(1.0, &sq).unwrap();
        for (i, x) in g.xs().iter().enumerate() {
            if x.abs() <= 0.5 {
                assert!((v1.values()[i] - x * 0.1f64.exp()).abs() < 1e-10, "x={x}");
                // linear interpolation of x² overestimates by at most dx²/4 times the reach
                assert!((v2.values()[i] - x * x * 0.24f64.exp()).abs() < 5e-5, "x={x}");
            }
        }
    }

    #[test]
    fn generator_formula() {
        let g = grid();
        let gbm = Gbm::new(g.clone(), 0.1, 0.2).unwrap();
        let sq = GridFunction::from_fn(g.clone(), |s| s.real().unwrap().powi(2)).unwrap();
        let gen = gbm.generator(&sq).unwrap();
        for (i, x) in g.xs().iter().enumerate() {
            if gen.valid[i] {
                assert!((gen.values[i] - 0.24 * x * x).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn growth_bound_matches_closed_form() {
        let gbm = Gbm::new(grid(), 0.1, 0.2).unwrap();
        let b = gbm.growth_bounds();
        assert!((b.beta - 0.12).abs() < 1e-15);
        assert!((b.alpha - 0.24).abs() < 1e-15);
    }
}

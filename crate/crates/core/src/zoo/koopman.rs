//! Koopman semigroups `(S(t)u)(x) = u(Φ(t, x))` of scalar ODE flows `x' = F(x)`.

use std::sync::Arc;

use rand::RngCore;

use crate::error::{config, Result};
use crate::grid::{interp_line, GridFunction, Kappa, State, WeightedGrid};
use crate::operator::{check_grid, check_time, FamilyBounds, GeneratorField, TransitionOperator};
use crate::zoo::expr::Expr;
use crate::zoo::{line_derivatives, map_rows};

const MAX_STEP: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct Koopman {
    grid: Arc<WeightedGrid>,
    field: Expr,
    source: String,
    bounds: FamilyBounds,
}

impl Koopman {
    pub fn parse(grid: Arc<WeightedGrid>, field: &str, lipschitz_hint: f64) -> Result<Self> {
        Self::new(grid, Expr::parse(field)?, field.to_string(), lipschitz_hint)
    }

    pub fn new(grid: Arc<WeightedGrid>, field: Expr, source: String, lipschitz_hint: f64) -> Result<Self> {
        if !(lipschitz_hint >= 0.0 && lipschitz_hint.is_finite()) {
            return Err(config(format!("Lipschitz hint must be >= 0, got {lipschitz_hint}")));
        }
        let axis = *grid
            .line_axis()
            .filter(|_| !grid.is_periodic())
            .ok_or_else(|| config("Koopman members need a bounded 1D grid"))?;
        let fx: Vec<f64> = (0..axis.len).map(|i| field.eval(axis.coord(i))).collect();
        if let Some(i) = fx.iter().position(|v| !v.is_finite()) {
            return Err(config(format!("F({}) is not finite", axis.coord(i))));
        }
        let observed = fx.windows(2).map(|w| (w[1] - w[0]).abs() / axis.step).fold(0.0, f64::max);
        if observed > lipschitz_hint * (1.0 + 1e-9) + 1e-12 {
            return Err(config(format!(
                "F has slope {observed} on the grid, above the Lipschitz hint {lipschitz_hint}"
            )));
        }
        let beta = lipschitz_hint;
        let growth = beta + field.eval(0.0).abs();
        let alpha = match grid.kappa_kind() {
            Kappa::Constant { .. } => 0.0,
            Kappa::Polynomial { p } => growth * p,
            Kappa::InverseQuadratic { .. } => {
                return Err(config("Koopman members need a constant or polynomial weight"))
            }
        };
        Ok(Koopman { grid, field, source, bounds: FamilyBounds { alpha, beta } })
    }

    /// `α = β + |F(0)|`, the growth rate of `1 + |Φ(t, x)|`.
    pub fn flow_growth(&self) -> f64 {
        self.bounds.beta + self.field.eval(0.0).abs()
    }

    /// Classical RK4 with `⌈t / 0.01⌉` equal steps.
    pub fn flow(&self, t: f64, x: f64) -> f64 {
        if t == 0.0 {
            return x;
        }
        let n = (t / MAX_STEP).ceil().max(1.0);
        let h = t / n;
        let f = |y: f64| self.field.eval(y);
        let mut y = x;
        for _ in 0..n as usize {
            let k1 = f(y);
            let k2 = f(y + 0.5 * h * k1);
            let k3 = f(y + 0.5 * h * k2);
            let k4 = f(y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        y
    }

    /// Number of grid points whose flow leaves the grid by time `t`; values
    /// there use constant extrapolation.
    pub fn exits(&self, t: f64) -> usize {
        let axis = self.grid.line_axis().expect("checked at construction");
        (0..axis.len)
            .filter(|&i| {
                let y = self.flow(t, axis.coord(i));
                !(y >= axis.min && y <= axis.max())
            })
            .count()
    }
}

impl TransitionOperator for Koopman {
    fn label(&self) -> String {
        format!("koopman(F={})", self.source)
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
        let v = u.values();
        let values = map_rows(axis.len, |i| interp_line(&axis, v, self.flow(t, axis.coord(i))));
        Ok(GridFunction::from_parts(self.grid.clone(), values))
    }

    fn generator(&self, u: &GridFunction) -> Result<GeneratorField> {
        check_grid(self, u)?;
        let axis = self.grid.line_axis().expect("checked at construction");
        let (d1, _, valid) = line_derivatives(axis, false, u.values());
        let values = (0..axis.len).map(|i| d1[i] * self.field.eval(axis.coord(i))).collect();
        Ok(GeneratorField { values, valid })
    }

    fn growth_bounds(&self) -> FamilyBounds {
        self.bounds
    }

    fn propagates_lipschitz(&self) -> bool {
        true
    }

    fn sample_step(&self, state: State, h: f64, _rng: &mut dyn RngCore) -> Result<State> {
        check_time(h)?;
        let x = state.real().ok_or_else(|| config("Koopman sampler needs a real state"))?;
        Ok(State::Real(self.flow(h, x)))
    }

    fn has_sampler(&self) -> bool {
        true
    }
}

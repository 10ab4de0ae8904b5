//! Named initial data and test functions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{GridFunction, State, WeightedGrid};
use crate::tolerance::probe_coordinate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Probe {
    Const { value: f64 },
    Linear,
    Quadratic,
    NegQuadratic,
    Sin,
    Cos,
    /// Smooth bump of the given height supported in `|x − center| < radius`.
    Bump {
        center: f64,
        radius: f64,
        #[serde(default = "one")]
        height: f64,
    },
    /// `max(x − K, 0)`.
    CallPayoff { strike: f64 },
}

fn one() -> f64 {
    1.0
}

/// `C^∞` bump equal to 1 on `[0, 1/2]`, 0 on `[1, ∞)`, decreasing in between.
pub fn smooth_step(r: f64) -> f64 {
    fn psi(s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            (-1.0 / s).exp()
        }
    }
    let r = r.abs();
    if r <= 0.5 {
        return 1.0;
    }
    if r >= 1.0 {
        return 0.0;
    }
    // transition on (1/2, 1) rescaled to (0, 1)
    let s = 2.0 * (r - 0.5);
    let a = psi(1.0 - s);
    a / (a + psi(s))
}

impl Probe {
    pub fn eval(&self, state: State) -> f64 {
        let x = probe_coordinate(state);
        match *self {
            Probe::Const { value } => value,
            Probe::Linear => x,
            Probe::Quadratic => x * x,
            Probe::NegQuadratic => -x * x,
            Probe::Sin => x.sin(),
            Probe::Cos => x.cos(),
            Probe::Bump { center, radius, height } => height * smooth_step((x - center) / radius),
            Probe::CallPayoff { strike } => (x - strike).max(0.0),
        }
    }

    pub fn sample(&self, grid: &Arc<WeightedGrid>) -> Result<GridFunction> {
        GridFunction::from_fn(grid.clone(), |s| self.eval(s))
    }

    pub fn name(&self) -> String {
        match self {
            Probe::Const { value } => format!("const({value})"),
            Probe::Linear => "linear".into(),
            Probe::Quadratic => "quadratic".into(),
            Probe::NegQuadratic => "neg-quadratic".into(),
            Probe::Sin => "sin".into(),
            Probe::Cos => "cos".into(),
            Probe::Bump { center, radius, height } => format!("bump({center}, {radius}, {height})"),
            Probe::CallPayoff { strike } => format!("call-payoff({strike})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_shape() {
        assert_eq!(smooth_step(0.0), 1.0);
        assert_eq!(smooth_step(0.5), 1.0);
        assert_eq!(smooth_step(1.0), 0.0);
        assert_eq!(smooth_step(-3.0), 0.0);
        assert!((smooth_step(0.75) - 0.5).abs() < 1e-15);
        let xs: Vec<f64> = (0..=100).map(|i| smooth_step(i as f64 / 100.0)).collect();
        assert!(xs.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn probe_values() {
        let x = State::Real(1.5);
        assert_eq!(Probe::CallPayoff { strike: 1.0 }.eval(x), 0.5);
        assert_eq!(Probe::CallPayoff { strike: 2.0 }.eval(x), 0.0);
        assert_eq!(Probe::NegQuadratic.eval(x), -2.25);
        assert_eq!(Probe::Bump { center: 1.5, radius: 1.0, height: 2.0 }.eval(x), 2.0);
    }

    #[test]
    fn probes_parse_from_toml_like_json() {
        let p: Probe = serde_json::from_str(r#"{"kind":"call-payoff","strike":0.5}"#).unwrap();
        assert_eq!(p, Probe::CallPayoff { strike: 0.5 });
        let b: Probe = serde_json::from_str(r#"{"kind":"bump","center":0,"radius":1}"#).unwrap();
        assert_eq!(b.eval(State::Real(0.0)), 1.0);
    }
}

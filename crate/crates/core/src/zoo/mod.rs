//! Concrete member semigroups.
//!
//! Every member is discretized so that its rows are nonnegative weights
//! divided by their own sum, computed in the same order. This keeps
//! monotonicity and `S(t)1 = 1` exact in floating point.

pub mod chain;
pub mod expr;
pub mod gbm;
pub mod heat;
pub mod koopman;
pub mod ou;
pub mod scaled;
pub mod stable;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{Axis, BoundaryPolicy, WeightedGrid};
use crate::operator::TransitionOperator;

pub use chain::Chain;
pub use gbm::Gbm;
pub use heat::Heat;
pub use koopman::Koopman;
pub use ou::OrnsteinUhlenbeck;
pub use scaled::Scaled;
pub use stable::StableLevy;

/// Serializable description of one member, resolved against a grid by [`MemberSpec::build`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MemberSpec {
    Heat { sigma: f64 },
    Gbm { mu: f64, sigma: f64 },
    Ou { b: Vec<Vec<f64>>, m: Vec<f64>, c: Vec<Vec<f64>> },
    Koopman { f: String, lipschitz_hint: f64 },
    Stable { alpha: f64 },
    Chain { q: Vec<Vec<f64>> },
    Scaled { lambda: f64, base: Box<MemberSpec> },
}

impl MemberSpec {
    pub fn build(&self, grid: &Arc<WeightedGrid>) -> Result<Arc<dyn TransitionOperator>> {
        Ok(match self {
            MemberSpec::Heat { sigma } => Arc::new(Heat::new(grid.clone(), *sigma)?),
            MemberSpec::Gbm { mu, sigma } => Arc::new(Gbm::new(grid.clone(), *mu, *sigma)?),
            MemberSpec::Ou { b, m, c } => Arc::new(OrnsteinUhlenbeck::new(grid.clone(), b, m, c)?),
            MemberSpec::Koopman { f, lipschitz_hint } => {
                Arc::new(Koopman::parse(grid.clone(), f, *lipschitz_hint)?)
            }
            MemberSpec::Stable { alpha } => Arc::new(StableLevy::new(grid.clone(), *alpha)?),
            MemberSpec::Chain { q } => Arc::new(Chain::new(grid.clone(), q.clone())?),
            MemberSpec::Scaled { lambda, base } => Arc::new(Scaled::new(base.build(grid)?, *lambda)?),
        })
    }
}

/// Standard normal quadrature on `[-half, half]` with spacing `delta`.
/// Weights are the unnormalized density; callers divide by their sum.
pub(crate) fn gauss_nodes(delta: f64, half: f64) -> (Vec<f64>, Vec<f64>) {
    let k = (half / delta).floor() as i64;
    let z: Vec<f64> = (-k..=k).map(|i| i as f64 * delta).collect();
    let w = z.iter().map(|z| (-0.5 * z * z).exp()).collect();
    (z, w)
}

/// Maps an out-of-range index onto the grid by mirroring at both ends.
#[inline]
pub(crate) fn fold_index(m: i64, n: usize) -> usize {
    let n = n as i64;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let r = m.rem_euclid(period);
    (if r > n - 1 { period - r } else { r }) as usize
}

/// Applies a symmetric discrete kernel `w[radius + j]`, `|j| <= radius`, on a line.
pub(crate) fn convolve_line(
    n: usize,
    periodic: bool,
    boundary: BoundaryPolicy,
    w: &[f64],
    u: &[f64],
) -> Vec<f64> {
    let radius = (w.len() / 2) as i64;
    let total: f64 = w.iter().sum();
    let row = |i: usize| -> f64 {
        let i = i as i64;
        let interior = i >= radius && i + radius < n as i64;
        let mut num = 0.0;
        if interior {
            for (k, wk) in w.iter().enumerate() {
                num += wk * u[(i + k as i64 - radius) as usize];
            }
            return num / total;
        }
        if periodic {
            for (k, wk) in w.iter().enumerate() {
                num += wk * u[(i + k as i64 - radius).rem_euclid(n as i64) as usize];
            }
            return num / total;
        }
        match boundary {
            BoundaryPolicy::Reflect => {
                for (k, wk) in w.iter().enumerate() {
                    num += wk * u[fold_index(i + k as i64 - radius, n)];
                }
                num / total
            }
            BoundaryPolicy::MassRenormalize => {
                let mut den = 0.0;
                for (k, wk) in w.iter().enumerate() {
                    let m = i + k as i64 - radius;
                    if m >= 0 && m < n as i64 {
                        num += wk * u[m as usize];
                        den += wk;
                    }
                }
                num / den
            }
        }
    };
    if n >= 512 {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    }
}

/// Central first and second differences on a line. Returns `(d1, d2, valid)`;
/// end rows of a bounded line are invalid.
pub(crate) fn line_derivatives(axis: &Axis, periodic: bool, u: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let n = u.len();
    let h = axis.step;
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    let mut valid = vec![true; n];
    for i in 0..n {
        let (l, r) = if periodic {
            ((i + n - 1) % n, (i + 1) % n)
        } else if i == 0 || i + 1 == n {
            valid[i] = false;
            continue;
        } else {
            (i - 1, i + 1)
        };
        d1[i] = (u[r] - u[l]) / (2.0 * h);
        d2[i] = (u[r] - 2.0 * u[i] + u[l]) / (h * h);
    }
    (d1, d2, valid)
}

/// Runs `f` over rows, in parallel for large grids; results are in row order.
pub(crate) fn map_rows(n: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> Vec<f64> {
    if n >= 512 {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

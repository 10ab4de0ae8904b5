//! Symmetric stable semigroups `exp(−t(−Δ)^α)` on a periodic grid.
//!
//! The kernel is obtained from the Fourier multiplier `e^{−t|ξ|^{2α}}` by an
//! inverse FFT and then applied as a direct circular convolution, which keeps
//! the rows nonnegative. For very short times the discrete kernel can carry
//! tiny negative ripples; those are clipped and the kernel renormalized.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{config, Result};
use crate::grid::{GridFunction, Kappa, WeightedGrid};
use crate::operator::{check_grid, check_time, FamilyBounds, GeneratorField, TransitionOperator};
use crate::zoo::map_rows;

#[derive(Debug, Clone)]
pub struct StableLevy {
    grid: Arc<WeightedGrid>,
    alpha: f64,
}

impl StableLevy {
    pub fn new(grid: Arc<WeightedGrid>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(config(format!("stability order must lie in (0, 1), got {alpha}")));
        }
        if !grid.is_periodic() {
            return Err(config("stable members need a uniform periodic grid"));
        }
        if !matches!(grid.kappa_kind(), Kappa::Constant { .. }) {
            return Err(config("stable members need a constant weight"));
        }
        Ok(StableLevy { grid, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn frequencies(&self) -> Vec<f64> {
        let n = self.grid.len();
        let period = n as f64 * self.grid.line_axis().expect("periodic line").step;
        (0..n)
            .map(|k| {
                let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                2.0 * std::f64::consts::PI * k / period
            })
            .collect()
    }

    fn symbol(&self, xi: f64) -> f64 {
        xi.abs().powf(2.0 * self.alpha)
    }

    /// Convolution kernel `k_j` for time `t` before clipping.
    pub fn raw_kernel(&self, t: f64) -> Vec<f64> {
        let n = self.grid.len();
        let mut buf: Vec<Complex<f64>> = self
            .frequencies()
            .iter()
            .map(|&xi| Complex::new((-t * self.symbol(xi)).exp(), 0.0))
            .collect();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        buf.iter().map(|c| c.re / n as f64).collect()
    }

    /// Most negative raw kernel entry at time `t` (zero when no clipping happens).
    pub fn clipped_mass(&self, t: f64) -> f64 {
        self.raw_kernel(t).iter().fold(0.0, |m: f64, &v| m.min(v))
    }
}

impl TransitionOperator for StableLevy {
    fn label(&self) -> String {
        format!("stable(alpha={})", self.alpha)
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
        let n = self.grid.len();
        let kernel: Vec<f64> = self.raw_kernel(t).into_iter().map(|v| v.max(0.0)).collect();
        let total: f64 = kernel.iter().sum();
        let v = u.values();
        let values = map_rows(n, |i| {
            let mut num = 0.0;
            for (j, k) in kernel.iter().enumerate() {
                num += k * v[(i + n - j) % n];
            }
            num / total
        });
        Ok(GridFunction::from_parts(self.grid.clone(), values))
    }

    fn generator(&self, u: &GridFunction) -> Result<GeneratorField> {
        check_grid(self, u)?;
        let n = self.grid.len();
        let mut buf: Vec<Complex<f64>> = u.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(n).process(&mut buf);
        for (c, xi) in buf.iter_mut().zip(self.frequencies()) {
            *c *= -self.symbol(xi);
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        Ok(GeneratorField::all_valid(buf.iter().map(|c| c.re / n as f64).collect()))
    }

    fn growth_bounds(&self) -> FamilyBounds {
        FamilyBounds::default()
    }

    fn propagates_lipschitz(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Arc<WeightedGrid> {
        WeightedGrid::periodic(0.0, 2.0 * PI, 2.0 * PI / n as f64).unwrap().into_shared()
    }

    #[test]
    fn single_mode_multiplier() {
        let g = grid(256);
        let s = StableLevy::new(g.clone(), 0.5).unwrap();
        let u = GridFunction::from_fn(g.clone(), |x| (2.0 * x.real().unwrap()).cos()).unwrap();
        let v = s.apply(1.0, &u).unwrap();
        let decay = (-2.0f64).exp();
        for (x, y) in g.xs().iter().zip(v.values()) {
            assert!((y - decay * (2.0 * x).cos()).abs() < 1e-12);
        }
        let gen = s.generator(&u).unwrap();
        for (x, y) in g.xs().iter().zip(&gen.values) {
            assert!((y + 2.0 * (2.0 * x).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn constants_and_zero_time() {
        let g = grid(128);
        let s = StableLevy::new(g.clone(), 0.9).unwrap();
        let one = s.apply(1e-3, &GridFunction::constant(g.clone(), 1.0)).unwrap();
        assert!(one.values().iter().all(|&v| v == 1.0));
        let u = GridFunction::from_fn(g, |x| x.real().unwrap().sin()).unwrap();
        assert_eq!(s.apply(0.0, &u).unwrap(), u);
    }

    #[test]
    fn kernel_is_nonnegative_at_moderate_times() {
        let s = StableLevy::new(grid(256), 0.5).unwrap();
        assert!(s.clipped_mass(0.25) >= -1e-15);
    }

    #[test]
    fn rejects_bad_setup() {
        assert!(StableLevy::new(grid(16), 1.0).is_err());
        let bounded = WeightedGrid::line(0.0, 1.0, 0.1).unwrap().into_shared();
        assert!(StableLevy::new(bounded, 0.5).is_err());
    }
}

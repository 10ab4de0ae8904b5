//! Finite-dimensional Ornstein–Uhlenbeck processes `dX = (BX + m)dt + dW^C`, `d ∈ {1, 2}`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{config, Error, Result};
use crate::grid::{interp_line, interp_plane, GridFunction, Kappa, Layout, State, WeightedGrid};
use crate::operator::{check_grid, check_time, FamilyBounds, GeneratorField, TransitionOperator};
use crate::zoo::{gauss_nodes, line_derivatives, map_rows};

const SIMPSON_RTOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-12;

/// Transition law after time `t`: `X_t ~ N(M x + b, L Lᵀ)`.
#[derive(Clone, Debug)]
pub struct GaussianLaw {
    pub m: DMatrix<f64>,
    pub b: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub root: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct OrnsteinUhlenbeck {
    grid: Arc<WeightedGrid>,
    b: DMatrix<f64>,
    m: DVector<f64>,
    c: DMatrix<f64>,
    bounds: FamilyBounds,
}

fn matrix(rows: &[Vec<f64>], d: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(config(format!("{name} must be a {d}x{d} matrix")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(config(format!("{name} has non-finite entries")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl OrnsteinUhlenbeck {
    pub fn new(grid: Arc<WeightedGrid>, b: &[Vec<f64>], m: &[f64], c: &[Vec<f64>]) -> Result<Self> {
        let d = match grid.layout() {
            Layout::Line { periodic: false, .. } => 1,
            Layout::Plane { .. } => 2,
            _ => return Err(config("OU members need a bounded line or a plane grid")),
        };
        let b = matrix(b, d, "B")?;
        let c = matrix(c, d, "C")?;
        if m.len() != d || m.iter().any(|v| !v.is_finite()) {
            return Err(config(format!("m must be a finite vector of length {d}")));
        }
        let m = DVector::from_column_slice(m);
        let scale = c.amax().max(1.0);
        if (&c - c.transpose()).amax() > PSD_TOL * scale {
            return Err(config("C must be symmetric"));
        }
        if SymmetricEigen::new(c.clone()).eigenvalues.min() < -PSD_TOL * scale {
            return Err(config("C must be positive semidefinite"));
        }
        let beta = b.singular_values().max() + m.norm() + c.trace();
        let alpha = match grid.kappa_kind() {
            Kappa::Constant { .. } => 0.0,
            Kappa::InverseQuadratic { q } if q <= 1.0 => 2.0 * q * beta,
            _ => {
                return Err(config(
                    "OU members need a constant weight or (1+|x|²)^{-q} with q <= 1",
                ))
            }
        };
        Ok(OrnsteinUhlenbeck { grid, b, m, c, bounds: FamilyBounds { alpha, beta } })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    /// Mean map and covariance after time `t`.
    pub fn law(&self, t: f64) -> Result<GaussianLaw> {
        check_time(t)?;
        let d = self.dim();
        let m = (&self.b * t).exp();
        // integrand packs e^{sB} m followed by the entries of e^{sB} C e^{sBᵀ}
        let integrand = |s: f64| -> Vec<f64> {
            let e = (&self.b * s).exp();
            let mean = &e * &self.m;
            let cov = &e * &self.c * e.transpose();
            mean.iter().chain(cov.iter()).copied().collect()
        };
        let packed = adaptive_simpson(&integrand, 0.0, t, SIMPSON_RTOL);
        let b = DVector::from_column_slice(&packed[..d]);
        let mut cov = DMatrix::from_column_slice(d, d, &packed[d..]);
        cov = 0.5 * (&cov + cov.transpose());
        let eig = SymmetricEigen::new(cov.clone());
        let scale = cov.amax().max(1.0);
        if eig.eigenvalues.min() < -PSD_TOL * scale {
            return Err(Error::NumericalDegeneracy(format!(
                "integrated covariance has eigenvalue {}",
                eig.eigenvalues.min()
            )));
        }
        let sqrt = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let root = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt);
        Ok(GaussianLaw { m, b, cov, root })
    }
}

/// Adaptive Simpson quadrature for vector-valued integrands.
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> Vec<f64>, a: f64, b: f64, rtol: f64) -> Vec<f64> {
    fn simpson(fa: &[f64], fm: &[f64], fb: &[f64], h: f64) -> Vec<f64> {
        fa.iter().zip(fm).zip(fb).map(|((a, m), b)| h / 6.0 * (a + 4.0 * m + b)).collect()
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> Vec<f64>,
        a: f64,
        b: f64,
        fa: &[f64],
        fm: &[f64],
        fb: &[f64],
        whole: Vec<f64>,
        tol: f64,
        depth: u32,
    ) -> Vec<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, &flm, fm, m - a);
        let right = simpson(fm, &frm, fb, b - m);
        let err = left
            .iter()
            .zip(&right)
            .zip(&whole)
            .map(|((l, r), w)| (l + r - w).abs())
            .fold(0.0, f64::max);
        if depth == 0 || err <= 15.0 * tol {
            return left
                .iter()
                .zip(&right)
                .zip(&whole)
                .map(|((l, r), w)| l + r + (l + r - w) / 15.0)
                .collect();
        }
        let mut l = recurse(f, a, m, fa, &flm, fm, left, 0.5 * tol, depth - 1);
        let r = recurse(f, m, b, fm, &frm, fb, right, 0.5 * tol, depth - 1);
        l.iter_mut().zip(r).for_each(|(x, y)| *x += y);
        l
    }
    if b == a {
        return vec![0.0; f(a).len()];
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(&fa, &fm, &fb, b - a);
    let scale = whole.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let tol = (rtol * scale).max(f64::MIN_POSITIVE);
    recurse(f, a, b, &fa, &fm, &fb, whole, tol, 40)
}

impl TransitionOperator for OrnsteinUhlenbeck {
    fn label(&self) -> String {
        if self.dim() == 1 {
            format!("ou(b={}, m={}, c={})", self.b[(0, 0)], self.m[0], self.c[(0, 0)])
        } else {
            format!(
                "ou2(b=[{}, {}; {}, {}], m=[{}, {}], c=[{}, {}; {}, {}])",
                self.b[(0, 0)],
                self.b[(0, 1)],
                self.b[(1, 0)],
                self.b[(1, 1)],
                self.m[0],
                self.m[1],
                self.c[(0, 0)],
                self.c[(0, 1)],
                self.c[(1, 0)],
                self.c[(1, 1)]
            )
        }
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
        let law = self.law(t)?;
        let v = u.values();
        let values = match self.grid.layout() {
            Layout::Line { axis, .. } => {
                let (a, b, sd) = (law.m[(0, 0)], law.b[0], law.root[(0, 0)].abs());
                let (z, w) = if sd > 0.0 {
                    // For pure diffusion the nodes x + sd·z land on grid points.
                    gauss_nodes((axis.step / sd).clamp(0.004, 0.25), 8.0)
                } else {
                    (vec![0.0], vec![1.0])
                };
                let total: f64 = w.iter().sum();
                map_rows(axis.len, |i| {
                    let centre = a * axis.coord(i) + b;
                    let mut num = 0.0;
                    for (z, w) in z.iter().zip(&w) {
                        num += w * interp_line(axis, v, centre + sd * z);
                    }
                    num / total
                })
            }
            Layout::Plane { x, y } => {
                // Tensor nodes along each nondegenerate principal direction; the trapezoid
                // rule is spectrally accurate for Gaussian weights at this spacing.
                let mut dirs = Vec::new();
                for k in 0..2 {
                    let col = [law.root[(0, k)], law.root[(1, k)]];
                    if col[0].hypot(col[1]) > 0.0 {
                        dirs.push(col);
                    }
                }
                let (z, w) = gauss_nodes(0.5, 6.5);
                let mut offsets = vec![([0.0, 0.0], 1.0)];
                for dir in &dirs {
                    let mut next = Vec::with_capacity(offsets.len() * z.len());
                    for (o, ow) in &offsets {
                        for (zk, wk) in z.iter().zip(&w) {
                            next.push(([o[0] + dir[0] * zk, o[1] + dir[1] * zk], ow * wk));
                        }
                    }
                    offsets = next;
                }
                let total: f64 = offsets.iter().map(|(_, w)| w).sum();
                let ny = y.len;
                map_rows(self.grid.len(), |k| {
                    let (px, py) = (x.coord(k / ny), y.coord(k % ny));
                    let cx = law.m[(0, 0)] * px + law.m[(0, 1)] * py + law.b[0];
                    let cy = law.m[(1, 0)] * px + law.m[(1, 1)] * py + law.b[1];
                    let mut num = 0.0;
                    for (o, w) in &offsets {
                        num += w * interp_plane(x, y, v, cx + o[0], cy + o[1]);
                    }
                    num / total
                })
            }
            Layout::Labels { .. } => unreachable!("rejected at construction"),
        };
        Ok(GridFunction::from_parts(self.grid.clone(), values))
    }

    fn generator(&self, u: &GridFunction) -> Result<GeneratorField> {
        check_grid(self, u)?;
        let v = u.values();
        match self.grid.layout() {
            Layout::Line { axis, .. } => {
                let (d1, d2, valid) = line_derivatives(axis, false, v);
                let (b, m, c) = (self.b[(0, 0)], self.m[0], self.c[(0, 0)]);
                let values = (0..axis.len)
                    .map(|i| d1[i] * (b * axis.coord(i) + m) + 0.5 * c * d2[i])
                    .collect();
                Ok(GeneratorField { values, valid })
            }
            Layout::Plane { x, y } => {
                let (nx, ny) = (x.len, y.len);
                let (hx, hy) = (x.step, y.step);
                let mut values = vec![0.0; nx * ny];
                let mut valid = vec![false; nx * ny];
                for i in 1..nx.saturating_sub(1) {
                    for j in 1..ny.saturating_sub(1) {
                        let k = i * ny + j;
                        let ux = (v[k + ny] - v[k - ny]) / (2.0 * hx);
                        let uy = (v[k + 1] - v[k - 1]) / (2.0 * hy);
                        let uxx = (v[k + ny] - 2.0 * v[k] + v[k - ny]) / (hx * hx);
                        let uyy = (v[k + 1] - 2.0 * v[k] + v[k - 1]) / (hy * hy);
                        let uxy = (v[k + ny + 1] - v[k + ny - 1] - v[k - ny + 1] + v[k - ny - 1])
                            / (4.0 * hx * hy);
                        let (px, py) = (x.coord(i), y.coord(j));
                        let fx = self.b[(0, 0)] * px + self.b[(0, 1)] * py + self.m[0];
                        let fy = self.b[(1, 0)] * px + self.b[(1, 1)] * py + self.m[1];
                        let tr = self.c[(0, 0)] * uxx
                            + (self.c[(0, 1)] + self.c[(1, 0)]) * uxy
                            + self.c[(1, 1)] * uyy;
                        values[k] = ux * fx + uy * fy + 0.5 * tr;
                        valid[k] = true;
                    }
                }
                Ok(GeneratorField { values, valid })
            }
            Layout::Labels { .. } => unreachable!("rejected at construction"),
        }
    }

    fn growth_bounds(&self) -> FamilyBounds {
        self.bounds
    }

    fn propagates_lipschitz(&self) -> bool {
        self.dim() == 1
    }

    fn sample_step(&self, state: State, h: f64, rng: &mut dyn RngCore) -> Result<State> {
        let law = self.law(h)?;
        let x = match state {
            State::Real(x) if self.dim() == 1 => DVector::from_element(1, x),
            State::Plane(p) if self.dim() == 2 => DVector::from_column_slice(&p),
            _ => return Err(config("OU sampler got a state of the wrong dimension")),
        };
        let z = DVector::from_fn(self.dim(), |_, _| StandardNormal.sample(&mut *rng));
        let y = &law.m * x + &law.b + &law.root * z;
        Ok(if self.dim() == 1 { State::Real(y[0]) } else { State::Plane([y[0], y[1]]) })
    }

    fn has_sampler(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;

    fn line() -> Arc<WeightedGrid> {
        WeightedGrid::line(-6.0, 6.0, 0.01).unwrap().into_shared()
    }

    fn ou1(g: &Arc<WeightedGrid>, b: f64, m: f64, c: f64) -> OrnsteinUhlenbeck {
        OrnsteinUhlenbeck::new(g.clone(), &[vec![b]], &[m], &[vec![c]]).unwrap()
    }

    #[test]
    fn zero_parameters_give_identity() {
        let g = line();
        let u = GridFunction::from_fn(g.clone(), |s| s.real().unwrap().sin()).unwrap();
        let v = ou1(&g, 0.0, 0.0, 0.0).apply(0.8, &u).unwrap();
        assert_eq!(v, u);
    }

    #[test]
    fn pure_drift_translates() {
        let g = line();
        let u = GridFunction::from_fn(g.clone(), |s| s.real().unwrap()).unwrap();
        let v = ou1(&g, 0.0, 1.0, 0.0).apply(0.5, &u).unwrap();
        for (x, y) in g.xs().iter().zip(v.values()) {
            if *x <= 5.0 {
                assert!((y - (x + 0.5)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn brownian_second_moment() {
        let g = line();
        let u = GridFunction::from_fn(g.clone(), |s| s.real().unwrap().powi(2)).unwrap();
        let v = ou1(&g, 0.0, 0.0, 1.0).apply(0.25, &u).unwrap();
        for (x, y) in g.xs().iter().zip(v.values()) {
            if x.abs() <= 1.0 {
                assert!((y - (x * x + 0.25)).abs() < 1e-9, "x={x} y={y}");
            }
        }
    }

    #[test]
    fn law_matches_scalar_closed_form() {
        let g = line();
        let (b, m, c, t) = (-0.7f64, 0.3, 0.5, 1.3);
        let law = ou1(&g, b, m, c).law(t).unwrap();
        let e = (b * t).exp();
        assert!((law.m[(0, 0)] - e).abs() < 1e-14);
        assert!((law.b[0] - m * (e - 1.0) / b).abs() < 1e-12);
        let var = c * ((2.0 * b * t).exp() - 1.0) / (2.0 * b);
        assert!((law.cov[(0, 0)] - var).abs() < 1e-10 * var);
    }

    #[test]
    fn plane_law_is_psd_and_symmetric() {
        let ax = Axis::new(-2.0, 2.0, 0.1).unwrap();
        let g = WeightedGrid::plane(ax, ax).unwrap().into_shared();
        let ou = OrnsteinUhlenbeck::new(
            g,
            &[vec![-1.0, 0.5], vec![-0.5, -1.0]],
            &[0.1, 0.0],
            &[vec![0.4, 0.1], vec![0.1, 0.2]],
        )
        .unwrap();
        let law = ou.law(0.6).unwrap();
        assert!((&law.cov - law.cov.transpose()).amax() == 0.0);
        assert!(SymmetricEigen::new(law.cov.clone()).eigenvalues.min() > 0.0);
        let rr = &law.root * law.root.transpose();
        assert!((rr - &law.cov).amax() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_covariance() {
        let g = line();
        assert!(OrnsteinUhlenbeck::new(g, &[vec![0.0]], &[0.0], &[vec![-1.0]]).is_err());
    }

    #[test]
    fn simpson_integrates_exponential() {
        let v = adaptive_simpson(&|s: f64| vec![s.exp(), s * s], 0.0, 2.0, 1e-12);
        assert!((v[0] - (2f64.exp() - 1.0)).abs() < 1e-10);
        assert!((v[1] - 8.0 / 3.0).abs() < 1e-12);
    }
}

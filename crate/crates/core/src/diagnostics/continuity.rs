//! Strong-continuity probes: rates `r(h) = max_λ ‖S_λ(h)u − u‖_κ` and the
//! decay of envelopes of cut-off functions at their own centre.

use serde::{Deserialize, Serialize};

use crate::envelope::{member_values, nisio_value, Refine};
use crate::error::{invalid, Error, Result};
use crate::grid::{GridFunction, Layout, Region, State};
use crate::operator::SemigroupFamily;
use crate::probe::smooth_step;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub h: Vec<f64>,
    pub rates: Vec<f64>,
    /// Least-squares slope of `r(h) ≈ L h` over the three smallest `h`.
    pub linear_fit: f64,
    /// `‖r − L h‖₂ / ‖r‖₂` over the fitted points (zero when `r` vanishes there).
    pub relative_residual: f64,
    /// Slope of `log r` against `log h` over all `h` with `r > 0`.
    pub empirical_order: Option<f64>,
}

fn check_h_list(h_list: &[f64], allow_zero: bool) -> Result<()> {
    if h_list.is_empty() {
        return Err(invalid("h list is empty"));
    }
    for &h in h_list {
        if !(h.is_finite() && (h > 0.0 || (allow_zero && h == 0.0))) {
            return Err(invalid(format!("invalid step {h}")));
        }
    }
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("h list must be strictly decreasing"));
    }
    Ok(())
}

/// Least-squares slope of `log y` on `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn strong_continuity_probe(
    family: &SemigroupFamily,
    u: &GridFunction,
    h_list: &[f64],
    region: &Region,
) -> Result<ContinuityReport> {
    check_h_list(h_list, false)?;
    family.check(u)?;
    let rates = h_list
        .iter()
        .map(|&h| {
            member_values(family, h, u)?
                .iter()
                .map(|v| v.sub(u)?.weighted_norm_on(region))
                .try_fold(0.0f64, |m, r| r.map(|r| m.max(r)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let k = h_list.len().saturating_sub(3);
    let (hs, rs) = (&h_list[k..], &rates[k..]);
    let shh: f64 = hs.iter().map(|h| h * h).sum();
    let linear_fit = hs.iter().zip(rs).map(|(h, r)| h * r).sum::<f64>() / shh;
    let rnorm = rs.iter().map(|r| r * r).sum::<f64>().sqrt();
    let resid = hs.iter().zip(rs).map(|(h, r)| (r - linear_fit * h).powi(2)).sum::<f64>().sqrt();
    let relative_residual = if rnorm > 0.0 { resid / rnorm } else { 0.0 };
    Ok(ContinuityReport {
        h: h_list.to_vec(),
        empirical_order: log_log_slope(h_list, &rates),
        rates,
        linear_fit,
        relative_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub delta: f64,
    pub h: Vec<f64>,
    /// `max_x κ(x)(S(h)φ_x)(x)` per `h`.
    pub values: Vec<f64>,
    /// `sup_{λ, x} ‖A_λ φ_x‖_κ` over valid generator rows.
    pub generator_bound: f64,
    /// `L e^{α h₀} h` with `h₀ = max h`.
    pub slope_bound: Vec<f64>,
}

/// Cut-off function centred at grid node `centre`: 0 there, 1 at distance `>= delta`.
pub fn cutoff_function(family: &SemigroupFamily, centre: usize, delta: f64) -> Result<GridFunction> {
    let grid = family.grid();
    let c = grid.state(centre);
    GridFunction::from_fn(grid.clone(), |s| 1.0 - smooth_step(grid.distance(c, s) / delta))
}

pub fn cutoff_decay_probe(
    family: &SemigroupFamily,
    delta: f64,
    centres: &[State],
    h_list: &[f64],
    refine: Refine,
) -> Result<CutoffReport> {
    check_h_list(h_list, true)?;
    let grid = family.grid();
    let spacing = match grid.layout() {
        Layout::Line { axis, .. } => Some(axis.step),
        Layout::Plane { x, y } => Some(x.step.max(y.step)),
        Layout::Labels { .. } => None,
    };
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("cut-off radius must be positive, got {delta}")));
    }
    if let Some(dx) = spacing {
        if delta < 2.0 * dx {
            return Err(Error::Resolution(format!(
                "cut-off radius {delta} is below two grid spacings ({dx})"
            )));
        }
    }
    if centres.is_empty() {
        return Err(invalid("no cut-off centres given"));
    }
    let idx: Vec<usize> = centres.iter().map(|&c| grid.nearest(c)).collect::<Result<_>>()?;
    let phis: Vec<GridFunction> = idx.iter().map(|&i| cutoff_function(family, i, delta)).collect::<Result<_>>()?;
    let kappa = grid.kappa();
    let mut values = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let mut worst = 0.0f64;
        for (phi, &i) in phis.iter().zip(&idx) {
            let v = nisio_value(family, h, phi, refine)?.value;
            worst = worst.max(kappa[i] * v.values()[i]);
        }
        values.push(worst);
    }
    let mut generator_bound = 0.0f64;
    for phi in &phis {
        for m in family.members() {
            let g = m.generator(phi)?;
            for ((v, ok), k) in g.values.iter().zip(&g.valid).zip(kappa) {
                if *ok {
                    generator_bound = generator_bound.max(k * v.abs());
                }
            }
        }
    }
    let h0 = h_list[0];
    let growth = (family.bounds().alpha * h0).exp();
    Ok(CutoffReport {
        delta,
        h: h_list.to_vec(),
        values,
        generator_bound,
        slope_bound: h_list.iter().map(|h| generator_bound * growth * h).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundaryPolicy, WeightedGrid};
    use crate::operator::TransitionOperator;
    use crate::zoo::{Chain, Heat};
    use std::sync::Arc;

    fn heat_family() -> SemigroupFamily {
        let g = WeightedGrid::line(-8.0, 8.0, 0.01)
            .unwrap()
            .with_boundary(BoundaryPolicy::Reflect)
            .into_shared();
        SemigroupFamily::new(vec![
            Arc::new(Heat::new(g.clone(), 0.5).unwrap()) as Arc<dyn TransitionOperator>,
            Arc::new(Heat::new(g, 1.0).unwrap()),
        ])
        .unwrap()
    }

    #[test]
    fn constants_do_not_move() {
        let fam = heat_family();
        let r = strong_continuity_probe(&fam, &GridFunction::constant(fam.grid().clone(), 1.0), &[0.1, 0.05, 0.01], &Region::Full).unwrap();
        assert!(r.rates.iter().all(|&v| v == 0.0));
        assert_eq!(r.relative_residual, 0.0);
    }

    #[test]
    fn quadratic_rates_are_linear() {
        let fam = heat_family();
        let u = GridFunction::from_fn(fam.grid().clone(), |s| s.real().unwrap().powi(2)).unwrap();
        let region = Region::Interval { lo: -4.0, hi: 4.0 };
        let r = strong_continuity_probe(&fam, &u, &[0.1, 0.05, 0.025, 0.0125], &region).unwrap();
        for (h, v) in r.h.iter().zip(&r.rates) {
            assert!((v - h).abs() < 1e-9, "h={h} r={v}");
        }
        assert!((r.linear_fit - 1.0).abs() < 1e-8);
        assert!((r.empirical_order.unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cutoff_decays_and_vanishes_at_zero() {
        let fam = heat_family();
        let rep = cutoff_decay_probe(&fam, 1.0, &[State::Real(0.0), State::Real(1.0)], &[0.1, 0.01, 0.0], Refine::fixed(2)).unwrap();
        assert_eq!(rep.values[2], 0.0);
        assert!(rep.values[0] >= rep.values[1]);
        for (v, b) in rep.values.iter().zip(&rep.slope_bound) {
            assert!(v <= b);
        }
        assert!(matches!(
            cutoff_decay_probe(&fam, 0.015, &[State::Real(0.0)], &[0.1], Refine::fixed(1)),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn frozen_chain_cutoff_is_zero() {
        let g = WeightedGrid::labels(3).unwrap().into_shared();
        let fam = SemigroupFamily::singleton(Arc::new(Chain::new(g, vec![vec![0.0; 3]; 3]).unwrap()));
        let rep = cutoff_decay_probe(&fam, 1.0, &[State::Label(0), State::Label(2)], &[1.0, 0.5], Refine::fixed(2)).unwrap();
        assert!(rep.values.iter().all(|&v| v == 0.0));
    }
}

//! Classical residual of `∂_t u = max_λ A_λ u` and finite-difference
//! consistency of member generators.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{GridFunction, Region};
use crate::operator::{SemigroupFamily, TransitionOperator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViscosityReport {
    pub dt: f64,
    /// Residual per snapshot and grid point; `None` where some generator row is
    /// invalid or the point lies outside the region.
    pub residual: Vec<Vec<Option<f64>>>,
    /// Largest `|residual|` over interior snapshots (ends excluded).
    pub max_interior_residual: f64,
    /// Largest `|residual|` at the two end snapshots (one-sided differences).
    pub max_end_residual: f64,
}

/// `max_λ A_λ u` with the rows where every member is valid.
pub fn hamiltonian(family: &SemigroupFamily, u: &GridFunction) -> Result<(Vec<f64>, Vec<bool>)> {
    let mut best = vec![f64::NEG_INFINITY; u.len()];
    let mut valid = vec![true; u.len()];
    for m in family.members() {
        let g = m.generator(u)?;
        for i in 0..u.len() {
            best[i] = best[i].max(g.values[i]);
            valid[i] &= g.valid[i];
        }
    }
    Ok((best, valid))
}

pub fn viscosity_residual(
    family: &SemigroupFamily,
    snapshots: &[GridFunction],
    dt: f64,
    region: &Region,
) -> Result<ViscosityReport> {
    if snapshots.len() < 3 {
        return Err(invalid(format!("need at least 3 snapshots, got {}", snapshots.len())));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid(format!("snapshot spacing must be positive, got {dt}")));
    }
    for s in snapshots {
        family.check(s)?;
    }
    let mask = region.mask(family.grid());
    let n = snapshots.len();
    let mut residual = Vec::with_capacity(n);
    let (mut interior, mut ends) = (0.0f64, 0.0f64);
    for k in 0..n {
        let v = |j: usize| snapshots[j].values();
        let (ham, valid) = hamiltonian(family, &snapshots[k])?;
        let row: Vec<Option<f64>> = (0..snapshots[k].len())
            .map(|i| {
                if !(valid[i] && mask[i]) {
                    return None;
                }
                let ut = if k == 0 {
                    (-3.0 * v(0)[i] + 4.0 * v(1)[i] - v(2)[i]) / (2.0 * dt)
                } else if k == n - 1 {
                    (3.0 * v(n - 1)[i] - 4.0 * v(n - 2)[i] + v(n - 3)[i]) / (2.0 * dt)
                } else {
                    (v(k + 1)[i] - v(k - 1)[i]) / (2.0 * dt)
                };
                Some(ut - ham[i])
            })
            .collect();
        let worst = row.iter().flatten().fold(0.0f64, |m, r| m.max(r.abs()));
        if k == 0 || k == n - 1 {
            ends = ends.max(worst);
        } else {
            interior = interior.max(worst);
        }
        residual.push(row);
    }
    Ok(ViscosityReport { dt, residual, max_interior_residual: interior, max_end_residual: ends })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub member: String,
    pub h: Vec<f64>,
    /// `‖(S(h)u − u)/h − Au‖_κ` over valid rows in the region.
    pub errors: Vec<f64>,
    /// Observed orders between consecutive `h`.
    pub orders: Vec<f64>,
    /// All errors are at or below the floor, so no order can be observed.
    pub exact: bool,
}

impl ConsistencyReport {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Order at least `order`, or exact up to the floor.
    pub fn passes(&self, order: f64) -> bool {
        self.exact || self.min_order() >= order
    }
}

pub fn generator_consistency(
    member: &dyn TransitionOperator,
    u: &GridFunction,
    h_list: &[f64],
    region: &Region,
    floor: f64,
) -> Result<ConsistencyReport> {
    if h_list.len() < 2 || h_list.iter().any(|&h| !(h > 0.0)) {
        return Err(invalid("need at least two positive steps"));
    }
    let gen = member.generator(u)?;
    let mask = region.mask(u.grid());
    let kappa = u.grid().kappa();
    let errors = h_list
        .iter()
        .map(|&h| {
            let v = member.apply(h, u)?;
            let mut worst = 0.0f64;
            for i in 0..u.len() {
                if gen.valid[i] && mask[i] {
                    let d = (v.values()[i] - u.values()[i]) / h;
                    worst = worst.max(kappa[i] * (d - gen.values[i]).abs());
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    let exact = errors.iter().all(|&e| e <= floor);
    let orders = errors
        .windows(2)
        .zip(h_list.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect();
    Ok(ConsistencyReport { member: member.label(), h: h_list.to_vec(), errors, orders, exact })
}

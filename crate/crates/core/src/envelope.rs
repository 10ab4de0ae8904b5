//! One-step envelopes `E_h u = max_λ S_λ(h)u`, their compositions along
//! partitions, and the dyadic limit `S(t)u = lim_n E_{t/2^n}^{2^n} u`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::GridFunction;
use crate::operator::{check_time, SemigroupFamily};
use crate::partition::Partition;

/// Stop rule for the dyadic refinement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Refine {
    pub max_level: u32,
    /// Successive-difference threshold in `‖·‖_κ`. Zero runs every level.
    pub tol: f64,
}

impl Default for Refine {
    fn default() -> Self {
        Refine { max_level: 12, tol: 1e-6 }
    }
}

impl Refine {
    pub fn new(max_level: u32, tol: f64) -> Result<Self> {
        let r = Refine { max_level, tol };
        r.validate()?;
        Ok(r)
    }

    /// Runs exactly levels `0..=level`.
    pub fn fixed(level: u32) -> Self {
        Refine { max_level: level, tol: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_level > 24 {
            return Err(invalid(format!("max_level {} is too deep", self.max_level)));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(invalid(format!("tolerance must be finite and >= 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Member values `S_λ(h)u` for every member, in member order.
pub fn member_values(family: &SemigroupFamily, h: f64, u: &GridFunction) -> Result<Vec<GridFunction>> {
    // Small grids cost less than a thread hand-off per member.
    if u.len() < 256 {
        family.members().iter().map(|m| m.apply(h, u)).collect()
    } else {
        family.members().par_iter().map(|m| m.apply(h, u)).collect()
    }
}

/// Pointwise maximum with the lowest member index recorded on ties.
pub(crate) fn pointwise_max(values: &[GridFunction]) -> (Vec<f64>, Vec<usize>) {
    let n = values[0].len();
    let mut best = values[0].values().to_vec();
    let mut arg = vec![0usize; n];
    for (k, v) in values.iter().enumerate().skip(1) {
        for ((b, a), &x) in best.iter_mut().zip(arg.iter_mut()).zip(v.values()) {
            if x > *b {
                *b = x;
                *a = k;
            }
        }
    }
    (best, arg)
}

/// `E_h u`.
pub fn envelope_step(family: &SemigroupFamily, h: f64, u: &GridFunction) -> Result<GridFunction> {
    Ok(envelope_step_with_argmax(family, h, u)?.0)
}

/// `E_h u` together with the maximizing member at every grid point.
pub fn envelope_step_with_argmax(
    family: &SemigroupFamily,
    h: f64,
    u: &GridFunction,
) -> Result<(GridFunction, Vec<usize>)> {
    check_time(h)?;
    family.check(u)?;
    if h == 0.0 {
        return Ok((u.clone(), vec![0; u.len()]));
    }
    let values = member_values(family, h, u)?;
    let (best, arg) = pointwise_max(&values);
    Ok((GridFunction::from_parts(family.grid().clone(), best), arg))
}

/// `E_π u = E_{t_1 − t_0} ⋯ E_{t_m − t_{m−1}} u`, the last gap acting first.
pub fn partition_apply(family: &SemigroupFamily, pi: &Partition, u: &GridFunction) -> Result<GridFunction> {
    family.check(u)?;
    let mut v = u.clone();
    for h in pi.gaps().into_iter().rev() {
        v = envelope_step(family, h, &v)?;
    }
    Ok(v)
}

#[derive(Clone, Debug)]
pub struct NisioValue {
    pub value: GridFunction,
    /// Iterates `E_{t/2^n}^{2^n} u` for `n = 0, 1, …`.
    pub levels: Vec<GridFunction>,
    /// `‖v_{n+1} − v_n‖_κ` for consecutive levels.
    pub increments: Vec<f64>,
    pub converged: bool,
    /// Largest `κ·(v_n − v_{n+1})` over levels and points, clipped at zero.
    /// Exact monotone refinement gives zero.
    pub monotone_defect: f64,
}

impl NisioValue {
    pub fn final_level(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }
}

/// Dyadically refined envelope value `S(t)u`.
pub fn nisio_value(family: &SemigroupFamily, t: f64, u: &GridFunction, refine: Refine) -> Result<NisioValue> {
    check_time(t)?;
    refine.validate()?;
    family.check(u)?;
    if t == 0.0 {
        return Ok(NisioValue {
            value: u.clone(),
            levels: vec![u.clone()],
            increments: Vec::new(),
            converged: true,
            monotone_defect: 0.0,
        });
    }
    let kappa = family.grid().kappa().to_vec();
    let mut levels = vec![partition_apply(family, &Partition::dyadic(t, 0)?, u)?];
    let mut increments = Vec::new();
    let mut monotone_defect = 0.0f64;
    let mut converged = false;
    for level in 1..=refine.max_level {
        let next = partition_apply(family, &Partition::dyadic(t, level)?, u)?;
        let prev = levels.last().expect("nonempty");
        let diff = next.sub(prev)?;
        let inc = diff.weighted_norm()?;
        let drop = diff
            .values()
            .iter()
            .zip(&kappa)
            .map(|(d, k)| -k * d)
            .fold(0.0, f64::max);
        monotone_defect = monotone_defect.max(drop);
        increments.push(inc);
        levels.push(next);
        if inc <= refine.tol {
            converged = true;
            break;
        }
    }
    Ok(NisioValue {
        value: levels.last().expect("nonempty").clone(),
        levels,
        increments,
        converged,
        monotone_defect,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DppReport {
    pub s: f64,
    pub t: f64,
    /// `‖S(s+t)u − S(s)S(t)u‖_κ`.
    pub defect: f64,
    pub converged: bool,
}

/// Dynamic programming defect `‖S(s+t)u − S(s)S(t)u‖_κ`.
pub fn dpp_check(family: &SemigroupFamily, s: f64, t: f64, u: &GridFunction, refine: Refine) -> Result<DppReport> {
    check_time(s)?;
    check_time(t)?;
    let whole = nisio_value(family, s + t, u, refine)?;
    let inner = nisio_value(family, t, u, refine)?;
    let outer = nisio_value(family, s, &inner.value, refine)?;
    let defect = whole.value.sub(&outer.value)?.weighted_norm()?;
    Ok(DppReport { s, t, defect, converged: whole.converged && inner.converged && outer.converged })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundReport {
    /// `min_λ min_x κ(x)(S(t)u − S_λ(t)u)(x)`.
    pub min_slack: f64,
    pub per_member: Vec<f64>,
}

/// Checks that the envelope dominates every member semigroup.
pub fn upper_bound_check(family: &SemigroupFamily, t: f64, u: &GridFunction, refine: Refine) -> Result<UpperBoundReport> {
    let envelope = nisio_value(family, t, u, refine)?.value;
    upper_bound_against(family, t, u, &envelope)
}

pub(crate) fn upper_bound_against(
    family: &SemigroupFamily,
    t: f64,
    u: &GridFunction,
    envelope: &GridFunction,
) -> Result<UpperBoundReport> {
    let kappa = family.grid().kappa();
    let per_member: Vec<f64> = member_values(family, t, u)?
        .iter()
        .map(|m| {
            envelope
                .values()
                .iter()
                .zip(m.values())
                .zip(kappa)
                .map(|((e, v), k)| k * (e - v))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let min_slack = per_member.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(UpperBoundReport { min_slack, per_member })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundaryPolicy, WeightedGrid};
    use crate::operator::TransitionOperator;
    use crate::zoo::Heat;
    use std::sync::Arc;

    fn heat_family() -> SemigroupFamily {
        let g = WeightedGrid::line(-8.0, 8.0, 0.02)
            .unwrap()
            .with_boundary(BoundaryPolicy::Reflect)
            .into_shared();
        let members: Vec<Arc<dyn TransitionOperator>> = vec![
            Arc::new(Heat::new(g.clone(), 0.5).unwrap()),
            Arc::new(Heat::new(g, 1.0).unwrap()),
        ];
        SemigroupFamily::new(members).unwrap()
    }

    fn probe(fam: &SemigroupFamily, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(fam.grid().clone(), |s| f(s.real().unwrap())).unwrap()
    }

    fn err_on(v: &GridFunction, oracle: impl Fn(f64) -> f64, half: f64) -> f64 {
        v.grid()
            .xs()
            .iter()
            .zip(v.values())
            .filter(|(x, _)| x.abs() <= half)
            .map(|(x, y)| (y - oracle(*x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn envelope_of_quadratics() {
        let fam = heat_family();
        let up = envelope_step(&fam, 0.1, &probe(&fam, |x| x * x)).unwrap();
        assert!(err_on(&up, |x| x * x + 0.1, 2.0) < 1e-10);
        let (down, arg) = envelope_step_with_argmax(&fam, 0.1, &probe(&fam, |x| -x * x)).unwrap();
        assert!(err_on(&down, |x| -x * x - 0.025, 2.0) < 1e-10);
        assert!(arg.iter().zip(down.grid().xs()).all(|(&a, x)| a == 0 || x.abs() > 2.0));
        let one = envelope_step(&fam, 0.1, &GridFunction::constant(fam.grid().clone(), 1.0)).unwrap();
        assert!(one.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn partition_composition() {
        let fam = heat_family();
        let u = probe(&fam, |x| x * x);
        assert_eq!(partition_apply(&fam, &Partition::trivial(), &u).unwrap(), u);
        assert_eq!(
            partition_apply(&fam, &Partition::new(vec![0.0, 0.3]).unwrap(), &u).unwrap(),
            envelope_step(&fam, 0.3, &u).unwrap()
        );
        let v = partition_apply(&fam, &Partition::new(vec![0.0, 0.5, 1.0]).unwrap(), &u).unwrap();
        let e = err_on(&v, |x| x * x + 1.0, 1.0);
        assert!(e < 1e-9, "{e}");
    }

    #[test]
    fn nisio_on_quadratics() {
        let fam = heat_family();
        let up = nisio_value(&fam, 1.0, &probe(&fam, |x| x * x), Refine::fixed(4)).unwrap();
        assert_eq!(up.levels.len(), 5);
        for lvl in &up.levels {
            assert!(err_on(lvl, |x| x * x + 1.0, 2.0) < 1e-8);
        }
        // The reflected boundary is locally convex, so only interior rows are exact.
        let down = nisio_value(&fam, 1.0, &probe(&fam, |x| -x * x), Refine::fixed(5)).unwrap();
        assert!(err_on(&down.value, |x| -x * x - 0.25, 2.0) < 1e-8);
    }

    #[test]
    fn singleton_family_is_the_member() {
        let fam = heat_family();
        let single = SemigroupFamily::singleton(fam.members()[1].clone());
        let u = probe(&fam, f64::sin);
        let direct = single.members()[0].apply(0.5, &u).unwrap();
        let nv = nisio_value(&single, 0.5, &u, Refine::fixed(3)).unwrap();
        for lvl in &nv.levels {
            assert!(lvl.sub(&direct).unwrap().weighted_norm().unwrap() < 1e-12);
        }
        assert_eq!(upper_bound_check(&single, 0.5, &u, Refine::fixed(0)).unwrap().min_slack, 0.0);
    }

    #[test]
    fn dpp_trivial_split() {
        let fam = heat_family();
        let u = probe(&fam, f64::sin);
        assert_eq!(dpp_check(&fam, 0.0, 0.5, &u, Refine::fixed(3)).unwrap().defect, 0.0);
    }

    #[test]
    fn zero_horizon() {
        let fam = heat_family();
        let u = probe(&fam, f64::cos);
        let nv = nisio_value(&fam, 0.0, &u, Refine::default()).unwrap();
        assert_eq!(nv.value, u);
        assert!(nv.converged);
    }
}

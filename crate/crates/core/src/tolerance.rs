//! The quadrature tolerance `ε_q`: how far the discretized members are from
//! being exact semigroups.
//!
//! For every member, probe `u ∈ {1, x, sin x}` and dyadic step `h = t/2^k`,
//! the two-step defect `‖S(h)S(h)u − S(2h)u‖_κ` is measured, together with the
//! accumulated defect `‖S(t/2^K)^{2^K}u − S(t)u‖_κ` at the deepest level `K`.
//! `ε_q` is the largest of these numbers.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{GridFunction, Region, State};
use crate::operator::{check_time, SemigroupFamily, TransitionOperator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberTolerance {
    pub member: String,
    pub two_step: f64,
    pub accumulated: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureTolerance {
    pub eps: f64,
    pub horizon: f64,
    pub depth: u32,
    pub region: Region,
    pub members: Vec<MemberTolerance>,
}

/// Coordinate used by the `x` and `sin x` probes: first coordinate, or the label index.
pub fn probe_coordinate(s: State) -> f64 {
    match s {
        State::Real(x) => x,
        State::Plane([x, _]) => x,
        State::Label(i) => i as f64,
    }
}

pub(crate) fn standard_probes(family: &SemigroupFamily) -> Result<Vec<GridFunction>> {
    let g = family.grid().clone();
    Ok(vec![
        GridFunction::constant(g.clone(), 1.0),
        GridFunction::from_fn(g.clone(), probe_coordinate)?,
        GridFunction::from_fn(g, |s| probe_coordinate(s).sin())?,
    ])
}

fn member_tolerance(
    member: &dyn TransitionOperator,
    probes: &[GridFunction],
    t: f64,
    depth: u32,
    region: &Region,
) -> Result<MemberTolerance> {
    let mut two_step = 0.0f64;
    let mut accumulated = 0.0f64;
    for u in probes {
        for k in 1..=depth {
            let h = t / f64::from(1u32 << k);
            let twice = member.apply(h, &member.apply(h, u)?)?;
            let once = member.apply(2.0 * h, u)?;
            two_step = two_step.max(twice.sub(&once)?.weighted_norm_on(region)?);
        }
        let steps = 1usize << depth;
        let h = t / steps as f64;
        let mut v = u.clone();
        for _ in 0..steps {
            v = member.apply(h, &v)?;
        }
        let whole = member.apply(t, u)?;
        accumulated = accumulated.max(v.sub(&whole)?.weighted_norm_on(region)?);
    }
    Ok(MemberTolerance { member: member.label(), two_step, accumulated })
}

/// Measures `ε_q` for horizon `t` down to step `t/2^depth`.
pub fn quadrature_tolerance(
    family: &SemigroupFamily,
    t: f64,
    depth: u32,
    region: Region,
) -> Result<QuadratureTolerance> {
    quadrature_tolerance_with(family, t, depth, region, &[])
}

/// As [`quadrature_tolerance`], with `extra` probes measured alongside `{1, x, sin x}`.
pub fn quadrature_tolerance_with(
    family: &SemigroupFamily,
    t: f64,
    depth: u32,
    region: Region,
    extra: &[GridFunction],
) -> Result<QuadratureTolerance> {
    check_time(t)?;
    let mut probes = standard_probes(family)?;
    for u in extra {
        family.check(u)?;
        probes.push(u.clone());
    }
    let members = if t == 0.0 {
        family
            .members()
            .iter()
            .map(|m| MemberTolerance { member: m.label(), two_step: 0.0, accumulated: 0.0 })
            .collect()
    } else {
        family
            .members()
            .iter()
            .map(|m| member_tolerance(m.as_ref(), &probes, t, depth, &region))
            .collect::<Result<Vec<_>>>()?
    };
    let eps = members.iter().map(|m| m.two_step.max(m.accumulated)).fold(0.0, f64::max);
    Ok(QuadratureTolerance { eps, horizon: t, depth, region, members })
}

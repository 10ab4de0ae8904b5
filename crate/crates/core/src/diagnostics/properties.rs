//! Runs the structural inequalities of the envelope over probe functions and
//! horizons and reports the worst slack of each.
//!
//! Every check reports `worst_slack` against a `threshold`: zero for the
//! identities that hold exactly in floating point (constants, monotonicity,
//! power-of-two homogeneity), `-1e-12` for sublinearity and `-ε_q` for the
//! inequalities that rely on the semigroup property of the members. The
//! Lipschitz check uses `-2ε_q/Δ`, with `Δ` the smallest distance between
//! nodes: values within `ε_q` of each other have slopes within `2ε_q/Δ`. Here
//! `ε_q` is measured on the standard probes together with the suite's own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envelope::{envelope_step, member_values, nisio_value, partition_apply, Refine};
use crate::error::{invalid, Result};
use crate::grid::{GridFunction, Layout, Region};
use crate::operator::SemigroupFamily;
use crate::partition::Partition;
use crate::probe::Probe;
use crate::tolerance::{quadrature_tolerance_with, QuadratureTolerance};

const SUBLINEAR_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteOptions {
    pub region: Region,
    pub refine: Refine,
    /// Deepest dyadic step `t/2^depth` used when measuring `ε_q`.
    pub depth: u32,
    /// Random nested partition pairs per probe and horizon.
    pub partition_pairs: usize,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { region: Region::Full, refine: Refine::fixed(5), depth: 5, partition_pairs: 4, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub property: String,
    pub probe: String,
    pub t: f64,
    pub worst_slack: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub eps_q: f64,
    pub tolerances: Vec<QuadratureTolerance>,
    pub checks: Vec<PropertyCheck>,
    pub passed: bool,
}

impl PropertyReport {
    /// Worst slack minus threshold per property name, in order of first appearance.
    pub fn summary(&self) -> Vec<(String, f64, bool)> {
        let mut out: Vec<(String, f64, bool)> = Vec::new();
        for c in &self.checks {
            let margin = c.worst_slack - c.threshold;
            match out.iter_mut().find(|(p, _, _)| *p == c.property) {
                Some(e) => {
                    e.1 = e.1.min(margin);
                    e.2 &= c.passed;
                }
                None => out.push((c.property.clone(), margin, c.passed)),
            }
        }
        out
    }
}

struct Ctx<'a> {
    kappa: &'a [f64],
    mask: Vec<bool>,
}

impl Ctx<'_> {
    /// `min_x κ(x)(a − b)(x)` over the region.
    fn min_weighted(&self, a: &GridFunction, b: &GridFunction) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .zip(self.kappa)
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .map(|(((x, y), k), _)| k * (x - y))
            .fold(f64::INFINITY, f64::min)
    }

    fn max_abs(&self, a: &GridFunction, b: &GridFunction) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .zip(&self.mask)
            .filter(|(_, m)| **m)
            .map(|((x, y), _)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// Bump centred in the middle of the state space, used for the monotone pair.
fn monotone_bump(family: &SemigroupFamily) -> Probe {
    match family.grid().layout() {
        Layout::Line { axis, .. } => Probe::Bump {
            center: 0.5 * (axis.min + axis.max()),
            radius: 0.25 * (axis.max() - axis.min),
            height: 1.0,
        },
        Layout::Plane { x, .. } => Probe::Bump {
            center: 0.5 * (x.min + x.max()),
            radius: 0.25 * (x.max() - x.min),
            height: 1.0,
        },
        Layout::Labels { len } => Probe::Bump { center: (*len / 2) as f64, radius: 1.5, height: 1.0 },
    }
}

fn random_nested_pair(t: f64, rng: &mut ChaCha8Rng) -> Result<(Partition, Partition)> {
    use rand::Rng;
    let coarse = Partition::trivial().random_refinement(t, rng.random_range(0..6), rng);
    let fine = coarse.random_refinement(t, rng.random_range(1..8), rng);
    Ok((coarse, fine))
}

pub fn property_suite(
    family: &SemigroupFamily,
    probes: &[(String, GridFunction)],
    t_list: &[f64],
    options: &SuiteOptions,
) -> Result<PropertyReport> {
    if probes.is_empty() {
        return Err(invalid("property suite needs at least one probe"));
    }
    if t_list.is_empty() || t_list.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(invalid("property suite needs positive horizons"));
    }
    for (_, u) in probes {
        family.check(u)?;
    }
    let grid = family.grid().clone();
    let ctx = Ctx { kappa: grid.kappa(), mask: options.region.mask(&grid) };
    let own: Vec<GridFunction> = probes.iter().map(|(_, u)| u.clone()).collect();
    let tolerances = t_list
        .iter()
        .map(|&t| quadrature_tolerance_with(family, t, options.depth, options.region, &own))
        .collect::<Result<Vec<_>>>()?;
    let eps = tolerances.iter().map(|q| q.eps).fold(0.0, f64::max);
    let bounds = family.bounds();
    let lipschitz = family.members().iter().all(|m| m.propagates_lipschitz()) && grid.len() >= 2;
    let spacing = match grid.layout() {
        Layout::Line { axis, .. } => axis.step,
        Layout::Plane { x, y } => x.step.min(y.step),
        Layout::Labels { .. } => 1.0,
    };
    let bump = monotone_bump(family).sample(&grid)?;
    let one = GridFunction::constant(grid.clone(), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut checks = Vec::new();
    let mut push = |property: &str, probe: &str, t: f64, slack: f64, threshold: f64| {
        checks.push(PropertyCheck {
            property: property.into(),
            probe: probe.into(),
            t,
            worst_slack: slack,
            threshold,
            passed: slack >= threshold,
        });
    };

    for &t in t_list {
        let e1 = envelope_step(family, t, &one)?;
        let s1 = nisio_value(family, t, &one, options.refine)?.value;
        push("constants", "1", t, -ctx.max_abs(&e1, &one).max(ctx.max_abs(&s1, &one)), 0.0);

        for (i, (name, u)) in probes.iter().enumerate() {
            let (_, w) = &probes[(i + 1) % probes.len()];
            let eu = envelope_step(family, t, u)?;
            let ew = envelope_step(family, t, w)?;

            let above = u.add(&bump)?;
            push("monotonicity", name, t, ctx.min_weighted(&envelope_step(family, t, &above)?, &eu), 0.0);

            let sum = envelope_step(family, t, &u.add(w)?)?;
            push("sublinearity", name, t, ctx.min_weighted(&eu.add(&ew)?, &sum), -SUBLINEAR_SLACK);

            let mut homog = 0.0f64;
            for c in [0.5, 2.0, 4.0] {
                homog = homog.max(ctx.max_abs(&envelope_step(family, t, &u.scale(c))?, &eu.scale(c)));
            }
            push("homogeneity", name, t, -homog, 0.0);

            let growth = (bounds.alpha * t).exp();
            let gap_in = u.sub(w)?.weighted_norm_on(&options.region)?;
            let gap_step = eu.sub(&ew)?.weighted_norm_on(&options.region)?;
            push("contraction-step", name, t, growth * gap_in - gap_step, -eps);

            let su = nisio_value(family, t, u, options.refine)?;
            let sw = nisio_value(family, t, w, options.refine)?;
            let gap_env = su.value.sub(&sw.value)?.weighted_norm_on(&options.region)?;
            push("contraction-envelope", name, t, growth * gap_in - gap_env, -eps);

            if lipschitz {
                let lip = u.lip_seminorm_on(&options.region)?;
                let spread = (bounds.beta * t).exp();
                let after = eu.lip_seminorm_on(&options.region)?.max(su.value.lip_seminorm_on(&options.region)?);
                push("lipschitz", name, t, spread * lip - after, -2.0 * eps / spacing);
            }

            let mut refinement = f64::INFINITY;
            for _ in 0..options.partition_pairs {
                let (coarse, fine) = random_nested_pair(t, &mut rng)?;
                let a = partition_apply(family, &coarse, u)?;
                let b = partition_apply(family, &fine, u)?;
                refinement = refinement.min(ctx.min_weighted(&b, &a));
            }
            if options.partition_pairs > 0 {
                push("partition-refinement", name, t, refinement, -eps);
            }

            push("dyadic-monotone", name, t, -su.monotone_defect, -eps);

            let dominance = member_values(family, t, u)?
                .iter()
                .map(|m| ctx.min_weighted(&su.value, m))
                .fold(f64::INFINITY, f64::min);
            push("dominance", name, t, dominance, -eps);
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(PropertyReport { eps_q: eps, tolerances, checks, passed })
}

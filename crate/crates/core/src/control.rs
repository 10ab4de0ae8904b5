//! Space-time-discrete controls and their values.
//!
//! A policy is a list of stages `(h_k, selector_k)`; stage 1 acts first in
//! time. Its value is `J u = S_{λ_1}(h_1) ⋯ S_{λ_m}(h_m) u`, where at stage
//! `k` each grid point `x` uses the member `selector_k(x)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envelope::{envelope_step_with_argmax, member_values, nisio_value, Refine};
use crate::error::{config, invalid, Result};
use crate::grid::GridFunction;
use crate::operator::SemigroupFamily;
use crate::partition::Partition;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub h: f64,
    /// Member index per grid point.
    pub selector: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlPolicy {
    pub stages: Vec<Stage>,
}

impl ControlPolicy {
    pub fn horizon(&self) -> f64 {
        self.stages.iter().map(|s| s.h).sum()
    }

    /// Every stage uses `member` everywhere.
    pub fn constant(family: &SemigroupFamily, gaps: &[f64], member: usize) -> Self {
        let n = family.grid().len();
        ControlPolicy {
            stages: gaps.iter().map(|&h| Stage { h, selector: vec![member; n] }).collect(),
        }
    }

    pub fn validate(&self, family: &SemigroupFamily) -> Result<()> {
        if self.stages.is_empty() {
            return Err(invalid("policy has no stages"));
        }
        let n = family.grid().len();
        for (k, s) in self.stages.iter().enumerate() {
            if !(s.h > 0.0 && s.h.is_finite()) {
                return Err(invalid(format!("stage {k} has duration {}", s.h)));
            }
            if s.selector.len() != n {
                return Err(config(format!(
                    "stage {k} selector has {} entries, grid has {n}",
                    s.selector.len()
                )));
            }
            if let Some(&bad) = s.selector.iter().find(|&&i| i >= family.len()) {
                return Err(config(format!(
                    "stage {k} selects member {bad}, family has {}",
                    family.len()
                )));
            }
        }
        Ok(())
    }
}

/// `J u` for the given policy.
pub fn policy_value(family: &SemigroupFamily, policy: &ControlPolicy, u: &GridFunction) -> Result<GridFunction> {
    policy.validate(family)?;
    family.check(u)?;
    let mut v = u.clone();
    for stage in policy.stages.iter().rev() {
        let values = member_values(family, stage.h, &v)?;
        let next = stage
            .selector
            .iter()
            .enumerate()
            .map(|(i, &k)| values[k].values()[i])
            .collect();
        v = GridFunction::from_parts(family.grid().clone(), next);
    }
    Ok(v)
}

#[derive(Clone, Debug)]
pub struct GreedyPolicy {
    pub policy: ControlPolicy,
    pub value: GridFunction,
}

/// Backward recursion on the uniform `m`-step partition, recording the
/// maximizing member (lowest index on ties) at every stage.
pub fn greedy_policy(family: &SemigroupFamily, t: f64, u: &GridFunction, m: usize) -> Result<GreedyPolicy> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("greedy policy needs a positive horizon, got {t}")));
    }
    let gaps = Partition::uniform(t, m)?.gaps();
    let mut v = u.clone();
    let mut stages = Vec::with_capacity(m);
    for &h in gaps.iter().rev() {
        let (next, arg) = envelope_step_with_argmax(family, h, &v)?;
        stages.push(Stage { h, selector: arg });
        v = next;
    }
    stages.reverse();
    let policy = ControlPolicy { stages };
    let value = policy_value(family, &policy, u)?;
    Ok(GreedyPolicy { policy, value })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityGap {
    pub m: usize,
    pub level: u32,
    /// `‖S(t)u − J_greedy u‖_κ`.
    pub gap: f64,
    /// `min_x κ(S(t)u − J_greedy u)`; negative values mean the policy beats the envelope.
    pub min_signed: f64,
    pub converged: bool,
}

pub fn duality_gap(
    family: &SemigroupFamily,
    t: f64,
    u: &GridFunction,
    refine: Refine,
    m: usize,
) -> Result<DualityGap> {
    let nv = nisio_value(family, t, u, refine)?;
    let greedy = greedy_policy(family, t, u, m)?;
    let diff = nv.value.sub(&greedy.value)?;
    let min_signed = diff
        .values()
        .iter()
        .zip(family.grid().kappa())
        .map(|(d, k)| k * d)
        .fold(f64::INFINITY, f64::min);
    Ok(DualityGap {
        m,
        level: nv.final_level(),
        gap: diff.weighted_norm()?,
        min_signed,
        converged: nv.converged,
    })
}

/// Random policy whose stage boundaries are a random subset of the dyadic
/// partition of `[0, t]` at `level`, with independent random selectors.
pub fn random_policy(family: &SemigroupFamily, t: f64, level: u32, rng: &mut impl Rng) -> Result<ControlPolicy> {
    let fine = Partition::dyadic(t, level)?;
    let interior = &fine.times()[1..fine.times().len() - 1];
    let keep = rng.random_range(0.0..1.0);
    let mut times = vec![0.0];
    times.extend(interior.iter().copied().filter(|_| rng.random::<f64>() < keep));
    times.push(t);
    let gaps = Partition::new(times)?.gaps();
    let n = family.grid().len();
    let stages = gaps
        .into_iter()
        .map(|h| {
            let selector = if rng.random::<bool>() {
                vec![rng.random_range(0..family.len()); n]
            } else {
                (0..n).map(|_| rng.random_range(0..family.len())).collect()
            };
            Stage { h, selector }
        })
        .collect();
    Ok(ControlPolicy { stages })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::partition_apply;
    use crate::grid::{BoundaryPolicy, WeightedGrid};
    use crate::operator::TransitionOperator;
    use crate::zoo::Heat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn family() -> SemigroupFamily {
        let g = WeightedGrid::line(-6.0, 6.0, 0.02)
            .unwrap()
            .with_boundary(BoundaryPolicy::Reflect)
            .into_shared();
        SemigroupFamily::new(vec![
            Arc::new(Heat::new(g.clone(), 0.5).unwrap()) as Arc<dyn TransitionOperator>,
            Arc::new(Heat::new(g, 1.0).unwrap()),
        ])
        .unwrap()
    }

    fn probe(fam: &SemigroupFamily, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_fn(fam.grid().clone(), |s| f(s.real().unwrap())).unwrap()
    }

    #[test]
    fn one_stage_constant_selector_is_member_apply() {
        let fam = family();
        let u = probe(&fam, f64::sin);
        let p = ControlPolicy::constant(&fam, &[0.3], 1);
        assert_eq!(policy_value(&fam, &p, &u).unwrap(), fam.members()[1].apply(0.3, &u).unwrap());
    }

    #[test]
    fn greedy_selects_extremes_for_quadratics() {
        let fam = family();
        let g = greedy_policy(&fam, 1.0, &probe(&fam, |x| x * x), 4).unwrap();
        for s in &g.policy.stages {
            // away from the reflecting edges convexity selects the larger volatility
            let mid = s.selector.len() / 2;
            assert!(s.selector[mid - 100..mid + 100].iter().all(|&k| k == 1));
        }
        let g = greedy_policy(&fam, 1.0, &probe(&fam, |x| -x * x), 4).unwrap();
        for s in &g.policy.stages {
            let mid = s.selector.len() / 2;
            assert!(s.selector[mid - 100..mid + 100].iter().all(|&k| k == 0));
        }
    }

    #[test]
    fn greedy_value_is_partition_apply() {
        let fam = family();
        let u = probe(&fam, f64::sin);
        let g = greedy_policy(&fam, 0.5, &u, 8).unwrap();
        let direct = partition_apply(&fam, &Partition::uniform(0.5, 8).unwrap(), &u).unwrap();
        assert_eq!(g.value, direct);
        let again = greedy_policy(&fam, 0.5, &u, 8).unwrap();
        assert_eq!(again.policy, g.policy);
    }

    #[test]
    fn policy_validation() {
        let fam = family();
        let u = probe(&fam, f64::sin);
        let mut p = ControlPolicy::constant(&fam, &[0.3], 1);
        p.stages[0].selector[5] = 7;
        assert!(policy_value(&fam, &p, &u).is_err());
        assert!(policy_value(&fam, &ControlPolicy::default(), &u).is_err());
    }

    #[test]
    fn random_policies_stay_below_envelope() {
        let fam = family();
        let u = probe(&fam, f64::sin);
        let env = nisio_value(&fam, 0.5, &u, Refine::fixed(4)).unwrap().value;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let p = random_policy(&fam, 0.5, 4, &mut rng).unwrap();
            assert!((p.horizon() - 0.5).abs() < 1e-12);
            let j = policy_value(&fam, &p, &u).unwrap();
            let worst = j.values().iter().zip(env.values()).map(|(a, b)| a - b).fold(f64::MIN, f64::max);
            assert!(worst <= 1e-9, "{worst}");
        }
    }
}

//! Randomized checks of the structural invariants of members and envelopes.

use std::sync::Arc;

use nisio::control::greedy_policy;
use nisio::envelope::{envelope_step, member_values, nisio_value, partition_apply, Refine};
use nisio::grid::{BoundaryPolicy, GridFunction, WeightedGrid};
use nisio::operator::{SemigroupFamily, TransitionOperator};
use nisio::partition::Partition;
use nisio::probe::Probe;
use nisio::zoo::{Chain, Gbm, Heat, Koopman, OrnsteinUhlenbeck, StableLevy};
use nisio::MemberSpec;
use proptest::prelude::*;

fn heat_family(boundary: BoundaryPolicy) -> SemigroupFamily {
    let g = WeightedGrid::line(-4.0, 4.0, 0.05).unwrap().with_boundary(boundary).into_shared();
    SemigroupFamily::new(vec![
        Arc::new(Heat::new(g.clone(), 0.3).unwrap()) as Arc<dyn TransitionOperator>,
        Arc::new(Heat::new(g, 0.9).unwrap()),
    ])
    .unwrap()
}

/// Every zoo member on a small grid, one family each.
fn zoo() -> Vec<SemigroupFamily> {
    let line = WeightedGrid::line(-3.0, 3.0, 0.05).unwrap().into_shared();
    let ring = WeightedGrid::periodic(0.0, 6.0, 6.0 / 64.0).unwrap().into_shared();
    let labels = WeightedGrid::labels(3).unwrap().into_shared();
    let single = |m: Arc<dyn TransitionOperator>| SemigroupFamily::singleton(m);
    vec![
        heat_family(BoundaryPolicy::MassRenormalize),
        heat_family(BoundaryPolicy::Reflect),
        single(Arc::new(Gbm::new(line.clone(), 0.1, 0.4).unwrap())),
        single(Arc::new(OrnsteinUhlenbeck::new(line.clone(), &[vec![-0.8]], &[0.1], &[vec![0.6]]).unwrap())),
        single(Arc::new(Koopman::parse(line, "-x + 0.3*sin(x)", 1.3).unwrap())),
        single(Arc::new(StableLevy::new(ring, 0.7).unwrap())),
        single(Arc::new(
            Chain::new(labels, vec![vec![-1.0, 0.5, 0.5], vec![2.0, -2.0, 0.0], vec![0.0, 4.0, -4.0]]).unwrap(),
        )),
    ]
}

fn values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, len)
}

fn chain_family(q1: Vec<Vec<f64>>, q2: Vec<Vec<f64>>) -> SemigroupFamily {
    let g = WeightedGrid::labels(q1.len()).unwrap().into_shared();
    SemigroupFamily::new(vec![
        Arc::new(Chain::new(g.clone(), q1).unwrap()) as Arc<dyn TransitionOperator>,
        Arc::new(Chain::new(g, q2).unwrap()),
    ])
    .unwrap()
}

/// Conservative rate matrix from nonnegative off-diagonal rates.
fn conservative(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(0.0f64..3.0, n * n).prop_map(move |r| {
        let mut q: Vec<Vec<f64>> = r.chunks(n).map(|c| c.to_vec()).collect();
        for (i, row) in q.iter_mut().enumerate() {
            row[i] = 0.0;
            row[i] = -row.iter().sum::<f64>();
        }
        q
    })
}

#[test]
fn constants_are_fixed_by_every_member() {
    for fam in zoo() {
        let one = GridFunction::constant(fam.grid().clone(), 1.0);
        for h in [1e-6, 0.01, 0.3, 1.0] {
            for m in fam.members() {
                let v = m.apply(h, &one).unwrap();
                assert!(v.values().iter().all(|&x| x == 1.0), "{} at h={h}", m.label());
            }
        }
    }
}

#[test]
fn members_are_monotone_and_homogeneous_on_random_data() {
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(24));
    let families = zoo();
    for fam in &families {
        let n = fam.grid().len();
        runner
            .run(&(values(n), prop::collection::vec(0.0f64..2.0, n), 0.01f64..1.0), |(u, bump, h)| {
                let u = GridFunction::new(fam.grid().clone(), u).unwrap();
                let above = u.add(&GridFunction::new(fam.grid().clone(), bump).unwrap()).unwrap();
                for m in fam.members() {
                    let (a, b) = (m.apply(h, &u).unwrap(), m.apply(h, &above).unwrap());
                    prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| x <= y), "{}", m.label());
                    for c in [0.5, 2.0, 4.0] {
                        prop_assert_eq!(m.apply(h, &u.scale(c)).unwrap(), a.scale(c));
                    }
                }
                Ok(())
            })
            .unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn envelope_is_sublinear_and_contractive(u in values(161), w in values(161), h in 0.01f64..1.0) {
        let fam = heat_family(BoundaryPolicy::Reflect);
        let u = GridFunction::new(fam.grid().clone(), u).unwrap();
        let w = GridFunction::new(fam.grid().clone(), w).unwrap();
        let (eu, ew) = (envelope_step(&fam, h, &u).unwrap(), envelope_step(&fam, h, &w).unwrap());
        let sum = envelope_step(&fam, h, &u.add(&w).unwrap()).unwrap();
        for ((s, a), b) in sum.values().iter().zip(eu.values()).zip(ew.values()) {
            prop_assert!(*s <= a + b + 1e-12);
        }
        let before = u.sub(&w).unwrap().weighted_norm().unwrap();
        let after = eu.sub(&ew).unwrap().weighted_norm().unwrap();
        prop_assert!(after <= before * (1.0 + 1e-12));
    }

    #[test]
    fn envelope_dominates_members(u in values(161), h in 0.01f64..1.0) {
        let fam = heat_family(BoundaryPolicy::MassRenormalize);
        let u = GridFunction::new(fam.grid().clone(), u).unwrap();
        let e = envelope_step(&fam, h, &u).unwrap();
        for m in member_values(&fam, h, &u).unwrap() {
            prop_assert!(e.values().iter().zip(m.values()).all(|(a, b)| a >= b));
        }
    }

    #[test]
    fn chain_refinement_never_decreases(
        q1 in conservative(4),
        q2 in conservative(4),
        u in values(4),
        extra in 1usize..8,
        seed in any::<u64>(),
    ) {
        use rand::SeedableRng;
        let fam = chain_family(q1, q2);
        let u = GridFunction::new(fam.grid().clone(), u).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let coarse = Partition::trivial().random_refinement(1.0, extra, &mut rng);
        let fine = coarse.random_refinement(1.0, extra, &mut rng);
        let (a, b) = (partition_apply(&fam, &coarse, &u).unwrap(), partition_apply(&fam, &fine, &u).unwrap());
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!(y - x >= -1e-10, "coarse {x} fine {y}");
        }
    }

    #[test]
    fn chain_dyadic_levels_increase(q1 in conservative(3), q2 in conservative(3), u in values(3)) {
        let fam = chain_family(q1, q2);
        let u = GridFunction::new(fam.grid().clone(), u).unwrap();
        let nv = nisio_value(&fam, 1.0, &u, Refine::fixed(6)).unwrap();
        prop_assert!(nv.monotone_defect <= 1e-10, "{}", nv.monotone_defect);
    }

    #[test]
    fn greedy_policy_reproduces_dyadic_level(q1 in conservative(3), q2 in conservative(3), u in values(3), level in 0u32..7) {
        let fam = chain_family(q1, q2);
        let u = GridFunction::new(fam.grid().clone(), u).unwrap();
        let nv = nisio_value(&fam, 0.7, &u, Refine::fixed(level)).unwrap();
        let greedy = greedy_policy(&fam, 0.7, &u, 1 << level).unwrap();
        prop_assert_eq!(greedy.value, nv.value);
    }

    #[test]
    fn chain_kernels_are_stochastic(q in conservative(5), t in 0.0f64..5.0) {
        let g = WeightedGrid::labels(5).unwrap().into_shared();
        let c = Chain::new(g.clone(), q).unwrap();
        for j in 0..5 {
            let e = GridFunction::new(g.clone(), (0..5).map(|i| f64::from(u8::from(i == j))).collect()).unwrap();
            let col = c.apply(t, &e).unwrap();
            prop_assert!(col.values().iter().all(|&p| (-1e-15..=1.0 + 1e-12).contains(&p)));
        }
    }

    #[test]
    fn partition_union_contains_both(a in prop::collection::vec(0.01f64..1.0, 0..6), b in prop::collection::vec(0.01f64..1.0, 0..6)) {
        let mk = |mut v: Vec<f64>| {
            v.push(0.0);
            v.push(1.0);
            v.sort_by(f64::total_cmp);
            v.dedup();
            Partition::new(v).unwrap()
        };
        let (p, q) = (mk(a), mk(b));
        let u = p.union(&q);
        prop_assert!(p.is_subset_of(&u) && q.is_subset_of(&u));
        prop_assert!(u.mesh() <= p.mesh().min(q.mesh()));
    }

    #[test]
    fn member_specs_round_trip(sigma in 0.0f64..3.0, alpha in 0.05f64..0.95, lambda in 0.0f64..4.0) {
        let specs = vec![
            MemberSpec::Heat { sigma },
            MemberSpec::Stable { alpha },
            MemberSpec::Scaled { lambda, base: Box::new(MemberSpec::Gbm { mu: -sigma, sigma }) },
        ];
        let json = serde_json::to_string(&specs).unwrap();
        let back: Vec<MemberSpec> = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, specs);
    }

    #[test]
    fn probes_round_trip(center in -3.0f64..3.0, radius in 0.1f64..2.0, strike in -1.0f64..1.0) {
        let probes = vec![Probe::Bump { center, radius, height: 1.0 }, Probe::CallPayoff { strike }, Probe::Sin];
        let json = serde_json::to_string(&probes).unwrap();
        let back: Vec<Probe> = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, probes);
    }
}

//! Property tests for the structural invariants: monotone generating
//! functions, monotone extinction tables and the exact survival sandwich.

use proptest::prelude::*;

use dbranch::environment::EnvSequence;
use dbranch::offspring::{OffspringLaw1, OffspringLaw2, Univariate};
use dbranch::process::survival_given_env;
use dbranch::EnvironmentSpec;

/// Random bivariate finite table over a small support, normalized.
fn law1_table() -> impl Strategy<Value = OffspringLaw1> {
    proptest::collection::vec(((0u32..4, 0u32..4), 1u32..100), 1..6).prop_filter_map(
        "normalizable",
        |cells| {
            let total: f64 = cells.iter().map(|&(_, w)| f64::from(w)).sum();
            let mut merged: std::collections::BTreeMap<(u32, u32), f64> = Default::default();
            for ((j, k), w) in cells {
                *merged.entry((j, k)).or_insert(0.0) += f64::from(w) / total;
            }
            OffspringLaw1::finite_table(merged.into_iter().collect()).ok()
        },
    )
}

fn law1_any() -> impl Strategy<Value = OffspringLaw1> {
    prop_oneof![
        law1_table(),
        (0.2f64..2.0, 0.1f64..2.0).prop_map(|(m, t)| {
            OffspringLaw1::product(
                Univariate::geometric(m).unwrap(),
                Univariate::poisson(t).unwrap(),
            )
            .unwrap()
        }),
        (0.1f64..1.0, 0.0f64..0.8, 0.1f64..1.5).prop_map(|(g, q, t)| {
            OffspringLaw1::linear_fractional(g, q, Univariate::poisson(t).unwrap()).unwrap()
        }),
    ]
}

fn law2_any() -> impl Strategy<Value = OffspringLaw2> {
    prop_oneof![
        Just(OffspringLaw2::geometric_mean_one()),
        Just(OffspringLaw2::poisson_mean_one()),
        // Critical two-point table: P[0] = p, P[j] = 1/j with the remainder
        // on 1 keeps m1 = 1; simplest is {0, 2} with equal mass.
        Just(OffspringLaw2::finite_table(vec![(0, 0.5), (2, 0.5)]).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pgf_monotone_in_each_argument(
        law in law1_any(),
        s1a in 0.0f64..1.0, s1b in 0.0f64..1.0,
        s2 in 0.0f64..1.0,
    ) {
        let (lo, hi) = if s1a <= s1b { (s1a, s1b) } else { (s1b, s1a) };
        prop_assert!(law.pgf(lo, s2).unwrap() <= law.pgf(hi, s2).unwrap());
        prop_assert!(law.pgf(s2, lo).unwrap() <= law.pgf(s2, hi).unwrap());
    }

    #[test]
    fn pgf_bounded_on_unit_square(law in law1_any(), s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
        let v = law.pgf(s1, s2).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
    }

    #[test]
    fn extinction_table_monotone(law2 in law2_any(), n in 1usize..512) {
        let tab = law2.extinction_table(n);
        for k in 1..=n {
            prop_assert!(tab.q(k) >= tab.q(k - 1));
            prop_assert!(tab.q(k) <= 1.0);
        }
    }

    #[test]
    fn h_iterate_one_step_equals_h(law2 in law2_any(), s in 0.0f64..1.0) {
        prop_assert_eq!(law2.h_iterate(1, s).unwrap(), law2.h(s).unwrap());
    }

    #[test]
    fn survival_sandwich_holds_pathwise(
        laws in proptest::collection::vec(law1_any(), 2),
        law2 in law2_any(),
        seed in 0u64..1u64 << 48,
        n in 1usize..48,
    ) {
        let spec = EnvironmentSpec::iid(
            laws.into_iter().map(|l| (l, 0.5)).collect(),
        ).unwrap();
        let factory = dbranch::StreamFactory::new(seed);
        let mut rng = factory.rng(dbranch::Purpose::Env, 0);
        let seq = spec.sample_sequence(n, &mut rng);
        let extab = law2.extinction_table(n);
        let s = survival_given_env(&spec, &seq, n, &extab).unwrap();
        prop_assert!(s.pz <= s.peither + 1e-12);
        prop_assert!(s.peither <= s.px + s.pz + 1e-12);
        prop_assert!((0.0..=1.0).contains(&s.pz));
        prop_assert!((0.0..=1.0).contains(&s.px));
    }

    #[test]
    fn tail_probability_nonincreasing(
        seed in 0u64..1u64 << 32,
    ) {
        let law = OffspringLaw1::product(
            Univariate::geometric(0.7).unwrap(),
            Univariate::poisson(0.5).unwrap(),
        ).unwrap();
        let spec = EnvironmentSpec::constant(law);
        let samples = dbranch::process::tail_bundle(
            &spec, 2_000, 10_000, &dbranch::StreamFactory::new(seed),
        );
        let mut prev = 1.0f64;
        for x in [0.0, 1.0, 2.0, 5.0, 10.0, 50.0, 1e3] {
            let p = samples.s.tail_prob(x);
            prop_assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn regeneration_times_return_to_initial_state(states in proptest::collection::vec(0u32..3, 1..64)) {
        let seq = EnvSequence::from_states(states.clone());
        let reg = dbranch::environment::regenerations(&seq).unwrap();
        let e0 = states[0];
        for &t in &reg.taus {
            prop_assert_eq!(states[t], e0);
        }
        for w in reg.taus.windows(2) {
            prop_assert!(w[1] > w[0]);
            // No intermediate return inside a cycle.
            for t in (w[0] + 1)..w[1] {
                prop_assert_ne!(states[t], e0);
            }
        }
    }
}

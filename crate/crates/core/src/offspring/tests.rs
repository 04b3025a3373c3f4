use approx::{assert_abs_diff_eq, assert_relative_eq};

use super::*;
use crate::stats;
use crate::streams::{Purpose, StreamFactory};

fn swap_law() -> OffspringLaw1 {
    // P[(1,0)] = P[(0,1)] = 1/2.
    OffspringLaw1::finite_table(vec![((1, 0), 0.5), ((0, 1), 0.5)]).unwrap()
}

fn geo_poisson(mu: f64, theta: f64) -> OffspringLaw1 {
    OffspringLaw1::product(Univariate::geometric(mu).unwrap(), Univariate::poisson(theta).unwrap())
        .unwrap()
}

/// Independent oracle: enumerate the product support to mass 1 - 1e-12 and
/// sum the series directly.
fn product_pgf_oracle(mean_geo: f64, p_bern: f64, s1: f64, s2: f64) -> f64 {
    let p = 1.0 / (1.0 + mean_geo);
    let mut geo_sum = 0.0;
    let mut mass = 0.0;
    let mut term = p;
    let mut j = 0u32;
    while mass < 1.0 - 1e-12 {
        geo_sum += term * s1.powi(j as i32);
        mass += term;
        term *= 1.0 - p;
        j += 1;
    }
    let bern_sum = (1.0 - p_bern) + p_bern * s2;
    geo_sum * bern_sum
}

#[test]
fn pgf_swap_law_midpoint() {
    let law = swap_law();
    assert_relative_eq!(law.pgf(0.5, 0.5).unwrap(), 0.5);
}

#[test]
fn pgf_is_one_at_one_one() {
    assert_eq!(swap_law().pgf(1.0, 1.0).unwrap(), 1.0);
    assert_relative_eq!(geo_poisson(1.0, 0.5).pgf(1.0, 1.0).unwrap(), 1.0, epsilon = 1e-12);
}

#[test]
fn pgf_matches_enumeration_oracle() {
    let law = OffspringLaw1::product(
        Univariate::geometric(1.0).unwrap(),
        Univariate::bernoulli(0.5).unwrap(),
    )
    .unwrap();
    let oracle = product_pgf_oracle(1.0, 0.5, 0.0, 1.0);
    assert_relative_eq!(oracle, 0.5, epsilon = 1e-12);
    assert_relative_eq!(law.pgf(0.0, 1.0).unwrap(), oracle, epsilon = 1e-12);
    // A non-corner point for good measure.
    let oracle = product_pgf_oracle(1.0, 0.5, 0.3, 0.7);
    assert_relative_eq!(law.pgf(0.3, 0.7).unwrap(), oracle, epsilon = 1e-12);
}

#[test]
fn pgf_rejects_out_of_domain() {
    let law = swap_law();
    assert!(law.pgf(1.5, 0.5).is_err());
    assert!(law.pgf(0.5, -0.1).is_err());
}

#[test]
fn moments_deterministic_pair() {
    let law = OffspringLaw1::finite_table(vec![((1, 1), 1.0)]).unwrap();
    let m = law.moments();
    assert_eq!((m.mu1, m.mu2, m.theta1, m.theta2), (1.0, 0.0, 1.0, 0.0));
}

#[test]
fn moments_two_point_table() {
    // P[(2,0)] = P[(0,2)] = 1/2: E[xi(xi-1)] = 2 * 1/2 = 1 on both axes.
    let law = OffspringLaw1::finite_table(vec![((2, 0), 0.5), ((0, 2), 0.5)]).unwrap();
    let m = law.moments();
    assert_eq!((m.mu1, m.mu2, m.theta1, m.theta2), (1.0, 1.0, 1.0, 1.0));
}

#[test]
fn moments_product_geometric_poisson() {
    let theta = 0.5;
    let law = geo_poisson(1.0, theta);
    let m = law.moments();
    assert_relative_eq!(m.mu1, 1.0, epsilon = 1e-12);
    assert_relative_eq!(m.mu2, 2.0, epsilon = 1e-12);
    assert_relative_eq!(m.theta1, theta, epsilon = 1e-11);
    assert_relative_eq!(m.theta2, theta * theta, epsilon = 1e-10);
}

/// Moments must agree with central finite differences of the generating
/// function at s = 1 for every supported family.
#[test]
fn moments_match_finite_differences() {
    let laws = vec![
        swap_law(),
        OffspringLaw1::finite_table(vec![((2, 1), 0.25), ((0, 2), 0.25), ((1, 1), 0.5)]).unwrap(),
        geo_poisson(1.0, 0.5),
        geo_poisson(0.8, 1.2),
        OffspringLaw1::product(
            Univariate::bernoulli(0.7).unwrap(),
            Univariate::deterministic(2).unwrap(),
        )
        .unwrap(),
        OffspringLaw1::linear_fractional(0.5, 0.5, Univariate::poisson(0.5).unwrap()).unwrap(),
    ];
    let h = 1e-4;
    for law in laws {
        let m = law.moments();
        let d1 = (law.pgf_extended(1.0 + h, 1.0) - law.pgf_extended(1.0 - h, 1.0)) / (2.0 * h);
        let d2 = (law.pgf_extended(1.0 + h, 1.0) - 2.0 + law.pgf_extended(1.0 - h, 1.0)) / (h * h);
        let e1 = (law.pgf_extended(1.0, 1.0 + h) - law.pgf_extended(1.0, 1.0 - h)) / (2.0 * h);
        let e2 = (law.pgf_extended(1.0, 1.0 + h) - 2.0 + law.pgf_extended(1.0, 1.0 - h)) / (h * h);
        assert_relative_eq!(d1, m.mu1, max_relative = 1e-5);
        assert_abs_diff_eq!(d2, m.mu2, epsilon = 1e-5 * (1.0 + m.mu2));
        assert_relative_eq!(e1, m.theta1, max_relative = 1e-5);
        assert_abs_diff_eq!(e2, m.theta2, epsilon = 1e-5 * (1.0 + m.theta2));
    }
}

#[test]
fn law_invariants_rejected() {
    // Probabilities not summing to one.
    assert!(OffspringLaw1::finite_table(vec![((1, 1), 0.9)]).is_err());
    assert!(OffspringLaw1::finite_table(vec![((1, 1), -0.5), ((1, 0), 1.5)]).is_err());
    // Degenerate boundary laws remain constructible.
    assert!(OffspringLaw1::finite_table(vec![((0, 1), 1.0)]).is_ok());
    assert!(OffspringLaw1::finite_table(vec![((1, 0), 1.0)]).is_ok());
}

#[test]
fn sampler_deterministic_law() {
    let law = OffspringLaw1::finite_table(vec![((1, 0), 1.0)]).unwrap();
    let mut rng = StreamFactory::new(1).rng(Purpose::Particles, 0);
    for _ in 0..100 {
        assert_eq!(law.sample(&mut rng), (1, 0));
    }
}

#[test]
fn sampler_geometric_mean_within_clt_bound() {
    let law2 = OffspringLaw2::geometric_mean_one();
    let mut rng = StreamFactory::new(7).rng(Purpose::Particles, 0);
    let n = 1_000_000u64;
    let mut sum = 0u64;
    for _ in 0..n {
        sum += law2.sample(&mut rng);
    }
    let mean = sum as f64 / n as f64;
    // Var[eta] = m2 = 2, so sigma of the mean is sqrt(2)/1e3.
    let sigma = (2.0f64).sqrt() / 1e3;
    assert!((mean - 1.0).abs() < 4.0 * sigma, "mean={mean}");
}

#[test]
fn sampler_finite_table_goodness_of_fit() {
    let cells = vec![((0, 1), 0.25), ((1, 0), 0.375), ((1, 1), 0.25), ((3, 2), 0.125)];
    let law = OffspringLaw1::finite_table(cells.clone()).unwrap();
    let mut rng = StreamFactory::new(11).rng(Purpose::Particles, 0);
    let n = 1_000_000u64;
    let mut observed = vec![0u64; cells.len()];
    for _ in 0..n {
        let draw = law.sample(&mut rng);
        let idx = cells
            .iter()
            .position(|&((j, k), _)| (u64::from(j), u64::from(k)) == draw)
            .expect("draw inside support");
        observed[idx] += 1;
    }
    let expected: Vec<f64> = cells.iter().map(|&(_, p)| p * n as f64).collect();
    let (stat, dof) = stats::chi_square_statistic(&observed, &expected, 5.0);
    assert!(stat < stats::chi_square_critical(dof, 0.001), "chi2={stat} dof={dof}");
}

/// Aggregate sampling must produce the same law as summing per-particle
/// draws; check first and second moments across families.
#[test]
fn aggregate_sampler_moments() {
    let cases: Vec<(OffspringLaw1, u64)> = vec![
        (swap_law(), 7),
        (geo_poisson(1.0, 0.5), 5),
        (OffspringLaw1::linear_fractional(0.5, 0.5, Univariate::poisson(0.5).unwrap()).unwrap(), 6),
    ];
    for (law, group) in cases {
        let m = law.moments();
        let reps = 200_000u64;
        let mut rng = StreamFactory::new(23).rng(Purpose::Particles, 1);
        let mut xs = Vec::with_capacity(reps as usize);
        for _ in 0..reps {
            let (x1, _) = law.sample_total(group, &mut rng);
            xs.push(x1 as f64);
        }
        let want_mean = group as f64 * m.mu1;
        // Var[xi1] = mu2 + mu1 - mu1^2 per particle.
        let want_var = group as f64 * (m.mu2 + m.mu1 - m.mu1 * m.mu1);
        let got_mean = stats::mean(&xs);
        let se = (want_var / reps as f64).sqrt();
        assert!(
            (got_mean - want_mean).abs() < 5.0 * se,
            "mean {got_mean} vs {want_mean} (law {law:?})"
        );
        let got_var = stats::variance(&xs);
        assert_relative_eq!(got_var, want_var, max_relative = 0.05);
    }
}

#[test]
fn h_iterate_identity_and_single_step() {
    let law2 = OffspringLaw2::geometric_mean_one();
    assert_eq!(law2.h_iterate(0, 0.3).unwrap(), 0.3);
    assert_eq!(law2.h_iterate(1, 0.3).unwrap(), law2.h(0.3).unwrap());
}

/// For h(s) = 1/(2-s) the iterates have the closed form
/// h_n(s) = (n - (n-1)s) / (n+1 - ns), provable by induction.
#[test]
fn h_iterate_linear_fractional_closed_form() {
    let law2 = OffspringLaw2::geometric_mean_one();
    for &s in &[0.0, 0.25, 0.9] {
        for n in [1usize, 2, 10, 123] {
            let nf = n as f64;
            let closed = (nf - (nf - 1.0) * s) / (nf + 1.0 - nf * s);
            assert_relative_eq!(law2.h_iterate(n, s).unwrap(), closed, epsilon = 1e-12);
        }
    }
    assert_relative_eq!(law2.h_iterate(50, 0.0).unwrap(), 50.0 / 51.0, epsilon = 1e-13);
}

#[test]
fn extinction_table_linear_fractional_exact() {
    let law2 = OffspringLaw2::geometric_mean_one();
    let tab = law2.extinction_table(10_000);
    for n in [0usize, 1, 2, 100, 10_000] {
        let nf = n as f64;
        assert_abs_diff_eq!(tab.q(n), nf / (nf + 1.0), epsilon = 1e-12);
    }
    // m2 = 2 for this law, so the check statistic is exactly n/(n+1).
    assert_relative_eq!(tab.check_statistic(10_000), 10_000.0 / 10_001.0, epsilon = 1e-10);
}

#[test]
fn extinction_table_monotone_and_bounded() {
    for law2 in [OffspringLaw2::geometric_mean_one(), OffspringLaw2::poisson_mean_one()] {
        let tab = law2.extinction_table(2_000);
        for n in 1..=tab.horizon() {
            assert!(tab.q(n) >= tab.q(n - 1));
            assert!(tab.q(n) <= 1.0);
        }
        // Long-horizon check statistic settles near one.
        let s = tab.check_statistic(2_000);
        assert!((0.9..1.1).contains(&s), "statistic {s}");
    }
}

#[test]
fn a_n_values() {
    let law1 = geo_poisson(1.0, 0.5);
    let law2 = OffspringLaw2::geometric_mean_one();
    let tab = law2.extinction_table(10_000);
    // n = 0: -log f(1, 0), finite because P[xi2 = 0] > 0 for a Poisson count.
    let a0 = a_n(&law1, &tab, 0).unwrap();
    assert_relative_eq!(a0, -law1.pgf(1.0, 0.0).unwrap().ln(), epsilon = 1e-15);
    assert_relative_eq!(a0, 0.5, epsilon = 1e-12); // e^{-theta(1-0)} with theta = 1/2.

    // Q = 1 would give -log f(1,1) = 0.
    assert_abs_diff_eq!(-law1.pgf(1.0, 1.0).unwrap().ln(), 0.0, epsilon = 1e-12);

    // a_n is nonincreasing and positive.
    let mut prev = f64::INFINITY;
    for n in 0..200 {
        let a = a_n(&law1, &tab, n).unwrap();
        assert!(a > 0.0 && a <= prev);
        prev = a;
    }
}

#[test]
fn a_n_asymptotics_with_unit_theta() {
    let law1 = geo_poisson(1.0, 1.0);
    let law2 = OffspringLaw2::geometric_mean_one();
    let tab = law2.extinction_table(10_000);
    let stat = a_n_check_statistic(&law1, &law2, &tab, 10_000).unwrap();
    assert!((0.99..=1.01).contains(&stat), "statistic {stat}");
}

#[test]
fn law2_finite_table_must_be_critical() {
    assert!(OffspringLaw2::finite_table(vec![(0, 0.5), (2, 0.5)]).is_ok());
    assert!(OffspringLaw2::finite_table(vec![(0, 0.4), (2, 0.6)]).is_err());
    // Deterministic unit offspring is the m2 = 0 boundary case.
    let det = OffspringLaw2::finite_table(vec![(1, 1.0)]).unwrap();
    assert_eq!(det.m2(), 0.0);
}

#[test]
fn law_specs_round_trip() {
    let law1 = geo_poisson(1.0, 0.5);
    let json = serde_json::to_string(&law1).unwrap();
    let back: OffspringLaw1 = serde_json::from_str(&json).unwrap();
    assert_eq!(law1, back);

    let law2 = OffspringLaw2::poisson_mean_one();
    let json = serde_json::to_string(&law2).unwrap();
    let back: OffspringLaw2 = serde_json::from_str(&json).unwrap();
    assert_eq!(law2, back);

    // The linear-fractional alias parses to the geometric family.
    let alias: OffspringLaw2 =
        serde_json::from_str("{\"kind\":\"linear_fractional_mean_one\"}").unwrap();
    assert_eq!(alias, OffspringLaw2::geometric_mean_one());
}

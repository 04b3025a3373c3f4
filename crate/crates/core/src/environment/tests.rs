use approx::{assert_abs_diff_eq, assert_relative_eq};

use super::*;
use crate::offspring::Univariate;
use crate::streams::{Purpose, StreamFactory};

fn law(mu: f64) -> OffspringLaw1 {
    OffspringLaw1::product(Univariate::geometric(mu).unwrap(), Univariate::poisson(1.0).unwrap())
        .unwrap()
}

#[test]
fn stationary_single_state() {
    let pi = stationary_distribution(&[vec![1.0]]).unwrap();
    assert_eq!(pi, vec![1.0]);
}

#[test]
fn stationary_two_state_matches_parametrization() {
    let (pi1, d) = (0.3, 0.5);
    let pi2 = 1.0 - pi1;
    let transition = vec![vec![1.0 - d * pi2, d * pi2], vec![d * pi1, 1.0 - d * pi1]];
    let pi = stationary_distribution(&transition).unwrap();
    assert_abs_diff_eq!(pi[0], pi1, epsilon = 1e-13);
    assert_abs_diff_eq!(pi[1], pi2, epsilon = 1e-13);
}

/// Independent oracle: power iteration on the transition matrix.
fn power_iteration(transition: &[Vec<f64>]) -> Vec<f64> {
    let n = transition.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..20_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += pi[i] * transition[i][j];
            }
        }
        pi = next;
    }
    pi
}

#[test]
fn stationary_five_state_vs_power_iteration() {
    // A fixed strictly positive row-stochastic matrix.
    let raw = [
        [0.2, 0.3, 0.1, 0.25, 0.15],
        [0.05, 0.5, 0.2, 0.15, 0.1],
        [0.3, 0.1, 0.3, 0.1, 0.2],
        [0.25, 0.25, 0.25, 0.15, 0.1],
        [0.1, 0.2, 0.3, 0.2, 0.2],
    ];
    let transition: Vec<Vec<f64>> = raw.iter().map(|r| r.to_vec()).collect();
    let pi = stationary_distribution(&transition).unwrap();
    let oracle = power_iteration(&transition);
    for (a, b) in pi.iter().zip(&oracle) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }
}

#[test]
fn stationary_rejects_reducible() {
    let transition = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    assert!(EnvironmentSpec::markov(vec![law(1.0), law(1.0)], transition).is_err());
}

#[test]
fn markov_rejects_periodic() {
    let transition = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    assert!(EnvironmentSpec::markov(vec![law(1.0), law(1.0)], transition).is_err());
}

#[test]
fn constant_sequences_are_all_zero() {
    let spec = EnvironmentSpec::constant(law(1.0));
    let mut rng = StreamFactory::new(3).rng(Purpose::Env, 0);
    let seq = spec.sample_sequence(100, &mut rng);
    assert!(seq.states().iter().all(|&e| e == 0));
}

#[test]
fn iid_state_frequency_within_clt_bound() {
    let spec = EnvironmentSpec::iid(vec![(law(0.5), 0.5), (law(2.0), 0.5)]).unwrap();
    let mut rng = StreamFactory::new(5).rng(Purpose::Env, 0);
    let n = 1_000_000usize;
    let seq = spec.sample_sequence(n, &mut rng);
    let count0 = seq.states().iter().filter(|&&e| e == 0).count();
    let freq = count0 as f64 / n as f64;
    let sigma = 0.5 / (n as f64).sqrt();
    assert!((freq - 0.5).abs() < 4.0 * sigma, "freq={freq}");
}

/// d = 1 makes the two-state chain equivalent to IID sampling: the lag-1
/// autocorrelation of the state indicator must vanish.
#[test]
fn two_state_d1_is_iid() {
    let spec = EnvironmentSpec::two_state(0.3, 1.0, [law(0.5), law(2.0)]).unwrap();
    let mut rng = StreamFactory::new(9).rng(Purpose::Env, 0);
    let n = 1_000_000usize;
    let seq = spec.sample_sequence(n, &mut rng);
    let xs: Vec<f64> = seq.states().iter().map(|&e| f64::from(e)).collect();
    let mean = crate::stats::mean(&xs);
    let var = crate::stats::variance(&xs);
    let mut cov = 0.0;
    for w in xs.windows(2) {
        cov += (w[0] - mean) * (w[1] - mean);
    }
    cov /= (n - 1) as f64;
    let rho = cov / var;
    // Under independence rho_hat ~ N(0, 1/n).
    let sigma = 1.0 / (n as f64).sqrt();
    assert!(rho.abs() < 4.0 * sigma, "rho={rho}");
}

#[test]
fn regenerations_constant_every_step() {
    let seq = EnvSequence::from_states(vec![0; 6]);
    let reg = regenerations(&seq).unwrap();
    assert_eq!(reg.taus, vec![0, 1, 2, 3, 4, 5]);
    assert_eq!(reg.incomplete_len, 1);
    assert!(reg.cycle_lengths().all(|l| l == 1));
}

#[test]
fn regenerations_hand_checked() {
    let seq = EnvSequence::from_states(vec![0, 1, 1, 0, 1, 0]);
    let reg = regenerations(&seq).unwrap();
    assert_eq!(reg.taus, vec![0, 3, 5]);
    assert_eq!(reg.complete_cycles(), 2);
    assert_eq!(reg.cycle_lengths().collect::<Vec<_>>(), vec![3, 2]);
    assert_eq!(reg.incomplete_len, 1);
}

#[test]
fn two_state_mean_cycle_length_is_two() {
    // First complete cycle of replicated stationary sequences; stationary
    // mean of tau is the number of states.
    let spec = EnvironmentSpec::two_state(0.3, 0.5, [law(0.5), law(2.0)]).unwrap();
    let factory = StreamFactory::new(17);
    let reps = 100_000usize;
    let mut lens = Vec::with_capacity(reps);
    for rep in 0..reps {
        let mut rng = factory.rng(Purpose::Env, rep as u64);
        let seq = spec.sample_sequence(200, &mut rng);
        let reg = regenerations(&seq).unwrap();
        if reg.complete_cycles() > 0 {
            lens.push((reg.taus[1] - reg.taus[0]) as f64);
        }
    }
    let mean = crate::stats::mean(&lens);
    let se = crate::stats::standard_error(&lens);
    assert!((mean - 2.0).abs() < 4.0 * se, "mean={mean} se={se}");
}

#[test]
fn tau_law_normalizes_and_matches_moments() {
    for &(pi1, d) in &[(0.3, 0.5), (0.5, 0.5), (0.5, 1.0), (0.2, 1.2), (0.5, 1.9)] {
        let tau = TwoStateTauLaw::new(pi1, d).unwrap();
        let mut sum = 0.0;
        let mut mean_minus_one = 0.0;
        let mut second = 0.0;
        for k in 1..20_000 {
            let p = tau.pmf(k);
            assert!(p >= 0.0, "pmf negative at k={k} for ({pi1},{d})");
            sum += p;
            mean_minus_one += (k as f64 - 1.0) * p;
            second += (k as f64) * (k as f64 - 1.0) * p;
        }
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mean_minus_one, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(second, tau.mean_tau_tau_minus_one(), epsilon = 1e-9);
    }
}

#[test]
fn tau_law_worked_example() {
    // pi1 = pi2 = 1/2, d = 1/2: E[tau(tau-1)] = 2/(d pi1 pi2) - 4/d = 8.
    let tau = TwoStateTauLaw::new(0.5, 0.5).unwrap();
    assert_relative_eq!(tau.mean_tau_tau_minus_one(), 8.0);
}

#[test]
fn tau_law_rejects_out_of_range_d() {
    assert!(TwoStateTauLaw::new(0.3, 0.0).is_err());
    assert!(TwoStateTauLaw::new(0.3, 1.0 / 0.7 + 0.01).is_err());
}

#[test]
fn zeta_values() {
    assert_eq!(zeta(&law(1.0)), 0.0);
    assert_relative_eq!(zeta(&law(2.0)), std::f64::consts::LN_2, epsilon = 1e-12);

    let spec = EnvironmentSpec::two_state(0.3, 0.5, [law(0.5), law(2.0)]).unwrap();
    let b1 = (0.5f64).ln();
    let b2 = (2.0f64).ln();
    assert_relative_eq!(spec.mean_zeta(), 0.3 * b1 + 0.7 * b2, epsilon = 1e-12);
}

#[test]
fn config_round_trips() {
    let spec = EnvironmentSpec::two_state(0.3, 0.5, [law(0.5), law(2.0)]).unwrap();
    let json = serde_json::to_string(&spec).unwrap();
    assert!(json.contains("two_state"));
    let back: EnvironmentSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(spec, back);

    let spec = EnvironmentSpec::iid(vec![(law(0.5), 0.4), (law(2.0), 0.6)]).unwrap();
    let back: EnvironmentSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(spec, back);
}

//! Univariate offspring marginals used inside product-form bivariate laws.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail mass below which the Poisson support is truncated. The truncated
/// table is renormalized so probabilities sum to one exactly.
pub const POISSON_TAIL_EPS: f64 = 1e-14;

/// Serialized form of a univariate marginal, e.g.
/// `{"kind": "geometric", "mean": 1.0}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UnivariateSpec {
    Deterministic { value: u64 },
    Bernoulli { p: f64 },
    Geometric { mean: f64 },
    Poisson { mean: f64 },
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Deterministic(u64),
    Bernoulli(f64),
    /// Parametrized by the mean m; success probability p = 1/(1+m) with
    /// P[k] = p(1-p)^k on {0,1,...}.
    Geometric { mean: f64 },
    /// Truncated, renormalized probability table.
    Poisson { lambda: f64, probs: Vec<f64> },
}

/// A validated univariate offspring law with cached moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UnivariateSpec", into = "UnivariateSpec")]
pub struct Univariate {
    kind: Kind,
    mean: f64,
    /// Factorial second moment E[N(N-1)].
    fact2: f64,
}

impl Univariate {
    pub fn deterministic(value: u64) -> Result<Self> {
        if value > u32::MAX as u64 {
            return Err(Error::InvalidLaw(format!(
                "deterministic offspring count {value} too large"
            )));
        }
        let v = value as f64;
        Ok(Self { kind: Kind::Deterministic(value), mean: v, fact2: v * (v - 1.0) })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidLaw(format!("bernoulli p={p} outside [0,1]")));
        }
        Ok(Self { kind: Kind::Bernoulli(p), mean: p, fact2: 0.0 })
    }

    pub fn geometric(mean: f64) -> Result<Self> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::InvalidLaw(format!("geometric mean={mean} must be positive")));
        }
        Ok(Self { kind: Kind::Geometric { mean }, mean, fact2: 2.0 * mean * mean })
    }

    pub fn poisson(mean: f64) -> Result<Self> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::InvalidLaw(format!("poisson mean={mean} must be positive")));
        }
        // Smallest support bound with tail mass below POISSON_TAIL_EPS.
        let mut probs = Vec::new();
        let mut term = (-mean).exp();
        let mut cum = 0.0;
        let mut k = 0u32;
        while 1.0 - cum >= POISSON_TAIL_EPS {
            probs.push(term);
            cum += term;
            k += 1;
            term *= mean / f64::from(k);
            if k > 10_000 {
                return Err(Error::InvalidLaw(format!("poisson mean={mean} too large")));
            }
        }
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        let m1: f64 = probs.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
        let m2: f64 = probs
            .iter()
            .enumerate()
            .map(|(j, p)| j as f64 * (j as f64 - 1.0) * p)
            .sum();
        Ok(Self { kind: Kind::Poisson { lambda: mean, probs }, mean: m1, fact2: m2 })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn fact2(&self) -> f64 {
        self.fact2
    }

    /// Generating function, evaluated without domain restriction. May return
    /// infinity beyond the radius of convergence; used by the numerical
    /// differentiation oracle which probes slightly above s = 1.
    pub fn pgf_extended(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::Deterministic(c) => s.powi(*c as i32),
            Kind::Bernoulli(p) => 1.0 - p + p * s,
            Kind::Geometric { mean } => {
                let p = 1.0 / (1.0 + mean);
                let qs = (1.0 - p) * s;
                if qs >= 1.0 {
                    f64::INFINITY
                } else {
                    p / (1.0 - qs)
                }
            }
            Kind::Poisson { probs, .. } => horner(probs, s),
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match &self.kind {
            Kind::Deterministic(c) => *c,
            Kind::Bernoulli(p) => u64::from(rng.random::<f64>() < *p),
            Kind::Geometric { mean } => {
                Geometric::new(1.0 / (1.0 + mean)).expect("validated").sample(rng)
            }
            Kind::Poisson { lambda, .. } => {
                Poisson::new(*lambda).expect("validated").sample(rng) as u64
            }
        }
    }

    /// Sum of `n` independent copies, drawn in one shot through the exact
    /// convolution law of the family (deterministic multiple, binomial,
    /// negative binomial via gamma-Poisson mixing, Poisson).
    pub fn sample_sum(&self, n: u64, rng: &mut ChaCha8Rng) -> u64 {
        if n == 0 {
            return 0;
        }
        match &self.kind {
            Kind::Deterministic(c) => n.saturating_mul(*c),
            Kind::Bernoulli(p) => Binomial::new(n, *p).expect("validated").sample(rng),
            Kind::Geometric { mean } => {
                // Negative binomial through gamma-Poisson mixing; the gamma
                // scale is (1-p)/p, which is the mean itself.
                let lambda = Gamma::new(n as f64, *mean).expect("validated").sample(rng);
                sample_poisson_f64(lambda, rng)
            }
            Kind::Poisson { lambda, .. } => sample_poisson_f64(n as f64 * lambda, rng),
        }
    }
}

/// Poisson draw tolerating lambda = 0 and large means.
pub(crate) fn sample_poisson_f64(lambda: f64, rng: &mut ChaCha8Rng) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive lambda").sample(rng) as u64
}

/// Horner evaluation; all coefficients nonnegative, so the result is
/// monotone in `s` even under floating-point rounding.
pub(crate) fn horner(coeffs: &[f64], s: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * s + c;
    }
    acc
}

impl TryFrom<UnivariateSpec> for Univariate {
    type Error = Error;

    fn try_from(spec: UnivariateSpec) -> Result<Self> {
        match spec {
            UnivariateSpec::Deterministic { value } => Univariate::deterministic(value),
            UnivariateSpec::Bernoulli { p } => Univariate::bernoulli(p),
            UnivariateSpec::Geometric { mean } => Univariate::geometric(mean),
            UnivariateSpec::Poisson { mean } => Univariate::poisson(mean),
        }
    }
}

impl From<Univariate> for UnivariateSpec {
    fn from(law: Univariate) -> Self {
        match law.kind {
            Kind::Deterministic(value) => UnivariateSpec::Deterministic { value },
            Kind::Bernoulli(p) => UnivariateSpec::Bernoulli { p },
            Kind::Geometric { mean } => UnivariateSpec::Geometric { mean },
            Kind::Poisson { lambda, .. } => UnivariateSpec::Poisson { mean: lambda },
        }
    }
}

//! Reproduction laws for the two particle types.
//!
//! A type-1 mother produces a pair `(xi1, xi2)` of type-1 and type-2
//! daughters with joint generating function `f(s1, s2)`; a type-2 mother
//! produces `eta` type-2 daughters with generating function `h(s)` and unit
//! mean. Laws carry analytic moments, per-particle samplers and exact
//! aggregate samplers for whole generations.

mod univariate;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use univariate::{Univariate, UnivariateSpec, POISSON_TAIL_EPS};
use univariate::sample_poisson_f64;

/// First two factorial moments of a bivariate type-1 law:
/// `mu1 = E[xi1]`, `mu2 = E[xi1(xi1-1)]`, `theta1 = E[xi2]`,
/// `theta2 = E[xi2(xi2-1)]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mu1: f64,
    pub mu2: f64,
    pub theta1: f64,
    pub theta2: f64,
}

/// Serialized form of a type-1 law. Examples:
/// `{"family":"product","xi1":{"kind":"geometric","mean":1.0},
///   "xi2":{"kind":"poisson","mean":0.5}}`,
/// `{"family":"finite_table","entries":[[[1,0],0.5],[[0,1],0.5]]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Law1Spec {
    FiniteTable { entries: Vec<((u32, u32), f64)> },
    Product { xi1: UnivariateSpec, xi2: UnivariateSpec },
    LinearFractional { gamma: f64, q: f64, xi2: UnivariateSpec },
}

#[derive(Clone, Debug, PartialEq)]
enum Family1 {
    FiniteTable { cells: Vec<(u32, u32, f64)> },
    Product { xi1: Univariate, xi2: Univariate },
    /// P[xi1 = 0] = 1-gamma, P[xi1 = 1+g] = gamma (1-q) q^g; xi2 independent.
    LinearFractional { gamma: f64, q: f64, xi2: Univariate },
}

/// Validated bivariate reproduction law of a type-1 mother.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Law1Spec", into = "Law1Spec")]
pub struct OffspringLaw1 {
    family: Family1,
    moments: MomentSet,
}

impl OffspringLaw1 {
    pub fn finite_table(entries: Vec<((u32, u32), f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidLaw("finite table is empty".into()));
        }
        let mut sum = 0.0;
        for &((_, _), p) in &entries {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidLaw(format!("table probability {p} invalid")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLaw(format!("table probabilities sum to {sum}")));
        }
        let cells: Vec<(u32, u32, f64)> = entries.into_iter().map(|((j, k), p)| (j, k, p)).collect();
        let mut m = MomentSet { mu1: 0.0, mu2: 0.0, theta1: 0.0, theta2: 0.0 };
        for &(j, k, p) in &cells {
            let (j, k) = (f64::from(j), f64::from(k));
            m.mu1 += j * p;
            m.mu2 += j * (j - 1.0) * p;
            m.theta1 += k * p;
            m.theta2 += k * (k - 1.0) * p;
        }
        Self::validated(Family1::FiniteTable { cells }, m)
    }

    pub fn product(xi1: Univariate, xi2: Univariate) -> Result<Self> {
        let m = MomentSet {
            mu1: xi1.mean(),
            mu2: xi1.fact2(),
            theta1: xi2.mean(),
            theta2: xi2.fact2(),
        };
        Self::validated(Family1::Product { xi1, xi2 }, m)
    }

    pub fn linear_fractional(gamma: f64, q: f64, xi2: Univariate) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidLaw(format!("linear-fractional gamma={gamma}")));
        }
        if !(0.0..1.0).contains(&q) {
            return Err(Error::InvalidLaw(format!("linear-fractional q={q}")));
        }
        let m = MomentSet {
            mu1: gamma / (1.0 - q),
            mu2: 2.0 * gamma * q / ((1.0 - q) * (1.0 - q)),
            theta1: xi2.mean(),
            theta2: xi2.fact2(),
        };
        Self::validated(Family1::LinearFractional { gamma, q, xi2 }, m)
    }

    // Degenerate laws with mu1 = 0 or theta1 = 0 are permitted (they appear
    // as boundary cases in trajectory bookkeeping); operations that genuinely
    // need positivity (the associated walk step, embedded cycle moments)
    // check it at the call site.
    fn validated(family: Family1, moments: MomentSet) -> Result<Self> {
        for (name, v) in [
            ("mu1", moments.mu1),
            ("mu2", moments.mu2),
            ("theta1", moments.theta1),
            ("theta2", moments.theta2),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidLaw(format!("moment {name}={v} invalid")));
            }
        }
        let law = Self { family, moments };
        let at_one = law.pgf_extended(1.0, 1.0);
        if (at_one - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLaw(format!("pgf(1,1)={at_one} != 1")));
        }
        Ok(law)
    }

    /// Joint generating function `E[s1^xi1 s2^xi2]` on the unit square.
    pub fn pgf(&self, s1: f64, s2: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s1) || !(0.0..=1.0).contains(&s2) {
            return Err(Error::Domain(format!("pgf arguments ({s1},{s2}) outside [0,1]^2")));
        }
        Ok(self.pgf_extended(s1, s2))
    }

    /// Generating function without the domain check; may return infinity
    /// beyond the radius of convergence. All branches are monotone in each
    /// argument, coefficientwise, so exact-recursion orderings survive
    /// floating-point rounding.
    pub fn pgf_extended(&self, s1: f64, s2: f64) -> f64 {
        match &self.family {
            Family1::FiniteTable { cells } => cells
                .iter()
                .map(|&(j, k, p)| p * s1.powi(j as i32) * s2.powi(k as i32))
                .sum(),
            Family1::Product { xi1, xi2 } => xi1.pgf_extended(s1) * xi2.pgf_extended(s2),
            Family1::LinearFractional { gamma, q, xi2 } => {
                let qs = q * s1;
                let part1 = if qs >= 1.0 {
                    f64::INFINITY
                } else {
                    (1.0 - gamma) + gamma * (1.0 - q) * s1 / (1.0 - qs)
                };
                part1 * xi2.pgf_extended(s2)
            }
        }
    }

    pub fn moments(&self) -> MomentSet {
        self.moments
    }

    /// One mother's daughter counts `(xi1, xi2)`.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> (u64, u64) {
        match &self.family {
            Family1::FiniteTable { cells } => {
                let u: f64 = rng.random();
                let mut cum = 0.0;
                for &(j, k, p) in cells {
                    cum += p;
                    if u < cum {
                        return (u64::from(j), u64::from(k));
                    }
                }
                let &(j, k, _) = cells.last().expect("nonempty");
                (u64::from(j), u64::from(k))
            }
            Family1::Product { xi1, xi2 } => (xi1.sample(rng), xi2.sample(rng)),
            Family1::LinearFractional { gamma, q, xi2 } => {
                let x1 = if rng.random::<f64>() < *gamma {
                    1 + rand_distr::Geometric::new(1.0 - q).expect("validated").sample(rng)
                } else {
                    0
                };
                (x1, xi2.sample(rng))
            }
        }
    }

    /// Aggregate daughter counts of `n` mothers, drawn through the exact
    /// convolution law of the family (multinomial cell counts for tables,
    /// closed-form sums for the parametric families). Values may exceed the
    /// population cap; the caller is responsible for flagging overflow.
    pub fn sample_total(&self, n: u64, rng: &mut ChaCha8Rng) -> (u64, u64) {
        if n == 0 {
            return (0, 0);
        }
        if n == 1 {
            return self.sample(rng);
        }
        match &self.family {
            Family1::FiniteTable { cells } => {
                let probs: Vec<f64> = cells.iter().map(|&(_, _, p)| p).collect();
                let counts = multinomial(n, &probs, rng);
                let mut t1: u128 = 0;
                let mut t2: u128 = 0;
                for (&(j, k, _), c) in cells.iter().zip(counts) {
                    t1 += u128::from(j) * u128::from(c);
                    t2 += u128::from(k) * u128::from(c);
                }
                (clamp_u128(t1), clamp_u128(t2))
            }
            Family1::Product { xi1, xi2 } => (xi1.sample_sum(n, rng), xi2.sample_sum(n, rng)),
            Family1::LinearFractional { gamma, q, xi2 } => {
                let mothers = Binomial::new(n, *gamma).expect("validated").sample(rng);
                let x1 = if mothers == 0 || *q == 0.0 {
                    mothers
                } else {
                    let scale = q / (1.0 - q);
                    let lam = Gamma::new(mothers as f64, scale).expect("validated").sample(rng);
                    mothers.saturating_add(sample_poisson_f64(lam, rng))
                };
                (x1, xi2.sample_sum(n, rng))
            }
        }
    }
}

impl TryFrom<Law1Spec> for OffspringLaw1 {
    type Error = Error;

    fn try_from(spec: Law1Spec) -> Result<Self> {
        match spec {
            Law1Spec::FiniteTable { entries } => OffspringLaw1::finite_table(entries),
            Law1Spec::Product { xi1, xi2 } => {
                OffspringLaw1::product(Univariate::try_from(xi1)?, Univariate::try_from(xi2)?)
            }
            Law1Spec::LinearFractional { gamma, q, xi2 } => {
                OffspringLaw1::linear_fractional(gamma, q, Univariate::try_from(xi2)?)
            }
        }
    }
}

impl From<OffspringLaw1> for Law1Spec {
    fn from(law: OffspringLaw1) -> Self {
        match law.family {
            Family1::FiniteTable { cells } => Law1Spec::FiniteTable {
                entries: cells.into_iter().map(|(j, k, p)| ((j, k), p)).collect(),
            },
            Family1::Product { xi1, xi2 } => {
                Law1Spec::Product { xi1: xi1.into(), xi2: xi2.into() }
            }
            Family1::LinearFractional { gamma, q, xi2 } => {
                Law1Spec::LinearFractional { gamma, q, xi2: xi2.into() }
            }
        }
    }
}

/// Serialized form of a type-2 law. `linear_fractional_mean_one` is an alias
/// for `geometric_mean_one`, whose generating function 1/(2-s) is
/// linear-fractional.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Law2Spec {
    FiniteTable { entries: Vec<(u32, f64)> },
    GeometricMeanOne,
    LinearFractionalMeanOne,
    PoissonMeanOne,
}

#[derive(Clone, Debug, PartialEq)]
enum Family2 {
    FiniteTable { probs: Vec<(u32, f64)> },
    /// h(s) = 1/(2-s): geometric on {0,1,...} with success probability 1/2.
    GeometricMeanOne,
    /// Unit-mean Poisson, truncated and renormalized.
    PoissonMeanOne { table: Univariate },
}

/// Validated critical reproduction law of a type-2 mother (`m1 = 1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Law2Spec", into = "Law2Spec")]
pub struct OffspringLaw2 {
    family: Family2,
    m2: f64,
}

impl OffspringLaw2 {
    pub fn finite_table(entries: Vec<(u32, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidLaw("finite table is empty".into()));
        }
        let mut sum = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for &(j, p) in &entries {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidLaw(format!("table probability {p} invalid")));
            }
            sum += p;
            m1 += f64::from(j) * p;
            m2 += f64::from(j) * (f64::from(j) - 1.0) * p;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLaw(format!("table probabilities sum to {sum}")));
        }
        if (m1 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidLaw(format!("type-2 law must be critical, m1={m1}")));
        }
        // m2 = 0 (deterministic unit offspring) is tolerated as a boundary
        // case; asymptotic formulas that divide by m2 reject it at the call
        // site.
        if !m2.is_finite() || m2 < 0.0 {
            return Err(Error::InvalidLaw(format!("m2={m2} must be finite and nonnegative")));
        }
        Ok(Self { family: Family2::FiniteTable { probs: entries }, m2 })
    }

    pub fn geometric_mean_one() -> Self {
        Self { family: Family2::GeometricMeanOne, m2: 2.0 }
    }

    pub fn poisson_mean_one() -> Self {
        let table = Univariate::poisson(1.0).expect("unit mean in range");
        let m2 = table.fact2();
        Self { family: Family2::PoissonMeanOne { table }, m2 }
    }

    /// First moment; exactly one for every supported family.
    pub fn m1(&self) -> f64 {
        1.0
    }

    /// Factorial second moment `E[eta(eta-1)]`.
    pub fn m2(&self) -> f64 {
        self.m2
    }

    pub fn h(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!("h argument {s} outside [0,1]")));
        }
        Ok(self.h_extended(s))
    }

    pub fn h_extended(&self, s: f64) -> f64 {
        match &self.family {
            Family2::FiniteTable { probs } => {
                probs.iter().map(|&(j, p)| p * s.powi(j as i32)).sum()
            }
            Family2::GeometricMeanOne => {
                if s >= 2.0 {
                    f64::INFINITY
                } else {
                    1.0 / (2.0 - s)
                }
            }
            Family2::PoissonMeanOne { table } => table.pgf_extended(s),
        }
    }

    /// k-fold iterate `h_k(s)`, with `h_0` the identity.
    pub fn h_iterate(&self, k: usize, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!("h argument {s} outside [0,1]")));
        }
        Ok(self.h_iterate_extended(k, s))
    }

    pub fn h_iterate_extended(&self, k: usize, s: f64) -> f64 {
        let mut v = s;
        for _ in 0..k {
            v = self.h_extended(v);
            if !v.is_finite() {
                return v;
            }
        }
        v
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match &self.family {
            Family2::FiniteTable { probs } => {
                let u: f64 = rng.random();
                let mut cum = 0.0;
                for &(j, p) in probs {
                    cum += p;
                    if u < cum {
                        return u64::from(j);
                    }
                }
                u64::from(probs.last().expect("nonempty").0)
            }
            Family2::GeometricMeanOne => {
                rand_distr::Geometric::new(0.5).expect("fixed").sample(rng)
            }
            Family2::PoissonMeanOne { table } => table.sample(rng),
        }
    }

    /// Aggregate daughter count of `n` type-2 mothers; see
    /// [`OffspringLaw1::sample_total`] for overflow semantics.
    pub fn sample_total(&self, n: u64, rng: &mut ChaCha8Rng) -> u64 {
        if n == 0 {
            return 0;
        }
        if n == 1 {
            return self.sample(rng);
        }
        match &self.family {
            Family2::FiniteTable { probs } => {
                let ps: Vec<f64> = probs.iter().map(|&(_, p)| p).collect();
                let counts = multinomial(n, &ps, rng);
                let total: u128 = probs
                    .iter()
                    .zip(counts)
                    .map(|(&(j, _), c)| u128::from(j) * u128::from(c))
                    .sum();
                clamp_u128(total)
            }
            Family2::GeometricMeanOne => {
                // Negative binomial with unit-scale gamma mixing.
                let lam = Gamma::new(n as f64, 1.0).expect("fixed").sample(rng);
                sample_poisson_f64(lam, rng)
            }
            Family2::PoissonMeanOne { .. } => sample_poisson_f64(n as f64, rng),
        }
    }

    /// Forward-iterated extinction probabilities `q[n] = h_n(0)` for
    /// `n = 0..=horizon`, with the convention `q[0] = 0`.
    pub fn extinction_table(&self, horizon: usize) -> ExtinctionTable {
        let mut q = Vec::with_capacity(horizon + 1);
        q.push(0.0);
        let mut v = 0.0;
        for _ in 0..horizon {
            v = self.h_extended(v);
            q.push(v);
        }
        ExtinctionTable { q, m2: self.m2 }
    }
}

impl TryFrom<Law2Spec> for OffspringLaw2 {
    type Error = Error;

    fn try_from(spec: Law2Spec) -> Result<Self> {
        match spec {
            Law2Spec::FiniteTable { entries } => OffspringLaw2::finite_table(entries),
            Law2Spec::GeometricMeanOne | Law2Spec::LinearFractionalMeanOne => {
                Ok(OffspringLaw2::geometric_mean_one())
            }
            Law2Spec::PoissonMeanOne => Ok(OffspringLaw2::poisson_mean_one()),
        }
    }
}

impl From<OffspringLaw2> for Law2Spec {
    fn from(law: OffspringLaw2) -> Self {
        match law.family {
            Family2::FiniteTable { probs } => Law2Spec::FiniteTable { entries: probs },
            Family2::GeometricMeanOne => Law2Spec::GeometricMeanOne,
            Family2::PoissonMeanOne { .. } => Law2Spec::PoissonMeanOne,
        }
    }
}

/// Table of extinction probabilities of a single type-2 line.
#[derive(Clone, Debug)]
pub struct ExtinctionTable {
    q: Vec<f64>,
    m2: f64,
}

impl ExtinctionTable {
    pub fn horizon(&self) -> usize {
        self.q.len() - 1
    }

    /// `Q_n`, the probability that a single type-2 line is extinct after `n`
    /// generations.
    pub fn q(&self, n: usize) -> f64 {
        self.q[n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    /// `n (1 - Q_n) m2 / 2`; approaches one as `n` grows.
    pub fn check_statistic(&self, n: usize) -> f64 {
        n as f64 * (1.0 - self.q[n]) * self.m2 / 2.0
    }
}

/// `a_n = -log f(1, Q_n)`, the per-particle cost of feeding type-2 lines
/// that must die within `n` generations.
pub fn a_n(law1: &OffspringLaw1, extab: &ExtinctionTable, n: usize) -> Result<f64> {
    if n > extab.horizon() {
        return Err(Error::Domain(format!(
            "n={n} beyond extinction table horizon {}",
            extab.horizon()
        )));
    }
    Ok(-law1.pgf_extended(1.0, extab.q(n)).ln())
}

/// `a_n m2 n / (2 theta1)`; approaches one as `n` grows.
pub fn a_n_check_statistic(
    law1: &OffspringLaw1,
    law2: &OffspringLaw2,
    extab: &ExtinctionTable,
    n: usize,
) -> Result<f64> {
    let a = a_n(law1, extab, n)?;
    Ok(a * law2.m2() * n as f64 / (2.0 * law1.moments().theta1))
}

/// Multinomial cell counts via sequential conditional binomials.
fn multinomial(n: u64, probs: &[f64], rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut counts = Vec::with_capacity(probs.len());
    let mut remaining = n;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            counts.push(0);
            continue;
        }
        if i + 1 == probs.len() {
            counts.push(remaining);
            break;
        }
        let cond = (p / mass).clamp(0.0, 1.0);
        let c = Binomial::new(remaining, cond).expect("valid conditional").sample(rng);
        counts.push(c);
        remaining -= c;
        mass -= p;
        if mass <= 0.0 {
            // Remaining cells have no mass; nothing left to place.
            mass = f64::MIN_POSITIVE;
        }
    }
    while counts.len() < probs.len() {
        counts.push(0);
    }
    counts
}

fn clamp_u128(v: u128) -> u64 {
    u64::try_from(v).unwrap_or(u64::MAX)
}

#[cfg(test)]
mod tests;

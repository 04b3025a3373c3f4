//! Asymptotic constants and rates of the survival-probability decay laws,
//! plus the estimators used to measure the empirically-defined constants.
//!
//! Analytic pieces: the Kesten-type exponent `kappa` solving
//! `E[mu1^kappa] = 1`, the decay shape `q_kappa(n)`, the total-progeny
//! Laplace fixed point `phi(lambda) = e^{-lambda} f(phi, 1)` and the
//! constant-environment survival predictions. Empirical pieces: Hill tail
//! fits, `K / log n` survival fits and the subcritical constant assembly
//! `K = Gamma(1-kappa) C (2/(m2 a))^kappa` (with its `kappa = 1` and
//! `kappa > 1` branches).

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::offspring::{OffspringLaw1, OffspringLaw2};
use crate::process::TailSamples;

/// Threshold below which `kappa` is treated as exactly one when selecting
/// the `q_kappa` and constant branches. Verification laws pin `kappa = 1`
/// analytically, so the window only absorbs float noise.
pub const KAPPA_ONE_EPS: f64 = 1e-9;

/// Solve `E[mu1^kappa] = 1` for `kappa > 0` over a finite discrete law of
/// `mu1`. Requires `E[log mu1] < 0` and `P[mu1 > 1] > 0`; the map is convex
/// with a strictly negative slope at zero, so the positive root is unique.
pub fn solve_kappa(mu1_law: &[(f64, f64)]) -> Result<f64> {
    if mu1_law.is_empty() {
        return Err(Error::Domain("empty mu1 law".into()));
    }
    let total: f64 = mu1_law.iter().map(|&(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("mu1 law mass {total} != 1")));
    }
    if mu1_law.iter().any(|&(v, p)| !(v > 0.0) || !(p >= 0.0)) {
        return Err(Error::Domain("mu1 law needs positive values and nonnegative mass".into()));
    }
    let mean_log: f64 = mu1_law.iter().map(|&(v, p)| p * v.ln()).sum();
    if !(mean_log < 0.0) {
        return Err(Error::NoRoot(format!(
            "E[log mu1] = {mean_log} >= 0: process not subcritical"
        )));
    }
    if !mu1_law.iter().any(|&(v, p)| v > 1.0 && p > 0.0) {
        return Err(Error::NoRoot(
            "P[mu1 > 1] = 0: E[mu1^k] < 1 for every k > 0".into(),
        ));
    }

    let g = |k: f64| -> f64 { mu1_law.iter().map(|&(v, p)| p * v.powf(k)).sum::<f64>() - 1.0 };

    // g(0) = 0 with negative slope; expand the upper bracket until the
    // convex branch crosses back above one.
    let lo0 = 1e-6;
    if g(lo0) >= 0.0 {
        return Err(Error::NoRoot(format!("g({lo0}) = {} >= 0 at the left bracket", g(lo0))));
    }
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
        if hi > 64.0 {
            return Err(Error::NoRoot("no sign change up to kappa = 64".into()));
        }
    }
    let mut lo = lo0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let mut kappa = 0.5 * (lo + hi);
    // Newton polish; g'(k) = E[mu1^k log mu1].
    for _ in 0..4 {
        let gk = g(kappa);
        let dg: f64 = mu1_law.iter().map(|&(v, p)| p * v.powf(kappa) * v.ln()).sum();
        if dg.abs() < 1e-300 {
            break;
        }
        kappa -= gk / dg;
    }
    let residual = g(kappa).abs();
    if residual > 1e-12 {
        return Err(Error::NoRoot(format!("root polish left residual {residual}")));
    }
    Ok(kappa)
}

/// Decay shape of the subcritical survival probability:
/// `n^-kappa` below one, `log(n)/n` at one, `1/n` above one.
pub fn q_kappa(n: f64, kappa: f64) -> f64 {
    if (kappa - 1.0).abs() < KAPPA_ONE_EPS {
        n.ln() / n
    } else if kappa < 1.0 {
        n.powf(-kappa)
    } else {
        1.0 / n
    }
}

/// Minimal root of `phi = e^-lambda f(phi, 1)`, the Laplace transform of the
/// total type-1 progeny, found by monotone fixed-point iteration from zero.
/// Requires `mu1 <= 1`; for `lambda = 0` extinction is certain and the
/// transform is one.
pub fn total_progeny_laplace(law1: &OffspringLaw1, lambda: f64) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::Domain(format!("lambda={lambda} must be nonnegative")));
    }
    if law1.moments().mu1 > 1.0 + 1e-12 {
        return Err(Error::Domain("total progeny diverges for supercritical laws".into()));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    let damp = (-lambda).exp();
    let mut phi = 0.0f64;
    for _ in 0..20_000_000u64 {
        let next = damp * law1.pgf_extended(phi, 1.0);
        let delta = (next - phi).abs();
        phi = next;
        if delta < 5e-14 {
            break;
        }
    }
    Ok(phi)
}

/// Residual of the fixed-point equation at `phi`.
pub fn laplace_residual(law1: &OffspringLaw1, lambda: f64, phi: f64) -> f64 {
    (phi - (-lambda).exp() * law1.pgf_extended(phi, 1.0)).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Critical,
    Subcritical,
}

/// Constant-environment survival predictions at horizon `n`:
/// critical: `px ~ 2/(mu2 n)`, `pz ~ 2 sqrt(theta1) / sqrt(m2 mu2 n)`;
/// subcritical: `pz ~ 2 theta1 / (m2 (1 - mu1) n)` (px decays
/// geometrically and carries no closed-form constant).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConstantEnvPrediction {
    pub regime: Criticality,
    pub n: usize,
    pub px: Option<f64>,
    pub pz: f64,
}

pub fn constant_env_predictions(
    law1: &OffspringLaw1,
    law2: &OffspringLaw2,
    n: usize,
) -> Result<ConstantEnvPrediction> {
    let m = law1.moments();
    let m2 = law2.m2();
    if m2 <= 0.0 {
        return Err(Error::Domain("predictions need m2 > 0".into()));
    }
    let nf = n as f64;
    if (m.mu1 - 1.0).abs() < KAPPA_ONE_EPS {
        if m.mu2 <= 0.0 {
            return Err(Error::Domain("critical predictions need mu2 > 0".into()));
        }
        Ok(ConstantEnvPrediction {
            regime: Criticality::Critical,
            n,
            px: Some(2.0 / (m.mu2 * nf)),
            pz: 2.0 * m.theta1.sqrt() / (m2 * m.mu2 * nf).sqrt(),
        })
    } else if m.mu1 < 1.0 {
        Ok(ConstantEnvPrediction {
            regime: Criticality::Subcritical,
            n,
            px: None,
            pz: 2.0 * m.theta1 / (m2 * (1.0 - m.mu1) * nf),
        })
    } else {
        Err(Error::Domain(format!("supercritical law (mu1={})", m.mu1)))
    }
}

/// Hill-type fit of a power-law tail index with a plateau estimate of the
/// tail constant.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TailFit {
    /// Median Hill estimate over the fit range.
    pub kappa: f64,
    /// Plateau estimate of `C` in `P[X > x] ~ C x^-kappa`.
    pub c: f64,
    /// Hill estimates at the extremes of the fit range (sensitivity).
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    /// Order-statistic counts bounding the fit range.
    pub k_min: usize,
    pub k_max: usize,
    /// True when the Hill estimates drift too much across the range for a
    /// power-law plateau to be credible.
    pub plateau_rejected: bool,
    /// Propagated from the sample's censoring diagnostics.
    pub unreliable_tail: bool,
}

/// Hill estimator over the top order statistics, by default between the top
/// 1% and the top 0.01% of the sample. The fit range must hold at least
/// 10^4 exceedances at its wide end.
pub fn fit_tail_index(samples: &TailSamples, frac_hi: f64, frac_lo: f64) -> Result<TailFit> {
    let xs = samples.resolved();
    let n = xs.len();
    let k_max = ((n as f64) * frac_hi) as usize;
    let k_min = (((n as f64) * frac_lo) as usize).max(10);
    if k_max < 10_000 {
        return Err(Error::Domain(format!(
            "fit range holds {k_max} exceedances; need at least 10^4"
        )));
    }
    if k_min >= k_max {
        return Err(Error::Domain("empty Hill fit range".into()));
    }

    // Descending order statistics; xs is ascending.
    let x_at = |rank: usize| xs[n - 1 - rank];
    // Hill estimate at k: k / sum_{i<k} log(x_(i) / x_(k)).
    let hill = |k: usize| -> f64 {
        let xk = x_at(k);
        let mut acc = 0.0;
        for i in 0..k {
            acc += (x_at(i) / xk).ln();
        }
        k as f64 / acc
    };

    let grid_len = 25usize;
    let mut estimates = Vec::with_capacity(grid_len);
    let mut cs = Vec::with_capacity(grid_len);
    let ratio = (k_max as f64 / k_min as f64).powf(1.0 / (grid_len - 1) as f64);
    let mut kf = k_min as f64;
    let mut grid = Vec::with_capacity(grid_len);
    for _ in 0..grid_len {
        let k = (kf.round() as usize).clamp(k_min, k_max);
        if grid.last() != Some(&k) {
            grid.push(k);
        }
        kf *= ratio;
    }
    for &k in &grid {
        let kappa_k = hill(k);
        estimates.push(kappa_k);
        // P[X > x_(k)] ~ (k+1)/n, so C ~ x_(k)^kappa (k+1)/n; censored
        // replicates all exceed x_(k) in the usable range and are included
        // through the sample's exceedance count.
        let xk = x_at(k);
        cs.push(xk.powf(kappa_k) * samples.tail_prob(xk));
    }

    let mut sorted = estimates.clone();
    sorted.sort_by(f64::total_cmp);
    let kappa = sorted[sorted.len() / 2];
    let mut cs_sorted = cs.clone();
    cs_sorted.sort_by(f64::total_cmp);
    let c = cs_sorted[cs_sorted.len() / 2];

    // Drift diagnostic: medians of the deepest and shallowest quarters of
    // the fit range. A true power law keeps them within Hill noise (a few
    // percent here); exponential or stretched tails drift by tens of
    // percent.
    let quarter = (estimates.len() / 4).max(1);
    let med = |s: &[f64]| -> f64 {
        let mut v = s.to_vec();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let drift =
        (med(&estimates[..quarter]) / med(&estimates[estimates.len() - quarter..])).ln().abs();
    let plateau_rejected = drift > 0.25;

    Ok(TailFit {
        kappa,
        c,
        kappa_lo: estimates.iter().copied().fold(f64::INFINITY, f64::min),
        kappa_hi: estimates.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        k_min,
        k_max,
        plateau_rejected,
        unreliable_tail: samples.unreliable(),
    })
}

/// Plateau estimate of the tail constant `C` in `P[X > x] ~ C x^-kappa`
/// with `kappa` known: the median of `x^kappa P[X > x]` over a geometric
/// grid spanning the given quantile range of the resolved samples.
pub fn tail_constant_plateau(
    samples: &TailSamples,
    kappa: f64,
    q_lo: f64,
    q_hi: f64,
) -> Result<f64> {
    let xs = samples.resolved();
    if xs.len() < 1000 {
        return Err(Error::Domain("need at least 1000 resolved samples".into()));
    }
    let lo = percentile(xs, q_lo).max(f64::MIN_POSITIVE);
    let mut hi = percentile(xs, q_hi);
    let limit = samples.exact_below();
    if hi >= limit {
        hi = limit * 0.99;
    }
    if !(hi > lo) {
        return Err(Error::Domain("empty plateau grid".into()));
    }
    let points = 40usize;
    let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
    let mut x = lo;
    let mut vals = Vec::with_capacity(points);
    for _ in 0..points {
        let p = samples.tail_prob(x);
        if p > 0.0 {
            vals.push(x.powf(kappa) * p);
        }
        x *= ratio;
    }
    if vals.is_empty() {
        return Err(Error::Domain("no populated plateau points".into()));
    }
    vals.sort_by(f64::total_cmp);
    Ok(vals[vals.len() / 2])
}

/// Least-squares fit of a survival curve to `K / log n`, with an optional
/// independent plateau estimate `log(x) P[S > x]` from tail samples. The two
/// share one constant in the limit, but log-rate convergence is slow; expect
/// them to match only within a few tens of percent at desk scale.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LogLawFit {
    pub k_survival: f64,
    /// Relative root-mean-square residual of the fit.
    pub goodness: f64,
    pub k_tail: Option<f64>,
    pub ratio: Option<f64>,
}

pub fn fit_log_law(curve: &[(f64, f64)], tail: Option<&TailSamples>) -> Result<LogLawFit> {
    if curve.len() < 2 {
        return Err(Error::Domain("need at least two curve points".into()));
    }
    let span = curve.iter().map(|&(n, _)| n).fold((f64::INFINITY, 0.0f64), |(lo, hi), n| {
        (lo.min(n), hi.max(n))
    });
    if span.1 / span.0 < 8.0 {
        return Err(Error::Domain("curve must span at least three octaves".into()));
    }
    // Regression through the origin with regressor r = 1/log n.
    let mut num = 0.0;
    let mut den = 0.0;
    for &(n, p) in curve {
        let r = 1.0 / n.ln();
        num += p * r;
        den += r * r;
    }
    let k_survival = num / den;
    let mut rss = 0.0;
    let mut scale = 0.0;
    for &(n, p) in curve {
        let fit = k_survival / n.ln();
        rss += (p - fit) * (p - fit);
        scale += p * p;
    }
    let goodness = (rss / scale).sqrt();

    let k_tail = tail.map(|samples| {
        // Plateau of log(x) P[S > x] over a geometric grid covering the
        // well-populated part of the tail.
        let lo = percentile(samples.resolved(), 0.5).max(2.0);
        let hi_limit = samples.exact_below();
        let mut hi = percentile(samples.resolved(), 0.9995);
        if hi >= hi_limit {
            hi = hi_limit * 0.99;
        }
        let points = 40usize;
        let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
        let mut x = lo;
        let mut vals = Vec::with_capacity(points);
        for _ in 0..points {
            let p = samples.tail_prob(x);
            if p > 0.0 {
                vals.push(x.ln() * p);
            }
            x *= ratio;
        }
        vals.sort_by(f64::total_cmp);
        vals[vals.len() / 2]
    });
    let ratio = k_tail.map(|kt| k_survival / kt);
    Ok(LogLawFit { k_survival, goodness, k_tail, ratio })
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx]
}

/// Subcritical decay constants. For an IID environment `a = 1` and the
/// constant multiplies `q_kappa(n)` directly; for a Markov environment `a =
/// E[tau]` rescales the inner constant and the prediction carries an extra
/// `a^min(1,kappa)` prefactor from the time change `n ~ a r`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SubcriticalConstants {
    pub kappa: f64,
    /// `K`: `Gamma(1-kappa) C (2/(m2 a))^kappa` for `kappa < 1`,
    /// `(2/(m2 a)) C` at `kappa = 1`, `(2/(m2 a)) E[W]` for `kappa > 1`.
    pub k: f64,
    /// `a^min(1,kappa)`.
    pub prefactor: f64,
    /// `prefactor * k`: the coefficient of `q_kappa(n)`.
    pub coefficient: f64,
}

/// Assemble the subcritical constants from a measured tail constant (or
/// measured mean for `kappa > 1`). The gamma-function branch is only taken
/// for `kappa` strictly below one, keeping the pole at zero out of reach.
pub fn subcritical_constants(
    c_hat: f64,
    kappa: f64,
    m2: f64,
    a: f64,
    mean_w: Option<f64>,
) -> Result<SubcriticalConstants> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa={kappa} must be positive")));
    }
    if m2 <= 0.0 || a <= 0.0 {
        return Err(Error::Domain("need m2 > 0 and a > 0".into()));
    }
    let scale = 2.0 / (m2 * a);
    let k = if (kappa - 1.0).abs() < KAPPA_ONE_EPS {
        scale * c_hat
    } else if kappa < 1.0 {
        gamma(1.0 - kappa) * c_hat * scale.powf(kappa)
    } else {
        let mean = mean_w.ok_or_else(|| {
            Error::Domain("kappa > 1 branch needs the empirical mean of W".into())
        })?;
        scale * mean
    };
    let prefactor = a.powf(kappa.min(1.0));
    Ok(SubcriticalConstants { kappa, k, prefactor, coefficient: prefactor * k })
}

/// One predicted-vs-measured entry of a report. The `formula` field records
/// the algebraic expression the prediction came from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    pub formula: String,
    pub predicted: Option<f64>,
    pub measured: Option<f64>,
    pub se: Option<f64>,
    pub ratio: Option<f64>,
}

/// Fitted and predicted constants for one experiment, serialized as the
/// JSON body of the `kappa`, `fit` and `predict` subcommands.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub regime: String,
    pub entries: Vec<ReportEntry>,
    pub horizons: Vec<usize>,
    pub replicates: u64,
}

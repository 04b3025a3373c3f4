//! The regeneration-embedded process.
//!
//! Observing a Markov-environment process only at the return times of the
//! chain to its initial state yields a decomposable process in an IID
//! environment. One embedded generation composes the per-step generating
//! functions along a cycle: a type-2 daughter born `j` steps before the
//! cycle end contributes an `h_j`-iterated line, so the cycle's joint
//! generating function is
//! `f_hat(s1,s2) = f_{e_0}(f_{e_1}(... f_{e_{tau-1}}(s1, s2), h(s2) ...),
//! h_{tau-1}(s2))`, and the embedded type-2 law is `h_tau`.
//!
//! Per-cycle reproduction moments come in two independent routes: the
//! closed-form expressions in the per-step moments, and central finite
//! differences of the composed generating function with Richardson
//! refinement. The two must agree to about 1e-6 relative; a disagreement
//! signals a formula error rather than noise.

use rayon::prelude::*;

use crate::environment::EnvironmentSpec;
use crate::error::{Error, Result};
use crate::offspring::OffspringLaw2;
use crate::process::{SurvivalEstimate, TailSamples, TailStatistic, POPULATION_CAP};
use crate::streams::{Purpose, StreamFactory};

const CHUNK: u64 = 1024;

/// One regeneration cycle with its embedded reproduction moments.
#[derive(Clone, Copy, Debug)]
pub struct EmbeddedCycle {
    pub tau: usize,
    /// Sum of the associated-walk steps over the cycle; equals
    /// `log(mu1_hat)` identically.
    pub zeta_hat: f64,
    pub mu1_hat: f64,
    pub mu2_hat: f64,
    pub theta1_hat: f64,
    pub theta2_hat: f64,
}

/// Cycle statistics aggregated over independently drawn stationary cycles.
#[derive(Clone, Copy, Debug)]
pub struct EmbeddedSummary {
    /// Mean regeneration time `a = E[tau]`.
    pub a_hat: f64,
    pub e_zeta_hat: f64,
    pub var_zeta_hat: f64,
    pub cycles: u64,
    /// Analytic stationary mean of the one-step walk.
    pub mean_zeta: f64,
    /// `E_hat[zeta_hat] - E_hat[tau] E[zeta]` and the standard error of the
    /// per-cycle differences `zeta_hat - tau E[zeta]`; the Wald identity
    /// makes the gap mean zero.
    pub wald_gap: f64,
    pub wald_se: f64,
}

/// States of one cycle starting from a stationary draw of the initial state.
pub fn sample_cycle(
    spec: &EnvironmentSpec,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<u32>> {
    let e0 = spec.sample_initial(rng);
    cycle_from(spec, e0, rng)
}

/// States of one cycle started at `e0`: `e0` itself plus the excursion until
/// the first return. IID specs behave as the d = 1 chain; constant specs
/// regenerate every step.
pub fn cycle_from(
    spec: &EnvironmentSpec,
    e0: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<u32>> {
    let mut states = vec![e0 as u32];
    let mut cur = e0;
    loop {
        cur = spec.sample_step(cur, rng);
        if cur == e0 {
            return Ok(states);
        }
        states.push(cur as u32);
    }
}

/// Closed-form embedded moments from the per-step moments of a cycle.
///
/// With prefix products `P_k = prod_{i<k} mu_{1,i}` and
/// `A_{k,n} = sum_{j=k..n} theta_{1,j} prod_{i=k..j-1} mu_{1,i}`:
/// `mu1_hat = P_tau`,
/// `mu2_hat = mu1_hat sum_k (mu_{2,k}/mu_{1,k}) prod_{i>k} mu_{1,i}`,
/// `theta1_hat = sum_k theta_{1,k} P_k`, and
/// `theta2_hat = sum_k theta_{2,k} P_k + sum_{k<=tau-2} { mu_{2,k} A^2 +
/// 2 mu_{1,k} theta_{1,k} A + m2 (tau-1-k) theta_{1,k} } P_k` with
/// `A = A_{k+1,tau-1}`. The variance of the type-2 law enters as `m2`
/// because a daughter born at step `k` runs a critical line for `tau-1-k`
/// steps, whose iterated law has factorial second moment `(tau-1-k) m2`.
pub fn cycle_moments_closed_form(
    cycle: &[u32],
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
) -> Result<EmbeddedCycle> {
    let tau = cycle.len();
    if tau == 0 {
        return Err(Error::Domain("empty cycle".into()));
    }
    let moments: Vec<_> = cycle.iter().map(|&e| spec.law(e as usize).moments()).collect();
    if moments.iter().any(|m| m.mu1 <= 0.0) {
        return Err(Error::Domain("embedded moments need mu1 > 0 in every state".into()));
    }

    // Prefix products P_k = prod_{i<k} mu_{1,i} and suffix products
    // prod_{i>k} mu_{1,i}.
    let mut prefix = vec![1.0f64; tau + 1];
    for k in 0..tau {
        prefix[k + 1] = prefix[k] * moments[k].mu1;
    }
    let mu1_hat = prefix[tau];
    let mut suffix = vec![1.0f64; tau + 1];
    for k in (0..tau).rev() {
        suffix[k] = suffix[k + 1] * moments[k].mu1;
    }

    let mu2_hat: f64 = mu1_hat
        * (0..tau).map(|k| moments[k].mu2 / moments[k].mu1 * suffix[k + 1]).sum::<f64>();
    let theta1_hat: f64 = (0..tau).map(|k| moments[k].theta1 * prefix[k]).sum();

    // a[k] = A_{k, tau-1}, built right to left.
    let mut a = vec![0.0f64; tau + 1];
    for k in (0..tau).rev() {
        a[k] = moments[k].theta1 + moments[k].mu1 * a[k + 1];
    }

    let m2 = law2.m2();
    let mut theta2_hat: f64 = (0..tau).map(|k| moments[k].theta2 * prefix[k]).sum();
    for k in 0..tau.saturating_sub(1) {
        let aa = a[k + 1];
        theta2_hat += (moments[k].mu2 * aa * aa
            + 2.0 * moments[k].mu1 * moments[k].theta1 * aa
            + m2 * (tau - 1 - k) as f64 * moments[k].theta1)
            * prefix[k];
    }

    Ok(EmbeddedCycle {
        tau,
        zeta_hat: mu1_hat.ln(),
        mu1_hat,
        mu2_hat,
        theta1_hat,
        theta2_hat,
    })
}

/// Composed generating function of one cycle,
/// `f_hat(s1, s2)`, evaluated without domain restriction.
pub fn composed_pgf(
    cycle: &[u32],
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    s1: f64,
    s2: f64,
) -> f64 {
    let tau = cycle.len();
    // h_j(s2) for j = 0..tau-1.
    let mut h_iter = Vec::with_capacity(tau);
    let mut h = s2;
    for _ in 0..tau {
        h_iter.push(h);
        h = law2.h_extended(h);
    }
    let mut v = s1;
    for k in (0..tau).rev() {
        v = spec.law(cycle[k] as usize).pgf_extended(v, h_iter[tau - 1 - k]);
        if !v.is_finite() {
            return f64::INFINITY;
        }
    }
    v
}

/// Embedded moments extracted numerically from the composed generating
/// function, plus the embedded type-2 moments read off `h_tau`.
#[derive(Clone, Copy, Debug)]
pub struct OracleCycle {
    pub moments: EmbeddedCycle,
    /// First moment of `h_tau`; equals one for every cycle.
    pub m1_hat: f64,
    /// Factorial second moment of `h_tau`; equals `tau * m2`.
    pub m2_hat: f64,
}

/// Numerical-differentiation oracle for the embedded moments: central
/// differences at (1,1) over steps {1e-2, 1e-3, 1e-4} with Richardson
/// refinement. Steps shrink automatically when a cycle's composed function
/// leaves its smooth region; failure to converge is reported rather than
/// silently absorbed.
pub fn cycle_moments_oracle(
    cycle: &[u32],
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
) -> Result<OracleCycle> {
    let tau = cycle.len();
    let f_s1 = |s: f64| composed_pgf(cycle, spec, law2, s, 1.0);
    let f_s2 = |s: f64| composed_pgf(cycle, spec, law2, 1.0, s);
    let h_tau = |s: f64| law2.h_iterate_extended(tau, s);

    let mu1_hat = richardson_derivative(&f_s1, 1, 1e-2)?;
    let mu2_hat = richardson_derivative(&f_s1, 2, 1e-2)?;
    let theta1_hat = richardson_derivative(&f_s2, 1, 1e-2)?;
    let theta2_hat = richardson_derivative(&f_s2, 2, 1e-2)?;
    let m1_hat = richardson_derivative(&h_tau, 1, 1e-2)?;
    let m2_hat = richardson_derivative(&h_tau, 2, 1e-2)?;

    Ok(OracleCycle {
        moments: EmbeddedCycle {
            tau,
            zeta_hat: mu1_hat.ln(),
            mu1_hat,
            mu2_hat,
            theta1_hat,
            theta2_hat,
        },
        m1_hat,
        m2_hat,
    })
}

/// Central-difference derivative of `order` 1 or 2 at s = 1, refined by a
/// Richardson (Ridders-style) extrapolation ladder. The ladder starts at
/// `base_step` and halves; rungs where the function has left its smooth
/// region (infinite, nonpositive or absurdly large values: composed
/// generating functions of long cycles cross a pole close to 1) are skipped
/// by lowering the entry step. Extrapolation stops once rounding noise
/// takes over; the best error found must clear a 1e-7 relative bar.
fn richardson_derivative<F: Fn(f64) -> f64>(g: &F, order: u8, base_step: f64) -> Result<f64> {
    let center = g(1.0);
    let usable = |v: f64| v.is_finite() && v > 0.0 && v < 1e12;

    // Largest step at which both probes stay in the smooth region.
    let mut step = base_step;
    let mut tries = 0;
    while !(usable(g(1.0 + step)) && usable(g(1.0 - step))) {
        step /= 10.0;
        tries += 1;
        if tries > 12 {
            return Err(Error::IllConditioned(format!(
                "no smooth neighborhood found below step {base_step}"
            )));
        }
    }

    const LADDER: usize = 14;
    let ratio: f64 = 2.0;
    let sq = ratio * ratio;
    let mut table = [[0.0f64; LADDER]; LADDER];
    let mut best = f64::NAN;
    let mut best_err = f64::INFINITY;
    let mut delta = step;
    for j in 0..LADDER {
        let hi = g(1.0 + delta);
        let lo = g(1.0 - delta);
        if !usable(hi) || !usable(lo) {
            break;
        }
        table[j][0] = match order {
            1 => (hi - lo) / (2.0 * delta),
            _ => (hi - 2.0 * center + lo) / (delta * delta),
        };
        let mut fac = sq;
        for k in 1..=j {
            table[j][k] = (table[j][k - 1] * fac - table[j - 1][k - 1]) / (fac - 1.0);
            fac *= sq;
            let err = (table[j][k] - table[j][k - 1])
                .abs()
                .max((table[j][k] - table[j - 1][k - 1]).abs());
            if err <= best_err {
                best_err = err;
                best = table[j][k];
            }
        }
        // Abort once the ladder is dominated by rounding noise.
        if j > 2 && (table[j][j] - table[j - 1][j - 1]).abs() >= 4.0 * best_err && best_err > 0.0
        {
            break;
        }
        delta /= ratio;
    }

    if best.is_nan() || best_err > 1e-7 * best.abs().max(1.0) {
        return Err(Error::IllConditioned(format!(
            "derivative of order {order} converged to error {best_err} only"
        )));
    }
    Ok(best)
}

/// Draw `count` stationary cycles and their closed-form moments.
pub fn sample_cycles(
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    count: u64,
    factory: &StreamFactory,
) -> Result<Vec<EmbeddedCycle>> {
    let chunks = count.div_ceil(CHUNK);
    let partials: Vec<Result<Vec<EmbeddedCycle>>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(count);
            let mut out = Vec::with_capacity((hi - lo) as usize);
            for rep in lo..hi {
                let mut rng = factory.rng(Purpose::Cycles, rep);
                let states = sample_cycle(spec, &mut rng)?;
                out.push(cycle_moments_closed_form(&states, spec, law2)?);
            }
            Ok(out)
        })
        .collect();
    let mut cycles = Vec::with_capacity(count as usize);
    for p in partials {
        cycles.extend(p?);
    }
    Ok(cycles)
}

/// Aggregate cycle statistics and check the Wald identity
/// `E[zeta_hat] = E[tau] E[zeta]` at four standard errors.
pub fn embed_summary(
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    cycles: u64,
    factory: &StreamFactory,
) -> Result<EmbeddedSummary> {
    if cycles < 1_000 {
        return Err(Error::Domain("need at least 1000 cycles".into()));
    }
    let sampled = sample_cycles(spec, law2, cycles, factory)?;
    summarize_cycles(&sampled, spec.mean_zeta())
}

/// Summary of already-sampled cycles; exposed so callers can reuse a cycle
/// set for the per-cycle dump and the summary.
pub fn summarize_cycles(sampled: &[EmbeddedCycle], mean_zeta: f64) -> Result<EmbeddedSummary> {
    let n = sampled.len() as f64;
    let a_hat = sampled.iter().map(|c| c.tau as f64).sum::<f64>() / n;
    let e_zeta_hat = sampled.iter().map(|c| c.zeta_hat).sum::<f64>() / n;
    let var_zeta_hat = sampled
        .iter()
        .map(|c| (c.zeta_hat - e_zeta_hat) * (c.zeta_hat - e_zeta_hat))
        .sum::<f64>()
        / (n - 1.0);

    // Per-cycle differences have mean zero under the Wald identity.
    let diffs: Vec<f64> =
        sampled.iter().map(|c| c.zeta_hat - c.tau as f64 * mean_zeta).collect();
    let wald_gap = crate::stats::mean(&diffs);
    let wald_se = crate::stats::standard_error(&diffs);
    if wald_gap.abs() > 4.0 * wald_se && wald_se > 0.0 {
        return Err(Error::Domain(format!(
            "Wald identity violated: gap {wald_gap} exceeds 4 x {wald_se}"
        )));
    }
    Ok(EmbeddedSummary {
        a_hat,
        e_zeta_hat,
        var_zeta_hat,
        cycles: sampled.len() as u64,
        mean_zeta,
        wald_gap,
        wald_se,
    })
}

/// A trajectory observed at regeneration times.
#[derive(Clone, Debug)]
pub struct EmbeddedView {
    /// X at tau_0, tau_1, ..., tau_r.
    pub x_hat: Vec<u64>,
    /// Z at the same times.
    pub z_hat: Vec<u64>,
    /// Absolute regeneration times.
    pub taus: Vec<usize>,
}

/// Simulate the underlying process cycle by cycle and record it at the
/// regeneration times. On a constant environment every step regenerates and
/// the view coincides with the plain trajectory.
pub fn embedded_process_view(
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    r_cycles: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<EmbeddedView> {
    let e0 = spec.sample_initial(rng);
    let mut x: u64 = 1;
    let mut z: u64 = 0;
    let mut x_hat = vec![x];
    let mut z_hat = vec![z];
    let mut taus = vec![0usize];
    let mut time = 0usize;
    for _ in 0..r_cycles {
        let cycle = cycle_from(spec, e0, rng)?;
        for &state in &cycle {
            let (b1, b2) =
                if x > 0 { spec.law(state as usize).sample_total(x, rng) } else { (0, 0) };
            let z_next = law2.sample_total(z, rng).checked_add(b2).unwrap_or(u64::MAX);
            time += 1;
            if b1 > POPULATION_CAP || z_next > POPULATION_CAP {
                return Err(Error::Overflow { generation: time });
            }
            x = b1;
            z = z_next;
        }
        x_hat.push(x);
        z_hat.push(z);
        taus.push(time);
    }
    Ok(EmbeddedView { x_hat, z_hat, taus })
}

/// Naive Monte Carlo survival curve of the embedded process over cycle
/// horizons: estimates of `P[Z_hat_r > 0]`, `P[X_hat_r > 0]` and
/// `P[X_hat_r + Z_hat_r > 0]`.
pub fn embedded_survival_curve(
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    r_horizons: &[usize],
    replicates: u64,
    factory: &StreamFactory,
) -> Result<Vec<SurvivalEstimate>> {
    if r_horizons.is_empty() || r_horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("cycle horizons must be strictly increasing".into()));
    }
    let max_r = *r_horizons.last().expect("nonempty");
    let chunks = replicates.div_ceil(CHUNK);
    let partials: Vec<(Vec<[u64; 3]>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut counts = vec![[0u64; 3]; r_horizons.len()];
            let mut failed = 0u64;
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(replicates);
            for rep in lo..hi {
                let mut rng = factory.rng(Purpose::Embedded, rep);
                match embedded_indicators(spec, law2, r_horizons, max_r, &mut rng) {
                    Ok(flags) => {
                        for (i, (zf, xf)) in flags.into_iter().enumerate() {
                            counts[i][0] += u64::from(zf);
                            counts[i][1] += u64::from(xf);
                            counts[i][2] += u64::from(zf || xf);
                        }
                    }
                    Err(_) => failed += 1,
                }
            }
            (counts, failed)
        })
        .collect();

    let mut counts = vec![[0u64; 3]; r_horizons.len()];
    let mut failed = 0u64;
    for (c, f) in partials {
        for i in 0..counts.len() {
            for j in 0..3 {
                counts[i][j] += c[i][j];
            }
        }
        failed += f;
    }
    let done = replicates - failed;
    Ok(r_horizons
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let p = |j: usize| counts[i][j] as f64 / done as f64;
            SurvivalEstimate {
                n: r,
                p_z: p(0),
                se_z: crate::stats::proportion_se(p(0), done),
                p_x: p(1),
                se_x: crate::stats::proportion_se(p(1), done),
                p_either: p(2),
                se_either: crate::stats::proportion_se(p(2), done),
                replicates: done,
                estimator: crate::process::Estimator::Naive,
                failed,
            }
        })
        .collect())
}

fn embedded_indicators(
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    r_horizons: &[usize],
    max_r: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<(bool, bool)>> {
    let e0 = spec.sample_initial(rng);
    let mut flags = Vec::with_capacity(r_horizons.len());
    let mut next = 0usize;
    if r_horizons[0] == 0 {
        flags.push((false, true));
        next = 1;
    }
    let mut x: u64 = 1;
    let mut z: u64 = 0;
    for r in 0..max_r {
        if x == 0 && z == 0 {
            while next < r_horizons.len() {
                flags.push((false, false));
                next += 1;
            }
            break;
        }
        let cycle = cycle_from(spec, e0, rng)?;
        for &state in &cycle {
            let (b1, b2) =
                if x > 0 { spec.law(state as usize).sample_total(x, rng) } else { (0, 0) };
            let z_next = law2.sample_total(z, rng).checked_add(b2).unwrap_or(u64::MAX);
            if b1 > POPULATION_CAP || z_next > POPULATION_CAP {
                return Err(Error::Overflow { generation: r });
            }
            x = b1;
            z = z_next;
        }
        if next < r_horizons.len() && r_horizons[next] == r + 1 {
            flags.push((z > 0, x > 0));
            next += 1;
        }
    }
    debug_assert_eq!(flags.len(), r_horizons.len());
    Ok(flags)
}

/// Tail of the embedded total-immigrant statistic `W_hat`: the type-2
/// particles present at each cycle end that descend from daughters born
/// during that cycle, summed until the embedded type-1 line dies.
pub fn embedded_w_tail(
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    replicates: u64,
    cycle_cap: usize,
    factory: &StreamFactory,
) -> Result<TailSamples> {
    let chunks = replicates.div_ceil(CHUNK);
    let partials: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut resolved = Vec::new();
            let mut censored = Vec::new();
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(replicates);
            for rep in lo..hi {
                let mut rng = factory.rng(Purpose::Embedded, rep);
                let (done, w) = embedded_w_run(spec, law2, cycle_cap, &mut rng)?;
                if done {
                    resolved.push(w);
                } else {
                    censored.push(w);
                }
            }
            Ok((resolved, censored))
        })
        .collect();

    let mut resolved = Vec::new();
    let mut censored = Vec::new();
    for p in partials {
        let (r, c) = p?;
        resolved.extend(r);
        censored.extend(c);
    }
    resolved.sort_by(f64::total_cmp);
    censored.sort_by(f64::total_cmp);
    Ok(TailSamples::from_parts(
        TailStatistic::WTotal,
        resolved,
        censored,
        replicates,
        cycle_cap,
    ))
}

fn embedded_w_run(
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    cycle_cap: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<(bool, f64)> {
    let e0 = spec.sample_initial(rng);
    let mut x: u64 = 1;
    let mut w_hat = 0.0f64;
    for _ in 0..cycle_cap {
        if x == 0 {
            return Ok((true, w_hat));
        }
        let cycle = cycle_from(spec, e0, rng)?;
        // Fresh immigrant line per cycle: daughters born during the cycle
        // plus their own descendants, counted at the cycle end. After the
        // type-1 line dies mid-cycle only the young line keeps evolving.
        let mut young: u64 = 0;
        for &state in &cycle {
            let (b1, b2) =
                if x > 0 { spec.law(state as usize).sample_total(x, rng) } else { (0, 0) };
            let young_next = law2.sample_total(young, rng).checked_add(b2).unwrap_or(u64::MAX);
            if b1 > POPULATION_CAP || young_next > POPULATION_CAP {
                return Ok((false, w_hat + young as f64));
            }
            x = b1;
            young = young_next;
        }
        w_hat += young as f64;
    }
    Ok((x == 0, w_hat))
}

/// Exact discrete law of `mu1_hat` for the two-state chain: a cycle starting
/// in state `i` visits `i` once and the other state `tau - 1` times, so
/// `mu1_hat = mu_i mu_j^{tau-1}` with the cycle-length law of the chain.
/// Enumeration stops once the remaining probability mass drops below
/// `tail_eps`.
pub fn two_state_embedded_mu1_law(
    pi1: f64,
    d: f64,
    mu: [f64; 2],
    tail_eps: f64,
) -> Result<Vec<(f64, f64)>> {
    crate::environment::TwoStateTauLaw::new(pi1, d)?;
    let pis = [pi1, 1.0 - pi1];
    let mut law = Vec::new();
    let mut covered = 0.0;
    for i in 0..2 {
        let j = 1 - i;
        // Started in state i: the cycle stays in j until the return, so
        // P_i[tau = 1] = 1 - d pi_j and
        // P_i[tau = k] = d pi_j (1 - d pi_i)^{k-2} d pi_i for k >= 2.
        let p1 = pis[i] * (1.0 - d * pis[j]);
        law.push((mu[i], p1));
        covered += p1;
        let ratio = 1.0 - d * pis[i];
        let mut mass = pis[i] * d * pis[j] * d * pis[i];
        let mut value = mu[i] * mu[j];
        let mut k = 2usize;
        while mass > 1e-22 && k <= 200_000 {
            law.push((value, mass));
            covered += mass;
            mass *= ratio;
            value *= mu[j];
            k += 1;
        }
    }
    if 1.0 - covered > tail_eps {
        return Err(Error::Domain(format!("cycle-law enumeration covered only {covered}")));
    }
    Ok(law)
}

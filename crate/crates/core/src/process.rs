//! The two-type process: trajectory simulation, the conditionally exact
//! survival recursion, survival estimators and total-progeny tail sampling.
//!
//! State per generation: `X_k` type-1 particles, `Z_k` type-2 particles,
//! `Y_k` type-2 daughters produced by the type-1 particles present at time
//! `k` (so `Y_0 = Z_1`). `T` is the type-1 extinction time, `S_n`/`W_n` the
//! running totals of `X_k`/`Y_k`, and `S^(1)`, `S^(2)` the theta-weighted
//! totals used by the heavy-tail identities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{EnvSequence, EnvironmentSpec};
use crate::error::{Error, Result};
use crate::offspring::{ExtinctionTable, OffspringLaw2};
use crate::streams::{Purpose, StreamFactory};

/// Hard cap on population counts and count statistics. Exceeding it is an
/// explicit failure; counts never wrap or saturate silently.
pub const POPULATION_CAP: u64 = 1 << 62;

/// Replicates per parallel work unit. Aggregation folds chunk results in
/// index order, so outputs do not depend on the worker count.
const CHUNK: u64 = 1024;

/// One realized trajectory with every statistic the limit theorems touch.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    /// X_0..X_n.
    pub x: Vec<u64>,
    /// Y_0..Y_{n-1}.
    pub y: Vec<u64>,
    /// Z_0..Z_n.
    pub z: Vec<u64>,
    /// min(T, horizon) with T the first time X hits zero.
    pub t: usize,
    /// True when X was still positive at the horizon.
    pub censored: bool,
    /// S_T = sum of X_k over k < T (or k < horizon when censored).
    pub s_total: u64,
    /// W_T = sum of Y_k over the same range.
    pub w_total: u64,
    /// S_T^(1) = sum of X_k theta_{1,k}.
    pub s1: f64,
    /// S_T^(2) = sum of X_k theta_{2,k}.
    pub s2: f64,
}

/// Simulate the two-type process for `horizon` generations, drawing the
/// environment inside the given stream. Per-generation reproduction is drawn
/// through the laws' exact aggregate samplers. After type-1 extinction the
/// type-2 population keeps evolving until the horizon.
pub fn simulate(
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    horizon: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<TrajectoryRecord> {
    let mut x = Vec::with_capacity(horizon + 1);
    let mut y = Vec::with_capacity(horizon);
    let mut z = Vec::with_capacity(horizon + 1);
    let mut cur_x: u64 = 1;
    let mut cur_z: u64 = 0;
    x.push(cur_x);
    z.push(cur_z);
    let mut state = 0usize;
    let mut t = None;
    let mut s_total: u64 = 0;
    let mut w_total: u64 = 0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;

    for k in 0..horizon {
        let (born1, born2) = if cur_x > 0 {
            state = if k == 0 { spec.sample_initial(rng) } else { spec.sample_step(state, rng) };
            let m = spec.law(state).moments();
            s_total = add_capped(s_total, cur_x, k)?;
            s1 += cur_x as f64 * m.theta1;
            s2 += cur_x as f64 * m.theta2;
            let (b1, b2) = spec.law(state).sample_total(cur_x, rng);
            w_total = add_capped(w_total, b2, k)?;
            (b1, b2)
        } else {
            (0, 0)
        };
        let z_off = law2.sample_total(cur_z, rng);
        let next_z = z_off.checked_add(born2).unwrap_or(u64::MAX);
        if born1 > POPULATION_CAP || next_z > POPULATION_CAP {
            return Err(Error::Overflow { generation: k + 1 });
        }
        cur_x = born1;
        cur_z = next_z;
        x.push(cur_x);
        y.push(born2);
        z.push(cur_z);
        if cur_x == 0 && t.is_none() {
            t = Some(k + 1);
        }
    }

    Ok(TrajectoryRecord {
        x,
        y,
        z,
        t: t.unwrap_or(horizon),
        censored: t.is_none(),
        s_total,
        w_total,
        s1,
        s2,
    })
}

fn add_capped(acc: u64, inc: u64, generation: usize) -> Result<u64> {
    match acc.checked_add(inc) {
        Some(v) if v <= POPULATION_CAP => Ok(v),
        _ => Err(Error::Overflow { generation }),
    }
}

/// Conditionally exact survival probabilities given one environment path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactSurvival {
    /// P[Z_n > 0 | env].
    pub pz: f64,
    /// P[X_n > 0 | env].
    pub px: f64,
    /// P[X_n + Z_n > 0 | env].
    pub peither: f64,
}

/// Backward recursion for the joint generating function of `(X_n, Z_n)`
/// given the environment: `v_k = f_k(v_{k+1}, h_{n-k-1}(s2))` with
/// `v_n = s1`. A type-2 daughter born to a type-1 mother at time `k` exists
/// at `k+1` and has `n-k-1` generations left, hence the `Q_{n-k-1}` pairing.
///
/// Survival probabilities are read off at `(s1, s2) = (1, 0)` for `Z_n`,
/// `(0, 1)` for `X_n` and `(0, 0)` for either type. The recursion is
/// monotone, so `pz <= peither <= px + pz` holds path by path.
pub fn survival_given_env(
    spec: &EnvironmentSpec,
    seq: &EnvSequence,
    n: usize,
    extab: &ExtinctionTable,
) -> Result<ExactSurvival> {
    if seq.len() < n {
        return Err(Error::Domain(format!("environment sequence shorter than n={n}")));
    }
    if extab.horizon() + 1 < n {
        return Err(Error::Domain(format!("extinction table shorter than n={n}")));
    }
    let mut vz = 1.0f64; // s1 = 1, s2 = 0
    let mut ve = 0.0f64; // s1 = 0, s2 = 0
    let mut vx = 0.0f64; // s1 = 0, s2 = 1
    for k in (0..n).rev() {
        let law = spec.law(seq.state(k));
        let q = extab.q(n - k - 1);
        vz = law.pgf_extended(vz, q);
        ve = law.pgf_extended(ve, q);
        vx = law.pgf_extended(vx, 1.0);
    }
    Ok(ExactSurvival { pz: 1.0 - vz, px: 1.0 - vx, peither: 1.0 - ve })
}

/// Survival estimator family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Empirical fraction of simulated trajectories surviving.
    Naive,
    /// Average of the exact conditional survival over sampled environment
    /// paths; unbiased with strictly smaller variance (no particle noise).
    RaoBlackwell,
}

/// Survival estimates at one horizon.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub n: usize,
    pub p_z: f64,
    pub se_z: f64,
    pub p_x: f64,
    pub se_x: f64,
    pub p_either: f64,
    pub se_either: f64,
    pub replicates: u64,
    pub estimator: Estimator,
    /// Replicates abandoned due to population overflow (naive estimator
    /// only). Must be zero in verification runs.
    pub failed: u64,
}

/// Estimate survival probabilities at each horizon with a shared set of
/// replicates. Horizons must be strictly increasing.
pub fn survival_curve(
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    horizons: &[usize],
    replicates: u64,
    estimator: Estimator,
    factory: &StreamFactory,
) -> Result<Vec<SurvivalEstimate>> {
    if horizons.is_empty() || replicates == 0 {
        return Err(Error::Domain("need at least one horizon and one replicate".into()));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("horizons must be strictly increasing".into()));
    }
    let max_n = *horizons.last().expect("nonempty");
    match estimator {
        Estimator::Naive => naive_curve(spec, law2, horizons, replicates, factory, max_n),
        Estimator::RaoBlackwell => rb_curve(spec, law2, horizons, replicates, factory, max_n),
    }
}

/// Single-horizon convenience wrapper around [`survival_curve`].
pub fn estimate_survival(
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    n: usize,
    replicates: u64,
    estimator: Estimator,
    factory: &StreamFactory,
) -> Result<SurvivalEstimate> {
    Ok(survival_curve(spec, law2, &[n], replicates, estimator, factory)?.remove(0))
}

#[derive(Clone, Default)]
struct NaiveAcc {
    z: Vec<u64>,
    x: Vec<u64>,
    either: Vec<u64>,
    failed: u64,
    done: u64,
}

fn naive_curve(
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    horizons: &[usize],
    replicates: u64,
    factory: &StreamFactory,
    max_n: usize,
) -> Result<Vec<SurvivalEstimate>> {
    let chunks = replicates.div_ceil(CHUNK);
    let partials: Vec<NaiveAcc> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = NaiveAcc {
                z: vec![0; horizons.len()],
                x: vec![0; horizons.len()],
                either: vec![0; horizons.len()],
                failed: 0,
                done: 0,
            };
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(replicates);
            for rep in lo..hi {
                let mut rng = factory.rng(Purpose::Particles, rep);
                match survival_indicators(spec, law2, horizons, max_n, &mut rng) {
                    Some(flags) => {
                        for (i, (zs, xs)) in flags.into_iter().enumerate() {
                            acc.z[i] += u64::from(zs);
                            acc.x[i] += u64::from(xs);
                            acc.either[i] += u64::from(zs || xs);
                        }
                        acc.done += 1;
                    }
                    None => acc.failed += 1,
                }
            }
            acc
        })
        .collect();

    let mut total = NaiveAcc {
        z: vec![0; horizons.len()],
        x: vec![0; horizons.len()],
        either: vec![0; horizons.len()],
        failed: 0,
        done: 0,
    };
    for p in partials {
        for i in 0..horizons.len() {
            total.z[i] += p.z[i];
            total.x[i] += p.x[i];
            total.either[i] += p.either[i];
        }
        total.failed += p.failed;
        total.done += p.done;
    }

    let r = total.done.max(1);
    Ok(horizons
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let pz = total.z[i] as f64 / r as f64;
            let px = total.x[i] as f64 / r as f64;
            let pe = total.either[i] as f64 / r as f64;
            SurvivalEstimate {
                n,
                p_z: pz,
                se_z: crate::stats::proportion_se(pz, r),
                p_x: px,
                se_x: crate::stats::proportion_se(px, r),
                p_either: pe,
                se_either: crate::stats::proportion_se(pe, r),
                replicates: total.done,
                estimator: Estimator::Naive,
                failed: total.failed,
            }
        })
        .collect())
}

/// Lean trajectory walk recording `(Z_n > 0, X_n > 0)` at each horizon.
/// Returns `None` on population overflow.
fn survival_indicators(
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    horizons: &[usize],
    max_n: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Option<Vec<(bool, bool)>> {
    let mut flags = Vec::with_capacity(horizons.len());
    let mut cur_x: u64 = 1;
    let mut cur_z: u64 = 0;
    let mut state = 0usize;
    let mut next = 0usize;
    if horizons[0] == 0 {
        flags.push((false, true));
        next = 1;
    }
    for k in 0..max_n {
        let (born1, born2) = if cur_x > 0 {
            state = if k == 0 { spec.sample_initial(rng) } else { spec.sample_step(state, rng) };
            spec.law(state).sample_total(cur_x, rng)
        } else {
            (0, 0)
        };
        let z_off = law2.sample_total(cur_z, rng);
        let next_z = z_off.checked_add(born2).unwrap_or(u64::MAX);
        if born1 > POPULATION_CAP || next_z > POPULATION_CAP {
            return None;
        }
        cur_x = born1;
        cur_z = next_z;
        if next < horizons.len() && horizons[next] == k + 1 {
            flags.push((cur_z > 0, cur_x > 0));
            next += 1;
        }
        if cur_x == 0 && cur_z == 0 {
            // Both lines dead; all later indicators are false.
            while next < horizons.len() {
                flags.push((false, false));
                next += 1;
            }
            break;
        }
    }
    Some(flags)
}

#[derive(Clone)]
struct RbAcc {
    sum: Vec<[f64; 3]>,
    sumsq: Vec<[f64; 3]>,
}

fn rb_curve(
    spec: &EnvironmentSpec,
    law2: &OffspringLaw2,
    horizons: &[usize],
    replicates: u64,
    factory: &StreamFactory,
    max_n: usize,
) -> Result<Vec<SurvivalEstimate>> {
    let extab = law2.extinction_table(max_n);
    let chunks = replicates.div_ceil(CHUNK);
    let partials: Vec<RbAcc> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = RbAcc {
                sum: vec![[0.0; 3]; horizons.len()],
                sumsq: vec![[0.0; 3]; horizons.len()],
            };
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(replicates);
            for rep in lo..hi {
                let mut rng = factory.rng(Purpose::Env, rep);
                let seq = spec.sample_sequence(max_n, &mut rng);
                for (i, &n) in horizons.iter().enumerate() {
                    let s = survival_given_env(spec, &seq, n, &extab)
                        .expect("lengths validated");
                    for (j, v) in [s.pz, s.px, s.peither].into_iter().enumerate() {
                        acc.sum[i][j] += v;
                        acc.sumsq[i][j] += v * v;
                    }
                }
            }
            acc
        })
        .collect();

    let mut sum = vec![[0.0f64; 3]; horizons.len()];
    let mut sumsq = vec![[0.0f64; 3]; horizons.len()];
    for p in partials {
        for i in 0..horizons.len() {
            for j in 0..3 {
                sum[i][j] += p.sum[i][j];
                sumsq[i][j] += p.sumsq[i][j];
            }
        }
    }

    let r = replicates as f64;
    Ok(horizons
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mean = [sum[i][0] / r, sum[i][1] / r, sum[i][2] / r];
            let se = |j: usize| {
                if replicates < 2 {
                    0.0
                } else {
                    let var = ((sumsq[i][j] - sum[i][j] * sum[i][j] / r) / (r - 1.0)).max(0.0);
                    (var / r).sqrt()
                }
            };
            SurvivalEstimate {
                n,
                p_z: mean[0],
                se_z: se(0),
                p_x: mean[1],
                se_x: se(1),
                p_either: mean[2],
                se_either: se(2),
                replicates,
                estimator: Estimator::RaoBlackwell,
                failed: 0,
            }
        })
        .collect())
}

/// Survival of the type-1 line alone: `P[X_n > 0]` at each horizon, from
/// lean replicates that stop at type-1 extinction. Returns
/// `(n, p_x, se_x)` triples.
pub fn type1_survival(
    spec: &EnvironmentSpec,
    horizons: &[usize],
    replicates: u64,
    factory: &StreamFactory,
) -> Result<Vec<(usize, f64, f64)>> {
    if horizons.is_empty() || horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("horizons must be strictly increasing".into()));
    }
    let max_n = *horizons.last().expect("nonempty");
    let chunks = replicates.div_ceil(CHUNK);
    let partials: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut counts = vec![0u64; horizons.len()];
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(replicates);
            for rep in lo..hi {
                let mut rng = factory.rng(Purpose::Particles, rep);
                let mut x: u64 = 1;
                let mut state = 0usize;
                let mut t = max_n; // censored at the horizon counts as alive
                for k in 0..max_n {
                    state = if k == 0 {
                        spec.sample_initial(&mut rng)
                    } else {
                        spec.sample_step(state, &mut rng)
                    };
                    let (b1, _) = spec.law(state).sample_total(x, &mut rng);
                    x = b1.min(POPULATION_CAP); // survival is insensitive to the cap
                    if x == 0 {
                        t = k + 1;
                        break;
                    }
                }
                let alive_at = |n: usize| x > 0 || t > n;
                for (i, &n) in horizons.iter().enumerate() {
                    if alive_at(n) {
                        counts[i] += 1;
                    }
                }
            }
            counts
        })
        .collect();

    let mut counts = vec![0u64; horizons.len()];
    for p in partials {
        for (c, v) in counts.iter_mut().zip(p) {
            *c += v;
        }
    }
    Ok(horizons
        .iter()
        .zip(counts)
        .map(|(&n, c)| {
            let p = c as f64 / replicates as f64;
            (n, p, crate::stats::proportion_se(p, replicates))
        })
        .collect())
}

/// Statistic whose tail is sampled by [`tail_samples`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailStatistic {
    /// Total type-1 particles S_T.
    STotal,
    /// Total type-2 daughters W_T.
    WTotal,
    /// Theta1-weighted total S_T^(1).
    S1,
    /// Theta2-weighted total S_T^(2).
    S2,
}

/// Censoring fraction above which the empirical tail is flagged unreliable.
pub const TAIL_CENSORING_LIMIT: f64 = 1e-3;

/// Empirical tail of one total-progeny statistic.
///
/// Replicates whose type-1 line was still alive at the step cap, or whose
/// population overflowed, are censored: their partial accumulations are kept
/// as lower bounds. For any threshold below the smallest lower bound a
/// censored replicate certainly exceeds the threshold, so exceedance counts
/// stay exact deep into the tail.
#[derive(Clone, Debug)]
pub struct TailSamples {
    pub statistic: TailStatistic,
    /// Fully resolved statistic values, ascending.
    resolved: Vec<f64>,
    /// Lower bounds from censored replicates, ascending.
    censored: Vec<f64>,
    pub replicates: u64,
    pub t_cap: usize,
}

impl TailSamples {
    /// Assemble from pre-sorted resolved values and censored lower bounds.
    pub fn from_parts(
        statistic: TailStatistic,
        resolved: Vec<f64>,
        censored: Vec<f64>,
        replicates: u64,
        t_cap: usize,
    ) -> Self {
        debug_assert!(resolved.windows(2).all(|w| w[0] <= w[1]));
        debug_assert!(censored.windows(2).all(|w| w[0] <= w[1]));
        Self { statistic, resolved, censored, replicates, t_cap }
    }

    pub fn resolved(&self) -> &[f64] {
        &self.resolved
    }

    pub fn censored_bounds(&self) -> &[f64] {
        &self.censored
    }

    pub fn censoring_fraction(&self) -> f64 {
        self.censored.len() as f64 / self.replicates as f64
    }

    /// True when the censoring fraction exceeds [`TAIL_CENSORING_LIMIT`].
    pub fn unreliable(&self) -> bool {
        self.censoring_fraction() > TAIL_CENSORING_LIMIT
    }

    /// Number of replicates known to exceed `x`.
    pub fn exceed_count(&self, x: f64) -> u64 {
        let res = self.resolved.len() - self.resolved.partition_point(|&v| v <= x);
        let cen = self.censored.len() - self.censored.partition_point(|&v| v <= x);
        (res + cen) as u64
    }

    /// Empirical tail probability at `x`.
    pub fn tail_prob(&self, x: f64) -> f64 {
        self.exceed_count(x) as f64 / self.replicates as f64
    }

    /// Thresholds strictly below this value have exact exceedance counts
    /// despite censoring.
    pub fn exact_below(&self) -> f64 {
        self.censored.first().copied().unwrap_or(f64::INFINITY)
    }

    pub fn max_resolved(&self) -> Option<f64> {
        self.resolved.last().copied()
    }
}

/// All four statistics harvested from one set of replicates.
#[derive(Clone, Debug)]
pub struct TailBundle {
    pub s: TailSamples,
    pub w: TailSamples,
    pub s1: TailSamples,
    pub s2: TailSamples,
}

impl TailBundle {
    pub fn get(&self, statistic: TailStatistic) -> &TailSamples {
        match statistic {
            TailStatistic::STotal => &self.s,
            TailStatistic::WTotal => &self.w,
            TailStatistic::S1 => &self.s1,
            TailStatistic::S2 => &self.s2,
        }
    }
}

/// Sample the tail of one statistic; see [`tail_bundle`] for the shared
/// harvesting pass.
pub fn tail_samples(
    spec: &EnvironmentSpec,
    statistic: TailStatistic,
    replicates: u64,
    t_cap: usize,
    factory: &StreamFactory,
) -> TailSamples {
    let bundle = tail_bundle(spec, replicates, t_cap, factory);
    bundle.get(statistic).clone()
}

struct ProgenyOutcome {
    resolved: bool,
    vals: [f64; 4],
}

/// Run the type-1 line of `replicates` trajectories and collect all four
/// total-progeny statistics per replicate.
pub fn tail_bundle(
    spec: &EnvironmentSpec,
    replicates: u64,
    t_cap: usize,
    factory: &StreamFactory,
) -> TailBundle {
    let chunks = replicates.div_ceil(CHUNK);
    let per_chunk: Vec<(Vec<[f64; 4]>, Vec<[f64; 4]>)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut resolved = Vec::new();
            let mut censored = Vec::new();
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(replicates);
            for rep in lo..hi {
                let mut rng = factory.rng(Purpose::Tail, rep);
                let out = progeny_run(spec, t_cap, &mut rng);
                if out.resolved {
                    resolved.push(out.vals);
                } else {
                    censored.push(out.vals);
                }
            }
            (resolved, censored)
        })
        .collect();

    let mut resolved: Vec<[f64; 4]> = Vec::new();
    let mut censored: Vec<[f64; 4]> = Vec::new();
    for (r, c) in per_chunk {
        resolved.extend(r);
        censored.extend(c);
    }

    let build = |idx: usize, statistic: TailStatistic| {
        let mut res: Vec<f64> = resolved.iter().map(|v| v[idx]).collect();
        let mut cen: Vec<f64> = censored.iter().map(|v| v[idx]).collect();
        res.sort_by(f64::total_cmp);
        cen.sort_by(f64::total_cmp);
        TailSamples { statistic, resolved: res, censored: cen, replicates, t_cap }
    };
    TailBundle {
        s: build(0, TailStatistic::STotal),
        w: build(1, TailStatistic::WTotal),
        s1: build(2, TailStatistic::S1),
        s2: build(3, TailStatistic::S2),
    }
}

fn progeny_run(
    spec: &EnvironmentSpec,
    t_cap: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> ProgenyOutcome {
    let mut cur_x: u64 = 1;
    let mut state = 0usize;
    let mut s = 0.0f64;
    let mut w = 0.0f64;
    let mut s1 = 0.0f64;
    let mut s2 = 0.0f64;
    for k in 0..t_cap {
        if cur_x == 0 {
            return ProgenyOutcome { resolved: true, vals: [s, w, s1, s2] };
        }
        state = if k == 0 { spec.sample_initial(rng) } else { spec.sample_step(state, rng) };
        let m = spec.law(state).moments();
        s += cur_x as f64;
        s1 += cur_x as f64 * m.theta1;
        s2 += cur_x as f64 * m.theta2;
        let (born1, born2) = spec.law(state).sample_total(cur_x, rng);
        w += born2 as f64;
        if born1 > POPULATION_CAP {
            // Overflow: the partial sums are still valid lower bounds.
            return ProgenyOutcome { resolved: false, vals: [s, w, s1, s2] };
        }
        cur_x = born1;
    }
    ProgenyOutcome { resolved: cur_x == 0, vals: [s, w, s1, s2] }
}

//! Environment specifications and sequence generation.
//!
//! An environment assigns one type-1 reproduction law per state. Supported
//! kinds: a single constant state, IID draws from a finite mixture, and a
//! finite-state irreducible aperiodic Markov chain started from its
//! stationary distribution. Markov environments additionally expose the
//! regeneration structure (returns to the initial state) on which the
//! embedded IID process is built.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::offspring::OffspringLaw1;

/// Largest supported state space for Markov environments.
pub const MAX_STATES: usize = 64;

/// Serialized form of an environment. The `two_state` kind is the compact
/// parametrization with transition matrix
/// `[[1-d*pi2, d*pi2], [d*pi1, 1-d*pi1]]` and stationary vector `(pi1, pi2)`;
/// `d = 1` reproduces the IID case.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpecConfig {
    Constant { law: OffspringLaw1 },
    Iid { states: Vec<IidState> },
    Markov { transition: Vec<Vec<f64>>, states: Vec<OffspringLaw1> },
    TwoState { pi1: f64, d: f64, laws: Vec<OffspringLaw1> },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IidState {
    pub law: OffspringLaw1,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Constant,
    Iid { probs: Vec<f64> },
    Markov { transition: Vec<Vec<f64>>, stationary: Vec<f64>, two_state: Option<(f64, f64)> },
}

/// A validated environment specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvSpecConfig", into = "EnvSpecConfig")]
pub struct EnvironmentSpec {
    states: Vec<OffspringLaw1>,
    kind: Kind,
}

impl EnvironmentSpec {
    pub fn constant(law: OffspringLaw1) -> Self {
        Self { states: vec![law], kind: Kind::Constant }
    }

    pub fn iid(states: Vec<(OffspringLaw1, f64)>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidSpec("iid environment needs at least one state".into()));
        }
        let sum: f64 = states.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!("state probabilities sum to {sum}")));
        }
        if states.iter().any(|&(_, p)| !(p >= 0.0)) {
            return Err(Error::InvalidSpec("negative state probability".into()));
        }
        let (laws, probs) = states.into_iter().unzip();
        Ok(Self { states: laws, kind: Kind::Iid { probs } })
    }

    pub fn markov(states: Vec<OffspringLaw1>, transition: Vec<Vec<f64>>) -> Result<Self> {
        Self::markov_inner(states, transition, None)
    }

    /// Two-state chain with stationary vector `(pi1, 1-pi1)` and mixing
    /// parameter `d` in `(0, min(1/pi1, 1/pi2))`.
    pub fn two_state(pi1: f64, d: f64, laws: [OffspringLaw1; 2]) -> Result<Self> {
        let pi2 = 1.0 - pi1;
        if !(pi1 > 0.0 && pi1 < 1.0) {
            return Err(Error::InvalidSpec(format!("pi1={pi1} outside (0,1)")));
        }
        if !(d > 0.0 && d < (1.0 / pi1).min(1.0 / pi2)) {
            return Err(Error::Domain(format!("d={d} outside (0, min(1/pi1, 1/pi2))")));
        }
        let transition =
            vec![vec![1.0 - d * pi2, d * pi2], vec![d * pi1, 1.0 - d * pi1]];
        let [a, b] = laws;
        Self::markov_inner(vec![a, b], transition, Some((pi1, d)))
    }

    fn markov_inner(
        states: Vec<OffspringLaw1>,
        transition: Vec<Vec<f64>>,
        two_state: Option<(f64, f64)>,
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 || n > MAX_STATES {
            return Err(Error::InvalidSpec(format!("state count {n} outside 1..={MAX_STATES}")));
        }
        if transition.len() != n || transition.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidSpec("transition matrix shape mismatch".into()));
        }
        for row in &transition {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidSpec(format!("transition row sums to {sum}")));
            }
            if row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::InvalidSpec("negative transition probability".into()));
            }
        }
        if !is_irreducible(&transition) {
            return Err(Error::InvalidSpec("chain is reducible".into()));
        }
        if !is_aperiodic(&transition) {
            return Err(Error::InvalidSpec("chain is periodic".into()));
        }
        let stationary = stationary_distribution(&transition)?;
        Ok(Self { states, kind: Kind::Markov { transition, stationary, two_state } })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn law(&self, state: usize) -> &OffspringLaw1 {
        &self.states[state]
    }

    pub fn laws(&self) -> &[OffspringLaw1] {
        &self.states
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant)
    }

    pub fn is_markov(&self) -> bool {
        matches!(self.kind, Kind::Markov { .. })
    }

    /// Marginal (stationary) state distribution.
    pub fn state_distribution(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Constant => vec![1.0],
            Kind::Iid { probs } => probs.clone(),
            Kind::Markov { stationary, .. } => stationary.clone(),
        }
    }

    /// Two-state compact parameters when the spec was built that way.
    pub fn two_state_params(&self) -> Option<(f64, f64)> {
        match &self.kind {
            Kind::Markov { two_state, .. } => *two_state,
            _ => None,
        }
    }

    pub fn transition(&self) -> Option<&[Vec<f64>]> {
        match &self.kind {
            Kind::Markov { transition, .. } => Some(transition),
            _ => None,
        }
    }

    /// Associated-walk step for one state: `log mu1`.
    pub fn zeta_state(&self, state: usize) -> f64 {
        zeta(&self.states[state])
    }

    /// Stationary mean of the associated-walk step,
    /// `E[zeta] = sum_i pi_i log mu1^(i)`.
    pub fn mean_zeta(&self) -> f64 {
        self.state_distribution()
            .iter()
            .enumerate()
            .map(|(i, &p)| p * self.zeta_state(i))
            .sum()
    }

    /// Discrete law of `mu1` under the stationary state distribution.
    pub fn mu1_law(&self) -> Vec<(f64, f64)> {
        self.state_distribution()
            .iter()
            .enumerate()
            .map(|(i, &p)| (self.states[i].moments().mu1, p))
            .collect()
    }

    /// Initial state, drawn from the stationary distribution.
    pub fn sample_initial(&self, rng: &mut ChaCha8Rng) -> usize {
        match &self.kind {
            Kind::Constant => 0,
            Kind::Iid { probs } => categorical(probs, rng),
            Kind::Markov { stationary, .. } => categorical(stationary, rng),
        }
    }

    /// Next state given the current one.
    pub fn sample_step(&self, current: usize, rng: &mut ChaCha8Rng) -> usize {
        match &self.kind {
            Kind::Constant => 0,
            Kind::Iid { probs } => categorical(probs, rng),
            Kind::Markov { transition, .. } => categorical(&transition[current], rng),
        }
    }

    /// A stationary environment sequence `e_0..e_{n-1}`.
    pub fn sample_sequence(&self, n: usize, rng: &mut ChaCha8Rng) -> EnvSequence {
        let mut states = Vec::with_capacity(n);
        if n == 0 {
            return EnvSequence { states };
        }
        let mut cur = self.sample_initial(rng);
        states.push(cur as u32);
        for _ in 1..n {
            cur = self.sample_step(cur, rng);
            states.push(cur as u32);
        }
        EnvSequence { states }
    }
}

impl TryFrom<EnvSpecConfig> for EnvironmentSpec {
    type Error = Error;

    fn try_from(cfg: EnvSpecConfig) -> Result<Self> {
        match cfg {
            EnvSpecConfig::Constant { law } => Ok(EnvironmentSpec::constant(law)),
            EnvSpecConfig::Iid { states } => {
                EnvironmentSpec::iid(states.into_iter().map(|s| (s.law, s.prob)).collect())
            }
            EnvSpecConfig::Markov { transition, states } => {
                EnvironmentSpec::markov(states, transition)
            }
            EnvSpecConfig::TwoState { pi1, d, laws } => {
                let [a, b]: [OffspringLaw1; 2] = laws
                    .try_into()
                    .map_err(|_| Error::InvalidSpec("two_state needs exactly 2 laws".into()))?;
                EnvironmentSpec::two_state(pi1, d, [a, b])
            }
        }
    }
}

impl From<EnvironmentSpec> for EnvSpecConfig {
    fn from(spec: EnvironmentSpec) -> Self {
        match spec.kind {
            Kind::Constant => {
                EnvSpecConfig::Constant { law: spec.states.into_iter().next().expect("one state") }
            }
            Kind::Iid { probs } => EnvSpecConfig::Iid {
                states: spec
                    .states
                    .into_iter()
                    .zip(probs)
                    .map(|(law, prob)| IidState { law, prob })
                    .collect(),
            },
            Kind::Markov { transition, two_state, .. } => match two_state {
                Some((pi1, d)) => EnvSpecConfig::TwoState { pi1, d, laws: spec.states },
                None => EnvSpecConfig::Markov { transition, states: spec.states },
            },
        }
    }
}

/// One realized environment path.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvSequence {
    states: Vec<u32>,
}

impl EnvSequence {
    pub fn from_states(states: Vec<u32>) -> Self {
        Self { states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, k: usize) -> usize {
        self.states[k] as usize
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }
}

/// Regeneration decomposition of an environment path: the times at which the
/// chain revisits its initial state.
#[derive(Clone, Debug)]
pub struct RegenerationDecomposition {
    /// tau_0 = 0 < tau_1 < ... (indices into the sequence).
    pub taus: Vec<usize>,
    /// Observed length of the trailing incomplete cycle.
    pub incomplete_len: usize,
}

impl RegenerationDecomposition {
    pub fn complete_cycles(&self) -> usize {
        self.taus.len() - 1
    }

    /// Lengths of the complete cycles.
    pub fn cycle_lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.taus.windows(2).map(|w| w[1] - w[0])
    }
}

/// Locate the regeneration times `tau_0 = 0, tau_{k+1} = min{n > tau_k :
/// e_n = e_0}`. The trailing segment after the last return is flagged as an
/// incomplete cycle and excluded from cycle statistics.
pub fn regenerations(seq: &EnvSequence) -> Result<RegenerationDecomposition> {
    if seq.is_empty() {
        return Err(Error::Domain("empty environment sequence".into()));
    }
    let e0 = seq.states[0];
    let mut taus = vec![0usize];
    for (t, &e) in seq.states.iter().enumerate().skip(1) {
        if e == e0 {
            taus.push(t);
        }
    }
    let incomplete_len = seq.len() - taus.last().expect("nonempty");
    Ok(RegenerationDecomposition { taus, incomplete_len })
}

/// Associated-walk step size of a law: `log mu1`. Requires `mu1 > 0`.
pub fn zeta(law: &OffspringLaw1) -> f64 {
    law.moments().mu1.ln()
}

/// Stationary solution of `pi P = pi` by dense Gaussian elimination with the
/// normalization `sum pi = 1` replacing one equation.
pub fn stationary_distribution(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = transition.len();
    if n == 0 || n > MAX_STATES {
        return Err(Error::InvalidSpec(format!("state count {n} outside 1..={MAX_STATES}")));
    }
    // Rows of A are the equations (P^T - I) pi = 0; replace the last with
    // the normalization row.
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = transition[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[n - 1][j] = 1.0;
    }
    a[n - 1][n] = 1.0;

    // Gaussian elimination with partial pivoting.
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::InvalidSpec("singular chain (reducible?)".into()));
        }
        a.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for k in col..=n {
                a[row][k] -= factor * a[col][k];
            }
        }
    }
    let mut pi = vec![0.0f64; n];
    for row in (0..n).rev() {
        let mut acc = a[row][n];
        for k in (row + 1)..n {
            acc -= a[row][k] * pi[k];
        }
        pi[row] = acc / a[row][row];
    }

    // Validate the residual of pi P = pi in the infinity norm.
    let mut residual = 0.0f64;
    for j in 0..n {
        let mut v = 0.0;
        for i in 0..n {
            v += pi[i] * transition[i][j];
        }
        residual = residual.max((v - pi[j]).abs());
    }
    if residual > 1e-12 {
        return Err(Error::InvalidSpec(format!("stationary residual {residual}")));
    }
    if pi.iter().any(|&p| p < -1e-12) {
        return Err(Error::InvalidSpec("negative stationary entry".into()));
    }
    for p in &mut pi {
        *p = p.max(0.0);
    }
    Ok(pi)
}

fn is_irreducible(transition: &[Vec<f64>]) -> bool {
    let n = transition.len();
    let reach = |forward: bool| -> usize {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let p = if forward { transition[u][v] } else { transition[v][u] };
                if p > 0.0 && !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count
    };
    reach(true) == n && reach(false) == n
}

/// Aperiodicity check: a positive self-transition suffices; otherwise the
/// period is the gcd of `level(u) + 1 - level(v)` over all edges of a BFS
/// tree, which is valid for strongly connected graphs.
fn is_aperiodic(transition: &[Vec<f64>]) -> bool {
    let n = transition.len();
    if (0..n).any(|i| transition[i][i] > 0.0) {
        return true;
    }
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if transition[u][v] > 0.0 && level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g: u64 = 0;
    for u in 0..n {
        for v in 0..n {
            if transition[u][v] > 0.0 {
                let diff = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs();
                g = gcd(g, diff);
            }
        }
    }
    g == 1
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn categorical(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}

/// Closed-form law of the regeneration time of the two-state chain under
/// stationarity:
/// `P[tau=1] = 1 - 2 pi1 pi2 d`,
/// `P[tau=k] = d pi1 pi2 (d pi1 (1-d pi1)^{k-2} + d pi2 (1-d pi2)^{k-2})`
/// for k >= 2, with `E[tau-1] = 1` and
/// `E[tau(tau-1)] = 2/(d pi1 pi2) - 4/d`.
#[derive(Clone, Copy, Debug)]
pub struct TwoStateTauLaw {
    pub pi1: f64,
    pub d: f64,
}

impl TwoStateTauLaw {
    pub fn new(pi1: f64, d: f64) -> Result<Self> {
        let pi2 = 1.0 - pi1;
        if !(pi1 > 0.0 && pi1 < 1.0) {
            return Err(Error::Domain(format!("pi1={pi1} outside (0,1)")));
        }
        if !(d > 0.0 && d < (1.0 / pi1).min(1.0 / pi2)) {
            return Err(Error::Domain(format!("d={d} outside (0, min(1/pi1, 1/pi2))")));
        }
        Ok(Self { pi1, d })
    }

    pub fn pmf(&self, k: usize) -> f64 {
        let (pi1, pi2, d) = (self.pi1, 1.0 - self.pi1, self.d);
        match k {
            0 => 0.0,
            1 => 1.0 - 2.0 * pi1 * pi2 * d,
            _ => {
                let e = (k - 2) as i32;
                d * pi1
                    * pi2
                    * (d * pi1 * (1.0 - d * pi1).powi(e) + d * pi2 * (1.0 - d * pi2).powi(e))
            }
        }
    }

    /// `E[tau - 1]`, identically one for every admissible `(pi1, d)`.
    pub fn mean_tau_minus_one(&self) -> f64 {
        1.0
    }

    pub fn mean_tau(&self) -> f64 {
        2.0
    }

    /// `E[tau(tau-1)] = 2/(d pi1 pi2) - 4/d`.
    pub fn mean_tau_tau_minus_one(&self) -> f64 {
        let (pi1, pi2, d) = (self.pi1, 1.0 - self.pi1, self.d);
        2.0 / (d * pi1 * pi2) - 4.0 / d
    }

    /// Closed-form `E[zeta_hat]` when the walk steps in the two states are
    /// `b1` and `b2`; equals `2 E[zeta]` by the cycle Wald identity.
    pub fn mean_zeta_hat(&self, b1: f64, b2: f64) -> f64 {
        let (pi1, pi2, d) = (self.pi1, 1.0 - self.pi1, self.d);
        pi1 * (1.0 - d * pi2) * b1
            + pi2 * (1.0 - d * pi1) * b2
            + pi1 * d * pi2 * (b1 + b2 / (d * pi1))
            + pi2 * d * pi1 * (b2 + b1 / (d * pi2))
    }
}

#[cfg(test)]
mod tests;

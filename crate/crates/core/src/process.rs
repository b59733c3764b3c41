//! Hypothesis-conditioned Markov process models, deadline simulation and
//! survival analytics.
//!
//! A [`ProcessModel`] pairs two stationary transition kernels, one per value of
//! the latent hypothesis, with a prior and a deadline. Under the adverse
//! hypothesis the deadline is the first time the process reaches a barrier
//! (Gaussian kernels) or an absorbing state (finite chains); under the benign
//! hypothesis the deadline never occurs.
//!
//! Survival probabilities are closed form for both families:
//!
//! - drifted Brownian motion, first passage over a level `η` from distance `a`:
//!   `S = Φ((a − m·dt)/(σ√dt)) − e^{2ma/σ²} Φ((−a − m·dt)/(σ√dt))`
//! - Brownian bridge between two points below `η`:
//!   `1 − exp(−2(η − x_a)(η − x_b)/(σ²·dt))`, drift-free by endpoint conditioning
//! - finite chains: mass of the taboo kernel (absorbing column removed) raised
//!   to the number of elapsed steps.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::belief::Partition;
use crate::error::{Error, Result};
use crate::math::{self, floor_log, ln_norm_cdf, ln_one_minus_exp_neg, norm_cdf};

const STEP_TOLERANCE: f64 = 1e-9;
const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Realization of the latent hypothesis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// No adverse event will ever occur (`Θ = 0`).
    Benign,
    /// The deadline is finite almost surely (`Θ = 1`).
    Adverse,
}

impl Hypothesis {
    pub fn from_bit(adverse: bool) -> Self {
        if adverse {
            Hypothesis::Adverse
        } else {
            Hypothesis::Benign
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Hypothesis::Benign => 0,
            Hypothesis::Adverse => 1,
        }
    }
}

/// Row-stochastic transition matrix of a finite chain, one unit time step per
/// transition. States are encoded as the reals `0.0, 1.0, …`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainKernel {
    matrix: Vec<Vec<f64>>,
}

impl ChainKernel {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::InvalidModel("chain needs at least one state".into()));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidModel(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidModel(format!("row {i} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidModel(format!("row {i} sums to {sum}, not 1")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn states(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    /// `n`-step transition matrix.
    pub fn power(&self, steps: usize) -> Vec<Vec<f64>> {
        matrix_power(&self.matrix, steps)
    }

    /// `n`-step matrix of the chain killed on entering `absorbing`.
    pub fn taboo_power(&self, absorbing: usize, steps: usize) -> Vec<Vec<f64>> {
        let mut taboo = self.matrix.clone();
        for row in taboo.iter_mut() {
            row[absorbing] = 0.0;
        }
        for p in taboo[absorbing].iter_mut() {
            *p = 0.0;
        }
        matrix_power(&taboo, steps)
    }
}

fn matrix_power(m: &[Vec<f64>], steps: usize) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut acc: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..steps {
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                let a = acc[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    next[i][j] += a * m[k][j];
                }
            }
        }
        acc = next;
    }
    acc
}

/// Transition law of the observed series under one hypothesis.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec {
    /// Brownian motion with `drift` per unit time and `volatility` per √time.
    Gaussian { drift: f64, volatility: f64 },
    DiscreteChain(ChainKernel),
}

impl KernelSpec {
    pub fn gaussian(drift: f64, volatility: f64) -> Result<Self> {
        if !(volatility > 0.0 && volatility.is_finite()) || !drift.is_finite() {
            return Err(Error::InvalidModel(format!(
                "gaussian kernel needs finite drift and positive volatility (got {drift}, {volatility})"
            )));
        }
        Ok(KernelSpec::Gaussian { drift, volatility })
    }

    pub fn chain(matrix: Vec<Vec<f64>>) -> Result<Self> {
        ChainKernel::new(matrix).map(KernelSpec::DiscreteChain)
    }
}

/// Stopping-time law under the adverse hypothesis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeadlineSpec {
    /// `τ` is the first time `X(t) ≥ level`.
    Barrier { level: f64 },
    /// `τ` is the first time the chain enters `state`.
    ChainAbsorb { state: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessModel {
    prior: f64,
    kernel0: KernelSpec,
    kernel1: KernelSpec,
    deadline: DeadlineSpec,
}

impl ProcessModel {
    pub fn new(
        prior: f64,
        kernel0: KernelSpec,
        kernel1: KernelSpec,
        deadline: DeadlineSpec,
    ) -> Result<Self> {
        if !(prior > 0.0 && prior < 1.0) {
            return Err(Error::InvalidModel(format!(
                "prior must lie strictly inside (0, 1), got {prior}"
            )));
        }
        match (&kernel0, &kernel1, deadline) {
            (KernelSpec::Gaussian { .. }, KernelSpec::Gaussian { .. }, DeadlineSpec::Barrier { level }) => {
                if !level.is_finite() {
                    return Err(Error::InvalidModel("barrier level must be finite".into()));
                }
            }
            (
                KernelSpec::DiscreteChain(c0),
                KernelSpec::DiscreteChain(c1),
                DeadlineSpec::ChainAbsorb { state },
            ) => {
                let n = c0.states();
                if c1.states() != n {
                    return Err(Error::InvalidModel(format!(
                        "chains disagree on state count ({n} vs {})",
                        c1.states()
                    )));
                }
                if state >= n {
                    return Err(Error::InvalidModel(format!(
                        "absorbing state {state} outside a {n}-state chain"
                    )));
                }
                // Mutual absolute continuity on every transition observable
                // while the adverse chain is alive.
                for i in (0..n).filter(|&i| i != state) {
                    for j in 0..n {
                        if (c0.matrix[i][j] > 0.0) != (c1.matrix[i][j] > 0.0) {
                            return Err(Error::InvalidModel(format!(
                                "transition {i}->{j} is possible under only one hypothesis"
                            )));
                        }
                    }
                }
            }
            _ => {
                return Err(Error::InvalidModel(
                    "kernels must share a family and match the deadline type".into(),
                ))
            }
        }
        Ok(Self {
            prior,
            kernel0,
            kernel1,
            deadline,
        })
    }

    /// Driftless-vs-drifted Brownian pair with a level barrier, the setting used
    /// throughout the examples.
    pub fn brownian(
        prior: f64,
        benign_drift: f64,
        adverse_drift: f64,
        volatility: f64,
        barrier: f64,
    ) -> Result<Self> {
        Self::new(
            prior,
            KernelSpec::gaussian(benign_drift, volatility)?,
            KernelSpec::gaussian(adverse_drift, volatility)?,
            DeadlineSpec::Barrier { level: barrier },
        )
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn kernel(&self, theta: Hypothesis) -> &KernelSpec {
        match theta {
            Hypothesis::Benign => &self.kernel0,
            Hypothesis::Adverse => &self.kernel1,
        }
    }

    pub fn deadline(&self) -> DeadlineSpec {
        self.deadline
    }

    pub fn is_chain(&self) -> bool {
        matches!(self.kernel1, KernelSpec::DiscreteChain(_))
    }

    /// Whether a value observed under the adverse hypothesis means the deadline
    /// has been reached. A value exactly on the barrier counts as stopped.
    pub fn is_stopped(&self, x: f64) -> bool {
        match self.deadline {
            DeadlineSpec::Barrier { level } => x >= level,
            DeadlineSpec::ChainAbsorb { state } => (x - state as f64).abs() < STEP_TOLERANCE,
        }
    }

    pub fn barrier_level(&self) -> Option<f64> {
        match self.deadline {
            DeadlineSpec::Barrier { level } => Some(level),
            DeadlineSpec::ChainAbsorb { .. } => None,
        }
    }

    fn chain_state(&self, x: f64) -> Result<usize> {
        let n = match &self.kernel1 {
            KernelSpec::DiscreteChain(c) => c.states(),
            KernelSpec::Gaussian { .. } => unreachable!("chain_state on a gaussian model"),
        };
        let r = x.round();
        if (x - r).abs() > STEP_TOLERANCE || r < 0.0 || r >= n as f64 {
            return Err(Error::StateOutOfRange { value: x, states: n });
        }
        Ok(r as usize)
    }

    fn absorbing(&self) -> usize {
        match self.deadline {
            DeadlineSpec::ChainAbsorb { state } => state,
            DeadlineSpec::Barrier { .. } => unreachable!("absorbing state on a barrier model"),
        }
    }

    /// Number of unit chain steps in `dt`, which must be a whole multiple.
    pub(crate) fn chain_steps(dt: f64) -> Result<usize> {
        if dt <= 0.0 {
            return Err(Error::NonPositiveDuration(dt));
        }
        let r = dt.round();
        if (dt - r).abs() > STEP_TOLERANCE {
            return Err(Error::param(
                "dt",
                format!("{dt} is not a whole number of chain steps"),
            ));
        }
        Ok(r as usize)
    }

    /// Draws `X(t + dt)` given `X(t) = x` under the kernel of `theta`.
    pub fn sample_transition<R: Rng + ?Sized>(
        &self,
        theta: Hypothesis,
        x: f64,
        dt: f64,
        rng: &mut R,
    ) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveDuration(dt));
        }
        match self.kernel(theta) {
            KernelSpec::Gaussian { drift, volatility } => {
                let z: f64 = rng.sample(StandardNormal);
                Ok(x + drift * dt + volatility * dt.sqrt() * z)
            }
            KernelSpec::DiscreteChain(chain) => {
                let steps = Self::chain_steps(dt)?;
                let mut state = self.chain_state(x)?;
                for _ in 0..steps {
                    state = sample_row(&chain.matrix[state], rng);
                }
                Ok(state as f64)
            }
        }
    }

    /// Density (Gaussian) or probability mass (chain) of `x → y` over `dt`.
    pub fn transition_density(&self, theta: Hypothesis, x: f64, y: f64, dt: f64) -> Result<f64> {
        self.log_transition_density(theta, x, y, dt).map(f64::exp)
    }

    pub fn log_transition_density(
        &self,
        theta: Hypothesis,
        x: f64,
        y: f64,
        dt: f64,
    ) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveDuration(dt));
        }
        match self.kernel(theta) {
            KernelSpec::Gaussian { drift, volatility } => Ok(math::gaussian_log_density(
                y,
                x + drift * dt,
                volatility * volatility * dt,
            )),
            KernelSpec::DiscreteChain(chain) => {
                let steps = Self::chain_steps(dt)?;
                let (a, b) = (self.chain_state(x)?, self.chain_state(y)?);
                Ok(chain.power(steps)[a][b].ln())
            }
        }
    }

    /// `P(τ > t + dt | X(t) = x, Θ = 1)`.
    pub fn survival_from_sample(&self, x: f64, dt: f64) -> f64 {
        if self.is_stopped(x) {
            return 0.0;
        }
        if dt <= 0.0 {
            return 1.0;
        }
        match (&self.kernel1, self.deadline) {
            (KernelSpec::Gaussian { drift, volatility }, DeadlineSpec::Barrier { level }) => {
                gaussian_survival(level - x, *drift, *volatility, dt)
            }
            (KernelSpec::DiscreteChain(chain), DeadlineSpec::ChainAbsorb { state }) => {
                let Ok(a) = self.chain_state(x) else {
                    return 0.0;
                };
                let steps = (dt + STEP_TOLERANCE).floor() as usize;
                chain.taboo_power(state, steps)[a].iter().sum::<f64>().min(1.0)
            }
            _ => unreachable!("validated at construction"),
        }
    }

    /// Floored natural log of [`Self::survival_from_sample`].
    pub fn log_survival(&self, x: f64, dt: f64) -> f64 {
        floor_log(self.survival_from_sample(x, dt).ln())
    }

    /// Probability that the adverse process pinned at `x_a` and `x_b` a time
    /// `dt` apart never reaches the deadline in between.
    pub fn bridge_survival(&self, x_a: f64, x_b: f64, dt: f64) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(Error::NonPositiveDuration(dt));
        }
        match (&self.kernel1, self.deadline) {
            (KernelSpec::Gaussian { volatility, .. }, DeadlineSpec::Barrier { level }) => {
                for v in [x_a, x_b] {
                    if v >= level {
                        return Err(Error::EndpointOnBarrier { value: v, level });
                    }
                }
                let exponent = 2.0 * (level - x_a) * (level - x_b) / (volatility * volatility * dt);
                Ok(-(-exponent).exp_m1())
            }
            (KernelSpec::DiscreteChain(chain), DeadlineSpec::ChainAbsorb { state }) => {
                let steps = Self::chain_steps(dt)?;
                let (a, b) = (self.chain_state(x_a)?, self.chain_state(x_b)?);
                for v in [a, b] {
                    if v == state {
                        return Err(Error::EndpointOnBarrier {
                            value: v as f64,
                            level: state as f64,
                        });
                    }
                }
                let full = chain.power(steps)[a][b];
                if full == 0.0 {
                    return Ok(0.0);
                }
                Ok((chain.taboo_power(state, steps)[a][b] / full).min(1.0))
            }
            _ => unreachable!("validated at construction"),
        }
    }

    /// Log-density of landing at `y` after `dt` while surviving the whole
    /// interval, under the adverse kernel. `-inf` maps to the log floor.
    pub(crate) fn log_killed_density(&self, x: f64, y: f64, dt: f64) -> Result<f64> {
        match (&self.kernel1, self.deadline) {
            (KernelSpec::Gaussian { volatility, .. }, DeadlineSpec::Barrier { level }) => {
                let density = self.log_transition_density(Hypothesis::Adverse, x, y, dt)?;
                if x >= level || y >= level {
                    return Ok(density + math::LOG_FLOOR);
                }
                let exponent = 2.0 * (level - x) * (level - y) / (volatility * volatility * dt);
                Ok(density + floor_log(ln_one_minus_exp_neg(exponent)))
            }
            (KernelSpec::DiscreteChain(chain), DeadlineSpec::ChainAbsorb { state }) => {
                let steps = Self::chain_steps(dt)?;
                let (a, b) = (self.chain_state(x)?, self.chain_state(y)?);
                Ok(floor_log(chain.taboo_power(state, steps)[a][b].ln()))
            }
            _ => unreachable!("validated at construction"),
        }
    }

    /// Survival of the adverse process through the whole partition and on to
    /// `t`: bridge factors between consecutive samples times the tail survival
    /// from the last sample.
    pub fn partition_survival(&self, partition: &Partition, t: f64) -> Result<f64> {
        let (last_t, last_x) = partition.last();
        if t < last_t {
            return Err(Error::TimeBeforePartition { t, last: last_t });
        }
        let mut s = 1.0;
        for ((ta, xa), (tb, xb)) in partition.points().zip(partition.points().skip(1)) {
            s *= self.bridge_survival(xa, xb, tb - ta)?;
        }
        Ok(s * self.survival_from_sample(last_x, t - last_t))
    }

    /// Path under `theta` sampled exactly on a uniform grid, truncated at the
    /// grid point where the deadline is detected when `theta` is adverse.
    pub fn simulate_path<R: Rng>(
        &self,
        theta: Hypothesis,
        x0: f64,
        horizon: f64,
        step: f64,
        rng: R,
    ) -> Result<SimulatedPath> {
        if !(step > 0.0 && step <= horizon) {
            return Err(Error::param(
                "step",
                format!("need 0 < step <= horizon, got step {step}, horizon {horizon}"),
            ));
        }
        let mut generator = PathGenerator::new(self, theta, x0, step, rng)?;
        let last = (horizon / step + STEP_TOLERANCE).floor() as usize;
        generator.extend_to(last)?;
        Ok(generator.into_path())
    }

    /// Rejection-samples the adverse observation after `dt` conditioned on
    /// survival of the whole interval. Acceptance uses the exact bridge
    /// no-crossing probability, so the draws follow the killed density.
    pub(crate) fn sample_surviving<R: Rng + ?Sized>(
        &self,
        x: f64,
        dt: f64,
        max_attempts: u64,
        rng: &mut R,
    ) -> Result<f64> {
        match (&self.kernel1, self.deadline) {
            (KernelSpec::Gaussian { .. }, DeadlineSpec::Barrier { level }) => {
                for _ in 0..max_attempts {
                    let y = self.sample_transition(Hypothesis::Adverse, x, dt, rng)?;
                    if y >= level {
                        continue;
                    }
                    let accept = self.bridge_survival(x, y, dt)?;
                    if rng.random::<f64>() < accept {
                        return Ok(y);
                    }
                }
                Err(Error::DegenerateSurvival {
                    attempts: max_attempts,
                })
            }
            (KernelSpec::DiscreteChain(chain), DeadlineSpec::ChainAbsorb { state }) => {
                let steps = Self::chain_steps(dt)?;
                let a = self.chain_state(x)?;
                let row = &chain.taboo_power(state, steps)[a];
                let mass: f64 = row.iter().sum();
                if mass <= 0.0 {
                    return Err(Error::DegenerateSurvival { attempts: 0 });
                }
                let mut u = rng.random::<f64>() * mass;
                for (j, p) in row.iter().enumerate() {
                    if u < *p {
                        return Ok(j as f64);
                    }
                    u -= p;
                }
                Ok(row.iter().rposition(|p| *p > 0.0).unwrap_or(0) as f64)
            }
            _ => unreachable!("validated at construction"),
        }
    }

    pub(crate) fn chain_kernels(&self) -> Option<(&ChainKernel, &ChainKernel, usize)> {
        match (&self.kernel0, &self.kernel1) {
            (KernelSpec::DiscreteChain(c0), KernelSpec::DiscreteChain(c1)) => {
                Some((c0, c1, self.absorbing()))
            }
            _ => None,
        }
    }
}

fn sample_row<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let mut u = rng.random::<f64>();
    for (j, p) in row.iter().enumerate() {
        if u < *p {
            return j;
        }
        u -= p;
    }
    row.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

fn gaussian_survival(distance: f64, drift: f64, volatility: f64, dt: f64) -> f64 {
    if distance <= 0.0 {
        return 0.0;
    }
    let scale = volatility * dt.sqrt();
    if drift == 0.0 {
        return libm::erf(distance / (scale * std::f64::consts::SQRT_2));
    }
    let first = norm_cdf((distance - drift * dt) / scale);
    let log_second = 2.0 * drift * distance / (volatility * volatility)
        + ln_norm_cdf((-distance - drift * dt) / scale);
    (first - log_second.exp()).clamp(0.0, 1.0)
}

/// A simulated stopped path on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedPath {
    pub step: f64,
    pub values: Vec<f64>,
    pub hit_time: Option<f64>,
    pub truth: Hypothesis,
}

impl SimulatedPath {
    pub fn end_time(&self) -> f64 {
        (self.values.len().saturating_sub(1)) as f64 * self.step
    }

    pub fn index_of(&self, t: f64) -> usize {
        (t / self.step).round() as usize
    }

    /// Value at the grid point nearest `t`, if the path extends that far.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.values.get(self.index_of(t)).copied()
    }
}

/// Incrementally extends a path on a fixed grid. Under the adverse hypothesis
/// a crossing between two grid points is detected with its exact bridge
/// probability and recorded at the later point. Each grid step consumes the
/// same amount of randomness regardless of how far callers look ahead, so two
/// consumers of the same stream see the same path.
pub struct PathGenerator<'m, R> {
    model: &'m ProcessModel,
    truth: Hypothesis,
    step: f64,
    values: Vec<f64>,
    hit_index: Option<usize>,
    rng: R,
}

impl<'m, R: Rng> PathGenerator<'m, R> {
    pub fn new(model: &'m ProcessModel, truth: Hypothesis, x0: f64, step: f64, rng: R) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::NonPositiveDuration(step));
        }
        if model.is_chain() {
            ProcessModel::chain_steps(step)?;
            model.chain_state(x0)?;
        }
        let hit_index = (truth == Hypothesis::Adverse && model.is_stopped(x0)).then_some(0);
        Ok(Self {
            model,
            truth,
            step,
            values: vec![x0],
            hit_index,
            rng,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn truth(&self) -> Hypothesis {
        self.truth
    }

    pub fn hit_index(&self) -> Option<usize> {
        self.hit_index
    }

    pub fn hit_time(&self) -> Option<f64> {
        self.hit_index.map(|i| i as f64 * self.step)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, index: usize) -> Option<f64> {
        self.values.get(index).copied()
    }

    /// Generates grid points up to `index`, stopping early at a deadline hit.
    pub fn extend_to(&mut self, index: usize) -> Result<()> {
        while self.hit_index.is_none() && self.values.len() <= index {
            let x = *self.values.last().expect("path has an origin");
            let next = self
                .model
                .sample_transition(self.truth, x, self.step, &mut self.rng)?;
            // crossing between grid points, drawn from the bridge law
            let u = self.rng.random::<f64>();
            self.values.push(next);
            if self.truth == Hypothesis::Adverse {
                let crossed = self.model.is_stopped(next)
                    || (!self.model.is_chain()
                        && u >= self.model.bridge_survival(x, next, self.step)?);
                if crossed {
                    self.hit_index = Some(self.values.len() - 1);
                }
            }
        }
        Ok(())
    }

    /// Extends the path until the deadline is hit or `max_index` is reached.
    pub fn extend_until_hit(&mut self, max_index: usize) -> Result<Option<usize>> {
        if self.truth == Hypothesis::Adverse {
            self.extend_to(max_index)?;
        }
        Ok(self.hit_index)
    }

    pub fn into_path(self) -> SimulatedPath {
        SimulatedPath {
            step: self.step,
            hit_time: self.hit_index.map(|i| i as f64 * self.step),
            values: self.values,
            truth: self.truth,
        }
    }
}

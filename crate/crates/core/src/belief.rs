//! Posterior belief over the latent hypothesis.
//!
//! For a partition with origin `x₀` and samples `x₁ … x_N` the belief while the
//! process is alive is the Bayes form
//!
//! ```text
//! μ_t = p·L·S / (p·L·S + 1 − p)
//! ```
//!
//! with `L` the product of per-interval transition-density ratios and `S` the
//! survival of the adverse process through the partition and on to `t`. All
//! of it is accumulated in log-odds. Once the deadline is observed the belief
//! is exactly 1.

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::{floor_log, logistic, logit, mean_and_std_error};
use crate::process::{Hypothesis, ProcessModel, SimulatedPath};

/// Rejection cap when conditioning the next observation on survival.
pub const MAX_SURVIVAL_ATTEMPTS: u64 = 1_000_000;

/// Log-odds are clamped to this range so that beliefs of exactly 0 or 1 still
/// round-trip through [`logit`].
const LOG_ODDS_CLAMP: f64 = 745.0;

/// Observed samples of the series: a known origin plus the sensed samples.
/// Only sensed samples count towards `N(P)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    origin_time: f64,
    origin_value: f64,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Partition {
    /// Partition whose origin is the value observed at time 0.
    pub fn new(x0: f64) -> Self {
        Self::with_origin(0.0, x0)
    }

    pub fn with_origin(t0: f64, x0: f64) -> Self {
        Self {
            origin_time: t0,
            origin_value: x0,
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_samples(x0: f64, times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::param(
                "values",
                format!("{} times but {} values", times.len(), values.len()),
            ));
        }
        let mut p = Self::new(x0);
        for (&t, &x) in times.iter().zip(values) {
            p.push(t, x)?;
        }
        Ok(p)
    }

    pub fn push(&mut self, t: f64, x: f64) -> Result<()> {
        let (last, _) = self.last();
        if !(t > last) {
            return Err(Error::UnorderedPartition { previous: last, next: t });
        }
        self.times.push(t);
        self.values.push(x);
        Ok(())
    }

    /// Number of sensed samples, `N(P)`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.origin_time, self.origin_value)
    }

    /// Most recent observation, the origin when nothing has been sensed.
    pub fn last(&self) -> (f64, f64) {
        match (self.times.last(), self.values.last()) {
            (Some(&t), Some(&x)) => (t, x),
            _ => (self.origin_time, self.origin_value),
        }
    }

    /// Origin followed by every sensed sample.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        std::iter::once((self.origin_time, self.origin_value))
            .chain(self.times.iter().copied().zip(self.values.iter().copied()))
    }
}

/// The Markov sufficient statistic `(t, μ_t, x̄)` plus the bookkeeping needed to
/// extend it between samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecisionState {
    pub t: f64,
    pub mu: f64,
    /// Most recent observed value.
    pub x_last: f64,
    /// Time of `x_last`; equals `t` right after a sample.
    pub last_sample_time: f64,
    pub n_samples: usize,
    pub survived: bool,
}

impl DecisionState {
    pub fn initial(model: &ProcessModel, x0: f64) -> Self {
        Self {
            t: 0.0,
            mu: model.prior(),
            x_last: x0,
            last_sample_time: 0.0,
            n_samples: 0,
            survived: true,
        }
    }

    pub fn from_partition(
        model: &ProcessModel,
        partition: &Partition,
        t: f64,
        survived: bool,
    ) -> Result<Self> {
        let (last_t, last_x) = partition.last();
        Ok(Self {
            t,
            mu: posterior_belief(model, partition, t, survived)?,
            x_last: last_x,
            last_sample_time: last_t,
            n_samples: partition.len(),
            survived,
        })
    }

    /// Log-odds with the survival since the last sample divided out.
    fn anchor_log_odds(&self, model: &ProcessModel) -> f64 {
        clamped_logit(self.mu) - model.log_survival(self.x_last, self.t - self.last_sample_time)
    }

    /// State after sensing `y` at `t_next` with the process still alive.
    pub fn observe(&self, model: &ProcessModel, t_next: f64, y: f64) -> Result<Self> {
        let dt = t_next - self.last_sample_time;
        let lo = self.anchor_log_odds(model) + step_log_ratio(model, self.x_last, y, dt)?;
        Ok(Self {
            t: t_next,
            mu: logistic(lo),
            x_last: y,
            last_sample_time: t_next,
            n_samples: self.n_samples + 1,
            survived: true,
        })
    }

    /// Survival probability of the adverse process over the next `delta`,
    /// given it has survived to `t`.
    pub fn conditional_survival(&self, model: &ProcessModel, delta: f64) -> f64 {
        let elapsed = self.t - self.last_sample_time;
        let now = model.survival_from_sample(self.x_last, elapsed);
        if now <= 0.0 {
            return 0.0;
        }
        (model.survival_from_sample(self.x_last, elapsed + delta) / now).min(1.0)
    }
}

fn clamped_logit(mu: f64) -> f64 {
    logit(mu).clamp(-LOG_ODDS_CLAMP, LOG_ODDS_CLAMP)
}

/// Log of the adverse-to-benign likelihood ratio for one interval, including
/// the adverse no-crossing factor.
pub(crate) fn step_log_ratio(model: &ProcessModel, x: f64, y: f64, dt: f64) -> Result<f64> {
    let adverse = model.log_killed_density(x, y, dt)?;
    let benign = floor_log(model.log_transition_density(Hypothesis::Benign, x, y, dt)?);
    Ok(adverse - benign)
}

/// Prior log-odds plus every per-sample update, without the tail survival.
fn sample_log_odds(model: &ProcessModel, partition: &Partition) -> Result<f64> {
    let mut lo = logit(model.prior());
    for ((ta, xa), (tb, xb)) in partition.points().zip(partition.points().skip(1)) {
        lo += step_log_ratio(model, xa, xb, tb - ta)?;
    }
    Ok(lo)
}

/// `P(Θ = 1 | samples, survival)` at time `t`.
pub fn posterior_belief(
    model: &ProcessModel,
    partition: &Partition,
    t: f64,
    survived: bool,
) -> Result<f64> {
    if !survived {
        return Ok(1.0);
    }
    let (last_t, last_x) = partition.last();
    if t < last_t {
        return Err(Error::TimeBeforePartition { t, last: last_t });
    }
    let lo = sample_log_odds(model, partition)? + model.log_survival(last_x, t - last_t);
    Ok(logistic(lo))
}

/// `μ − μ²·S·(1 − S)`.
pub fn expected_next_belief(mu: f64, survival: f64) -> f64 {
    mu - mu * mu * survival * (1.0 - survival)
}

/// Draws the belief at `t + delta` after sensing once at `t + delta`, together
/// with whether the process survived to deliver that sample.
pub(crate) fn draw_next_belief<R: Rng + ?Sized>(
    model: &ProcessModel,
    state: &DecisionState,
    delta: f64,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let span = state.t + delta - state.last_sample_time;
    let adverse = rng.random::<f64>() < state.mu;
    let y = if adverse {
        if rng.random::<f64>() >= state.conditional_survival(model, delta) {
            return Ok((1.0, false));
        }
        model.sample_surviving(state.x_last, span, MAX_SURVIVAL_ATTEMPTS, rng)?
    } else {
        model.sample_transition(Hypothesis::Benign, state.x_last, span, rng)?
    };
    Ok((state.observe(model, state.t + delta, y)?.mu, true))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainDraw {
    pub gain: f64,
    /// False when the deadline arrived before the sample could be taken.
    pub survived: bool,
}

/// Empirical distribution of `I_t(δ) = μ_{t+δ} − μ_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoGainSample {
    pub delta: f64,
    pub belief: f64,
    pub draws: Vec<GainDraw>,
}

impl InfoGainSample {
    pub fn gains(&self) -> Vec<f64> {
        self.draws.iter().map(|d| d.gain).collect()
    }

    pub fn mean_and_std_error(&self) -> (f64, f64) {
        mean_and_std_error(&self.gains())
    }

    /// `E|I|` over all outcomes, deadline jumps included.
    pub fn mean_abs(&self) -> (f64, f64) {
        let v: Vec<f64> = self.draws.iter().map(|d| d.gain.abs()).collect();
        mean_and_std_error(&v)
    }

    /// `E[|I|·1{survived}]`: the gain delivered by the sample itself.
    pub fn mean_abs_sampled(&self) -> (f64, f64) {
        let v: Vec<f64> = self
            .draws
            .iter()
            .map(|d| if d.survived { d.gain.abs() } else { 0.0 })
            .collect();
        mean_and_std_error(&v)
    }

    pub fn tail_probability(&self, threshold: f64) -> f64 {
        tail_probability(&self.gains(), threshold)
    }
}

/// Monte Carlo distribution of the information gain from sensing once after
/// `delta`. Deadline outcomes contribute `1 − μ_t`.
pub fn info_gain_distribution<R: Rng + ?Sized>(
    model: &ProcessModel,
    state: &DecisionState,
    delta: f64,
    n_draws: usize,
    rng: &mut R,
) -> Result<InfoGainSample> {
    if !(delta > 0.0) {
        return Err(Error::NonPositiveDuration(delta));
    }
    if n_draws == 0 {
        return Err(Error::param("n_draws", "need at least one draw"));
    }
    if !state.survived {
        return Err(Error::param("state", "the deadline has already been reached"));
    }
    let mut draws = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let (next, survived) = draw_next_belief(model, state, delta, rng)?;
        draws.push(GainDraw {
            gain: next - state.mu,
            survived,
        });
    }
    Ok(InfoGainSample {
        delta,
        belief: state.mu,
        draws,
    })
}

/// Fraction of `gains` at or above `threshold`.
pub fn tail_probability(gains: &[f64], threshold: f64) -> f64 {
    if gains.is_empty() {
        return 0.0;
    }
    gains.iter().filter(|g| **g >= threshold).count() as f64 / gains.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum SegmentKind {
    /// `logistic(base + ln S(anchor_value, t − anchor_time))`.
    Decay {
        base_log_odds: f64,
        anchor_time: f64,
        anchor_value: f64,
    },
    Absorbed,
}

/// One predictable piece of a belief path, valid on `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeliefSegment {
    pub start: f64,
    pub end: f64,
    kind: SegmentKind,
}

impl BeliefSegment {
    pub fn value_at(&self, model: &ProcessModel, t: f64) -> f64 {
        match self.kind {
            SegmentKind::Absorbed => 1.0,
            SegmentKind::Decay {
                base_log_odds,
                anchor_time,
                anchor_value,
            } => logistic(base_log_odds + model.log_survival(anchor_value, t - anchor_time)),
        }
    }

    pub fn is_absorbed(&self) -> bool {
        matches!(self.kind, SegmentKind::Absorbed)
    }
}

/// Right-continuous belief path with jumps at the sensed samples and at the
/// deadline.
#[derive(Clone, Debug)]
pub struct BeliefTrajectory {
    model: ProcessModel,
    segments: Vec<BeliefSegment>,
    jump_times: Vec<f64>,
    partition: Partition,
    hit_time: Option<f64>,
}

impl BeliefTrajectory {
    pub fn segments(&self) -> &[BeliefSegment] {
        &self.segments
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn hit_time(&self) -> Option<f64> {
        self.hit_time
    }

    pub fn start(&self) -> f64 {
        self.segments.first().map_or(0.0, |s| s.start)
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    fn segment_index(&self, t: f64) -> usize {
        // last segment whose start is <= t
        match self.segments.partition_point(|s| s.start <= t) {
            0 => 0,
            i => i - 1,
        }
    }

    /// Belief at `t` (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        let seg = &self.segments[self.segment_index(t)];
        seg.value_at(&self.model, t)
    }

    /// `lim_{s↑t} μ_s`.
    pub fn left_limit(&self, t: f64) -> f64 {
        let i = self.segments.partition_point(|s| s.start < t);
        let seg = &self.segments[i.saturating_sub(1)];
        seg.value_at(&self.model, t)
    }

    /// Number of discontinuities among the segment boundaries.
    pub fn count_jumps(&self) -> usize {
        self.segments
            .iter()
            .skip(1)
            .filter(|s| (self.left_limit(s.start) - self.value_at(s.start)).abs() > 0.0)
            .count()
    }

    /// First time the belief reaches `level`. Segments never increase, so it
    /// is either the start or a jump.
    pub fn first_time_at_or_above(&self, level: f64) -> Option<f64> {
        self.segments
            .iter()
            .find(|s| s.value_at(&self.model, s.start) >= level)
            .map(|s| s.start)
    }

    pub fn sample(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.value_at(t)).collect()
    }
}

/// Belief path of a policy sensing `path` at `sample_times`. Samples at or
/// after the deadline are dropped; the deadline itself adds the jump to 1.
pub fn belief_trajectory(
    model: &ProcessModel,
    path: &SimulatedPath,
    sample_times: &[f64],
) -> Result<BeliefTrajectory> {
    let x0 = *path
        .values
        .first()
        .ok_or_else(|| Error::param("path", "empty path"))?;
    let end = path.end_time();
    let mut partition = Partition::new(x0);
    let mut segments = Vec::new();
    let mut jump_times = Vec::new();
    let mut start = 0.0;
    let mut base = logit(model.prior());

    for &ts in sample_times {
        if path.hit_time.is_some_and(|tau| ts >= tau) {
            break;
        }
        if ts > end + 1e-9 * path.step {
            return Err(Error::param(
                "sample_times",
                format!("sample at {ts} beyond the path end {end}"),
            ));
        }
        let value = path.value_at(ts).expect("index within path");
        let (anchor_time, anchor_value) = partition.last();
        partition.push(ts, value)?;
        segments.push(BeliefSegment {
            start,
            end: ts,
            kind: SegmentKind::Decay {
                base_log_odds: base,
                anchor_time,
                anchor_value,
            },
        });
        base += step_log_ratio(model, anchor_value, value, ts - anchor_time)?;
        jump_times.push(ts);
        start = ts;
    }

    let (anchor_time, anchor_value) = partition.last();
    let decay = SegmentKind::Decay {
        base_log_odds: base,
        anchor_time,
        anchor_value,
    };
    match path.hit_time {
        Some(tau) => {
            if tau > start || segments.is_empty() {
                segments.push(BeliefSegment {
                    start,
                    end: tau,
                    kind: decay,
                });
            }
            segments.push(BeliefSegment {
                start: tau,
                end: tau.max(end),
                kind: SegmentKind::Absorbed,
            });
            jump_times.push(tau);
        }
        None => segments.push(BeliefSegment {
            start,
            end,
            kind: decay,
        }),
    }
    Ok(BeliefTrajectory {
        model: model.clone(),
        segments,
        jump_times,
        partition,
        hit_time: path.hit_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{DeadlineSpec, KernelSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> ProcessModel {
        ProcessModel::brownian(0.5, 0.0, 0.8, 1.0, 3.0).unwrap()
    }

    #[test]
    fn dead_process_has_belief_one() {
        let p = Partition::new(0.0);
        assert_eq!(posterior_belief(&model(), &p, 4.0, false).unwrap(), 1.0);
    }

    #[test]
    fn no_information_returns_prior() {
        let m = ProcessModel::brownian(0.3, 0.0, 0.8, 1.0, 3.0).unwrap();
        let p = Partition::new(0.0);
        assert_relative_eq!(posterior_belief(&m, &p, 0.0, true).unwrap(), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn bayes_form_arithmetic() {
        // identical kernels: L = 1; pick t so that S = 1/2
        let m = ProcessModel::brownian(0.5, 0.0, 0.0, 1.0, 1.0).unwrap();
        let z = crate::math::norm_inv_cdf(0.75);
        let t = (1.0 / z).powi(2);
        let p = Partition::new(0.0);
        assert_relative_eq!(m.survival_from_sample(0.0, t), 0.5, epsilon = 1e-12);
        assert_relative_eq!(posterior_belief(&m, &p, t, true).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn belief_before_partition_is_an_error() {
        let mut p = Partition::new(0.0);
        p.push(2.0, 0.1).unwrap();
        assert!(posterior_belief(&model(), &p, 1.0, true).is_err());
        assert!(p.push(2.0, 0.3).is_err());
        assert!(Partition::from_samples(0.0, &[1.0, 0.5], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn expected_next_belief_arithmetic() {
        assert_eq!(expected_next_belief(0.3, 1.0), 0.3);
        assert_eq!(expected_next_belief(0.3, 0.0), 0.3);
        assert_eq!(expected_next_belief(0.5, 0.5), 0.4375);
    }

    #[test]
    fn tail_probability_order_statistics() {
        let gains: Vec<f64> = (0..101).map(|i| i as f64 / 100.0 - 0.5).collect();
        assert_eq!(tail_probability(&gains, -0.5), 1.0);
        assert_eq!(tail_probability(&gains, 0.51), 0.0);
        let median = tail_probability(&gains, 0.0);
        assert!((median - 0.5).abs() <= 1.0 / 101.0);
    }

    #[test]
    fn observe_matches_batch_posterior() {
        let m = model();
        let mut p = Partition::new(0.0);
        let mut s = DecisionState::initial(&m, 0.0);
        for (t, x) in [(0.7, 0.4), (1.1, -0.3), (2.5, 1.9), (4.0, 2.2)] {
            p.push(t, x).unwrap();
            s = s.observe(&m, t, x).unwrap();
            let batch = posterior_belief(&m, &p, t, true).unwrap();
            assert_relative_eq!(s.mu, batch, epsilon = 1e-12);
        }
    }

    #[test]
    fn observe_from_mid_interval_state() {
        let m = model();
        let mut p = Partition::new(0.0);
        p.push(1.0, 0.5).unwrap();
        let waiting = DecisionState::from_partition(&m, &p, 1.8, true).unwrap();
        p.push(2.4, 1.1).unwrap();
        let after = waiting.observe(&m, 2.4, 1.1).unwrap();
        assert_relative_eq!(after.mu, posterior_belief(&m, &p, 2.4, true).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn identical_kernels_without_deadline_gain_nothing() {
        let m = ProcessModel::brownian(0.4, 0.2, 0.2, 1.0, 1e6).unwrap();
        let s = DecisionState::initial(&m, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sample = info_gain_distribution(&m, &s, 2.0, 1000, &mut rng).unwrap();
        assert!(sample.gains().iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn vanishing_interval_gains_vanish() {
        let m = model();
        let s = DecisionState::initial(&m, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sample = info_gain_distribution(&m, &s, 1e-8, 2000, &mut rng).unwrap();
        assert!(sample.gains().iter().all(|g| g.abs() < 1e-2));
    }

    #[test]
    fn info_gain_rejects_bad_input() {
        let m = model();
        let s = DecisionState::initial(&m, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(info_gain_distribution(&m, &s, 1.0, 0, &mut rng).is_err());
        assert!(info_gain_distribution(&m, &s, 0.0, 10, &mut rng).is_err());
    }

    #[test]
    fn gains_are_a_martingale_difference() {
        // Exact Bayesian updating makes the expected gain zero; this is the
        // identity the sampled gains are checked against.
        let m = model();
        let s = DecisionState::initial(&m, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sample = info_gain_distribution(&m, &s, 1.5, 100_000, &mut rng).unwrap();
        let (mean, se) = sample.mean_and_std_error();
        assert!(mean.abs() < 4.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn wait_and_watch_decays_from_prior() {
        let m = model();
        let path = m
            .simulate_path(Hypothesis::Benign, 0.0, 10.0, 0.01, ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        let traj = belief_trajectory(&m, &path, &[]).unwrap();
        assert_eq!(traj.count_jumps(), 0);
        let values = traj.sample(&(0..=100).map(|i| i as f64 * 0.1).collect::<Vec<_>>());
        assert_relative_eq!(values[0], 0.5, epsilon = 1e-15);
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
        assert!(values[100] < 0.5);
    }

    #[test]
    fn adverse_trajectory_ends_at_one() {
        let m = model();
        let path = m
            .simulate_path(Hypothesis::Adverse, 0.0, 50.0, 0.01, ChaCha8Rng::seed_from_u64(2))
            .unwrap();
        let tau = path.hit_time.unwrap();
        let times: Vec<f64> = (1..100).map(|i| i as f64 * 0.5).collect();
        let traj = belief_trajectory(&m, &path, &times).unwrap();
        assert_eq!(traj.value_at(tau), 1.0);
        assert!(traj.left_limit(tau) < 1.0);
        let kept = times.iter().filter(|t| **t < tau).count();
        assert_eq!(traj.partition().len(), kept);
        assert_eq!(traj.count_jumps(), kept + 1);
    }

    #[test]
    fn trajectory_matches_posterior_everywhere() {
        let m = model();
        let path = m
            .simulate_path(Hypothesis::Benign, 0.0, 6.0, 0.01, ChaCha8Rng::seed_from_u64(3))
            .unwrap();
        let traj = belief_trajectory(&m, &path, &[1.0, 2.0, 4.5]).unwrap();
        for &t in &[0.0, 0.5, 1.0, 1.7, 3.0, 4.5, 6.0] {
            let mut p = Partition::new(0.0);
            for &ts in [1.0, 2.0, 4.5].iter().filter(|ts| **ts <= t) {
                p.push(ts, path.value_at(ts).unwrap()).unwrap();
            }
            assert_eq!(traj.value_at(t), posterior_belief(&m, &p, t, true).unwrap());
        }
    }

    fn chain_model() -> ProcessModel {
        let c0 = KernelSpec::chain(vec![
            vec![0.6, 0.3, 0.1],
            vec![0.3, 0.4, 0.3],
            vec![0.2, 0.3, 0.5],
        ])
        .unwrap();
        let c1 = KernelSpec::chain(vec![
            vec![0.4, 0.4, 0.2],
            vec![0.2, 0.4, 0.4],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        ProcessModel::new(0.4, c0, c1, DeadlineSpec::ChainAbsorb { state: 2 }).unwrap()
    }

    #[test]
    fn chain_posterior_matches_hand_enumeration() {
        // two steps, one sample at step 2 equal to state 1, origin state 0
        let m = chain_model();
        let p = Partition::from_samples(0.0, &[2.0], &[1.0]).unwrap();
        let got = posterior_belief(&m, &p, 2.0, true).unwrap();
        // adverse: paths 0->0->1, 0->1->1 (no visit to 2)
        let w1 = 0.4 * 0.4 + 0.4 * 0.4;
        // benign: 0->0->1, 0->1->1, 0->2->1
        let w0 = 0.6 * 0.3 + 0.3 * 0.4 + 0.1 * 0.3;
        let expected = 0.4 * w1 / (0.4 * w1 + 0.6 * w0);
        assert_relative_eq!(got, expected, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn posterior_stays_in_unit_interval(
            xs in proptest::collection::vec(-4.0f64..2.9, 0..6),
            gap in 0.05f64..2.0,
            tail in 0.0f64..3.0,
        ) {
            let m = model();
            let mut p = Partition::new(0.0);
            for (i, x) in xs.iter().enumerate() {
                p.push(gap * (i + 1) as f64, *x).unwrap();
            }
            let t = p.last().0 + tail;
            let mu = posterior_belief(&m, &p, t, true).unwrap();
            prop_assert!((0.0..1.0).contains(&mu));
        }

        #[test]
        fn sequential_and_batch_updates_agree(
            xs in proptest::collection::vec(-3.0f64..2.5, 1..6),
            gaps in proptest::collection::vec(0.05f64..1.5, 6),
        ) {
            let m = model();
            let mut p = Partition::new(0.0);
            let mut s = DecisionState::initial(&m, 0.0);
            let mut t = 0.0;
            for (x, g) in xs.iter().zip(&gaps) {
                t += g;
                p.push(t, *x).unwrap();
                s = s.observe(&m, t, *x).unwrap();
            }
            let batch = posterior_belief(&m, &p, t, true).unwrap();
            prop_assert!((s.mu - batch).abs() < 1e-12);
        }
    }
}

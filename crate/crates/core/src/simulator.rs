//! Monte Carlo episodes of a policy interacting with a simulated path.
//!
//! An episode draws `Θ` from the prior, grows the path lazily up to each
//! sensing date and ends either when the policy stops or when the deadline
//! arrives first. The loss is
//!
//! ```text
//! (C₁·1{θ̂=0, Θ=1} + C₀·1{θ̂=1, Θ=0} + C_d·T)·1{T < τ} + C_r·1{τ ≤ T} + C_s·N
//! ```
//!
//! Episode `i` of a run draws from streams keyed by `(master_seed, i)`, so
//! policies compared under the same seed see the same hypotheses and paths.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::belief::{posterior_belief, DecisionState, Partition};
use crate::error::{Error, Result};
use crate::math::mean_and_std_error;
use crate::policy::{
    optimize_rendezvous, policy_action, stop_decision, CostConfig, ObjectiveKind, PolicyAction,
    ValueGrid,
};
use crate::process::{Hypothesis, PathGenerator, ProcessModel};
use crate::rng::{stream, Lane};

const INDEX_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub enum RendezvousRule {
    /// Decisions read off a solved value grid.
    Grid(Arc<ValueGrid>),
    /// One-step optimizer: senses at the best date on `delta_grid` whenever
    /// the lookahead cost beats stopping now.
    Direct {
        delta_grid: Vec<f64>,
        n_draws: usize,
        kind: ObjectiveKind,
    },
}

#[derive(Clone, Debug)]
pub enum BaselinePolicy {
    /// Senses every `interval` and stops once the belief leaves
    /// `(lower, upper)`, or at `decision_time` at the latest.
    Periodic {
        interval: f64,
        lower: f64,
        upper: f64,
        decision_time: f64,
    },
    /// Never senses and decides at `decision_time` from survival alone.
    WaitAndWatch { decision_time: f64 },
    Rendezvous(RendezvousRule),
}

impl BaselinePolicy {
    pub fn periodic(interval: f64, lower: f64, upper: f64, decision_time: f64) -> Result<Self> {
        let p = BaselinePolicy::Periodic {
            interval,
            lower,
            upper,
            decision_time,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaselinePolicy::Periodic {
                interval,
                lower,
                upper,
                decision_time,
            } => {
                if !(*interval > 0.0) {
                    return Err(Error::NonPositiveDuration(*interval));
                }
                if !(0.0 <= *lower && lower <= upper && *upper <= 1.0) {
                    return Err(Error::param(
                        "policy",
                        format!("need 0 <= lower <= upper <= 1, got {lower} and {upper}"),
                    ));
                }
                if !(*decision_time >= 0.0) {
                    return Err(Error::param("policy", "decision time must be non-negative"));
                }
            }
            BaselinePolicy::WaitAndWatch { decision_time } => {
                if !(*decision_time >= 0.0) {
                    return Err(Error::param("policy", "decision time must be non-negative"));
                }
            }
            BaselinePolicy::Rendezvous(RendezvousRule::Direct {
                delta_grid, n_draws, ..
            }) => {
                if delta_grid.is_empty() {
                    return Err(Error::EmptyGrid);
                }
                if let Some(d) = delta_grid.iter().find(|d| !(**d > 0.0)) {
                    return Err(Error::NonPositiveDuration(*d));
                }
                if *n_draws == 0 {
                    return Err(Error::param("n_draws", "need at least one draw"));
                }
            }
            BaselinePolicy::Rendezvous(RendezvousRule::Grid(_)) => {}
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeSettings {
    pub x0: f64,
    /// Path grid; sensing dates are rounded onto it.
    pub dt_sim: f64,
    pub horizon: f64,
}

impl EpisodeSettings {
    fn validate(&self) -> Result<()> {
        if !(self.dt_sim > 0.0) {
            return Err(Error::NonPositiveDuration(self.dt_sim));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::param("horizon", "must be finite and non-negative"));
        }
        Ok(())
    }

    fn index(&self, t: f64) -> usize {
        (t / self.dt_sim + INDEX_TOLERANCE).round().max(0.0) as usize
    }

    fn horizon_index(&self) -> usize {
        (self.horizon / self.dt_sim + INDEX_TOLERANCE).floor() as usize
    }
}

/// Additive terms of the episode loss. All are non-negative.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossComponents {
    /// `C₁`: declared benign while adverse.
    pub false_negative: f64,
    /// `C₀`: declared adverse while benign.
    pub false_positive: f64,
    pub delay: f64,
    pub deadline: f64,
    pub sampling: f64,
}

impl LossComponents {
    pub const NAMES: [&'static str; 5] = ["false_negative", "false_positive", "delay", "deadline", "sampling"];

    pub fn total(&self) -> f64 {
        self.false_negative + self.false_positive + self.delay + self.deadline + self.sampling
    }

    pub fn values(&self) -> [f64; 5] {
        [
            self.false_negative,
            self.false_positive,
            self.delay,
            self.deadline,
            self.sampling,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeOutcome {
    pub index: u64,
    pub truth: Hypothesis,
    /// Deadline time, if it falls within the simulated horizon.
    pub tau: Option<f64>,
    /// Stopping time, or the sensing date that the deadline pre-empted.
    pub stop_time: f64,
    /// Absent when the deadline arrived before the policy stopped.
    pub estimate: Option<Hypothesis>,
    /// Belief the estimate was based on.
    pub final_belief: f64,
    pub n_samples: usize,
    pub loss: f64,
    pub components: LossComponents,
}

enum Step {
    Stop,
    SenseAt(f64),
    StopAt(f64),
}

fn decide(
    policy: &BaselinePolicy,
    model: &ProcessModel,
    costs: &CostConfig,
    settings: &EpisodeSettings,
    state: &DecisionState,
    rng: &mut crate::rng::Stream,
) -> Result<Step> {
    match policy {
        BaselinePolicy::Periodic {
            interval,
            lower,
            upper,
            decision_time,
        } => {
            if state.mu <= *lower || state.mu >= *upper || state.t >= *decision_time {
                return Ok(Step::Stop);
            }
            let next = state.t + interval;
            if next >= *decision_time {
                Ok(Step::StopAt(*decision_time))
            } else {
                Ok(Step::SenseAt(next))
            }
        }
        BaselinePolicy::WaitAndWatch { decision_time } => {
            if state.t < *decision_time {
                Ok(Step::StopAt(*decision_time))
            } else {
                Ok(Step::Stop)
            }
        }
        BaselinePolicy::Rendezvous(RendezvousRule::Grid(grid)) => {
            Ok(match policy_action(grid, state, costs) {
                PolicyAction::Stop(_) => Step::Stop,
                PolicyAction::Continue(delta) => Step::SenseAt(state.t + delta),
            })
        }
        BaselinePolicy::Rendezvous(RendezvousRule::Direct {
            delta_grid,
            n_draws,
            kind,
        }) => {
            let room = settings.horizon - state.t + INDEX_TOLERANCE;
            let candidates: Vec<f64> = delta_grid.iter().copied().filter(|d| *d <= room).collect();
            if candidates.is_empty() {
                return Ok(Step::Stop);
            }
            let best = optimize_rendezvous(model, state, costs, &candidates, *kind, *n_draws, rng)?;
            if best.lookahead < costs.stop_cost(state.mu) {
                Ok(Step::SenseAt(state.t + best.delta))
            } else {
                Ok(Step::Stop)
            }
        }
    }
}

/// Runs episode `index` of the run keyed by `master_seed`.
pub fn run_episode(
    model: &ProcessModel,
    policy: &BaselinePolicy,
    costs: &CostConfig,
    settings: &EpisodeSettings,
    master_seed: u64,
    index: u64,
) -> Result<EpisodeOutcome> {
    settings.validate()?;
    let mut path_rng = stream(master_seed, index, Lane::Path);
    let mut policy_rng = stream(master_seed, index, Lane::Policy);
    let truth = Hypothesis::from_bit(rand::Rng::random::<f64>(&mut path_rng) < model.prior());
    let mut path = PathGenerator::new(model, truth, settings.x0, settings.dt_sim, path_rng)?;
    let horizon_index = settings.horizon_index();
    let mut partition = Partition::new(settings.x0);
    let mut state = DecisionState::initial(model, settings.x0);
    let mut now = 0usize;

    let dies_by = |path: &mut PathGenerator<'_, _>, target: usize| -> Result<bool> {
        path.extend_to(target)?;
        Ok(path.hit_index().is_some_and(|h| h <= target))
    };
    let beyond = |target: usize| Error::HorizonExceeded {
        requested: target as f64 * settings.dt_sim,
        horizon: settings.horizon,
    };

    let (stop_index, mu) = loop {
        match decide(policy, model, costs, settings, &state, &mut policy_rng)? {
            Step::Stop => break (now, state.mu),
            Step::StopAt(t) => {
                let target = settings.index(t).max(now);
                if target > horizon_index {
                    return Err(beyond(target));
                }
                if dies_by(&mut path, target)? {
                    return Ok(missed(index, truth, &path, target, settings, &partition, costs));
                }
                let t_stop = target as f64 * settings.dt_sim;
                break (target, posterior_belief(model, &partition, t_stop, true)?);
            }
            Step::SenseAt(t) => {
                let target = settings.index(t).max(now + 1);
                if target > horizon_index {
                    return Err(beyond(target));
                }
                if dies_by(&mut path, target)? {
                    return Ok(missed(index, truth, &path, target, settings, &partition, costs));
                }
                let t_sense = target as f64 * settings.dt_sim;
                let y = path.value(target).expect("path extended to target");
                partition.push(t_sense, y)?;
                state = DecisionState::from_partition(model, &partition, t_sense, true)?;
                now = target;
            }
        }
    };

    let estimate = stop_decision(mu, costs);
    let stop_time = stop_index as f64 * settings.dt_sim;
    let tau = path.extend_until_hit(horizon_index.max(stop_index + 1))?.map(|h| h as f64 * settings.dt_sim);
    let n = partition.len();
    let components = LossComponents {
        false_negative: if estimate == Hypothesis::Benign && truth == Hypothesis::Adverse {
            costs.c1
        } else {
            0.0
        },
        false_positive: if estimate == Hypothesis::Adverse && truth == Hypothesis::Benign {
            costs.c0
        } else {
            0.0
        },
        delay: costs.cd * stop_time,
        deadline: 0.0,
        sampling: costs.cs * n as f64,
    };
    Ok(EpisodeOutcome {
        index,
        truth,
        tau,
        stop_time,
        estimate: Some(estimate),
        final_belief: mu,
        n_samples: n,
        loss: components.total(),
        components,
    })
}

fn missed<R: rand::Rng>(
    index: u64,
    truth: Hypothesis,
    path: &PathGenerator<'_, R>,
    target: usize,
    settings: &EpisodeSettings,
    partition: &Partition,
    costs: &CostConfig,
) -> EpisodeOutcome {
    let n = partition.len();
    let components = LossComponents {
        deadline: costs.cr,
        sampling: costs.cs * n as f64,
        ..Default::default()
    };
    EpisodeOutcome {
        index,
        truth,
        tau: path.hit_time(),
        stop_time: target as f64 * settings.dt_sim,
        estimate: None,
        final_belief: 1.0,
        n_samples: n,
        loss: components.total(),
        components,
    }
}

/// Runs episodes `0..n_episodes` in parallel. The result is ordered by
/// episode index; the lowest failing index is reported.
pub fn simulate_episodes(
    model: &ProcessModel,
    policy: &BaselinePolicy,
    costs: &CostConfig,
    settings: &EpisodeSettings,
    n_episodes: u64,
    master_seed: u64,
) -> Result<Vec<EpisodeOutcome>> {
    costs.validate()?;
    policy.validate()?;
    settings.validate()?;
    let results: Vec<Result<EpisodeOutcome>> = (0..n_episodes)
        .into_par_iter()
        .map(|i| run_episode(model, policy, costs, settings, master_seed, i))
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Episode {
                index: i as u64,
                master_seed,
                source: Box::new(e),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiskEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_episodes: usize,
    /// Per-component means.
    pub components: LossComponents,
}

impl RiskEstimate {
    pub fn from_outcomes(outcomes: &[EpisodeOutcome]) -> Self {
        let losses: Vec<f64> = outcomes.iter().map(|o| o.loss).collect();
        let (mean, std_error) = mean_and_std_error(&losses);
        let n = outcomes.len() as f64;
        let sum = |f: fn(&LossComponents) -> f64| outcomes.iter().map(|o| f(&o.components)).sum::<f64>() / n;
        RiskEstimate {
            mean,
            std_error,
            n_episodes: outcomes.len(),
            components: LossComponents {
                false_negative: sum(|c| c.false_negative),
                false_positive: sum(|c| c.false_positive),
                delay: sum(|c| c.delay),
                deadline: sum(|c| c.deadline),
                sampling: sum(|c| c.sampling),
            },
        }
    }
}

pub fn estimate_risk(
    model: &ProcessModel,
    policy: &BaselinePolicy,
    costs: &CostConfig,
    settings: &EpisodeSettings,
    n_episodes: u64,
    master_seed: u64,
) -> Result<RiskEstimate> {
    if n_episodes < 2 {
        return Err(Error::param("episodes", "need at least 2 episodes"));
    }
    let outcomes = simulate_episodes(model, policy, costs, settings, n_episodes, master_seed)?;
    Ok(RiskEstimate::from_outcomes(&outcomes))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairedDifference {
    pub first: usize,
    pub second: usize,
    /// Mean of `loss(first) − loss(second)` over shared episodes.
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug)]
pub struct PolicyComparison {
    pub names: Vec<String>,
    pub risks: Vec<RiskEstimate>,
    pub differences: Vec<PairedDifference>,
    pub outcomes: Vec<Vec<EpisodeOutcome>>,
}

impl PolicyComparison {
    pub fn difference(&self, first: usize, second: usize) -> Option<&PairedDifference> {
        self.differences
            .iter()
            .find(|d| d.first == first && d.second == second)
    }
}

/// Evaluates every policy on the same episodes and reports all pairwise
/// paired differences.
pub fn compare_policies(
    model: &ProcessModel,
    costs: &CostConfig,
    policies: &[(String, BaselinePolicy)],
    settings: &EpisodeSettings,
    n_episodes: u64,
    master_seed: u64,
) -> Result<PolicyComparison> {
    if policies.len() < 2 {
        return Err(Error::param("policies", "need at least 2 policies to compare"));
    }
    if n_episodes < 2 {
        return Err(Error::param("episodes", "need at least 2 episodes"));
    }
    let outcomes = policies
        .iter()
        .map(|(_, p)| simulate_episodes(model, p, costs, settings, n_episodes, master_seed))
        .collect::<Result<Vec<_>>>()?;
    let risks = outcomes.iter().map(|o| RiskEstimate::from_outcomes(o)).collect();
    let mut differences = Vec::new();
    for i in 0..policies.len() {
        for j in i + 1..policies.len() {
            let diffs: Vec<f64> = outcomes[i]
                .iter()
                .zip(&outcomes[j])
                .map(|(a, b)| a.loss - b.loss)
                .collect();
            let (mean, std_error) = mean_and_std_error(&diffs);
            differences.push(PairedDifference {
                first: i,
                second: j,
                mean,
                std_error,
            });
        }
    }
    Ok(PolicyComparison {
        names: policies.iter().map(|(n, _)| n.clone()).collect(),
        risks,
        differences,
        outcomes,
    })
}

pub const EPISODE_COLUMNS: [&str; 13] = [
    "episode",
    "truth",
    "tau",
    "stop_time",
    "estimate",
    "final_belief",
    "n_samples",
    "loss",
    "false_negative",
    "false_positive",
    "delay",
    "deadline",
    "sampling",
];

/// Writes one CSV row per episode. Missing values are empty fields.
pub fn write_episode_log<W: Write>(outcomes: &[EpisodeOutcome], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(EPISODE_COLUMNS)?;
    for o in outcomes {
        let mut row = vec![
            o.index.to_string(),
            o.truth.bit().to_string(),
            o.tau.map(|t| t.to_string()).unwrap_or_default(),
            o.stop_time.to_string(),
            o.estimate.map(|e| e.bit().to_string()).unwrap_or_default(),
            o.final_belief.to_string(),
            o.n_samples.to_string(),
            o.loss.to_string(),
        ];
        row.extend(o.components.values().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

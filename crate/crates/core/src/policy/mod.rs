//! Stopping rule, rendezvous objectives and the rendezvous optimizer.
//!
//! When the policy stops it declares `θ̂ = 1{μ ≥ C₁/(C₀ + C₁)}`. When it
//! continues it picks the next sensing date `δ` by minimizing one of two
//! objectives over a grid:
//!
//! - the displayed surprise/suspense objective
//!   `((C₁ − C₀)·P(I_t(δ) ≥ η_t) + C₁)·S_t(δ) + C_r·(1 − S_t(δ))` with
//!   `η_t = C₁/(C₀ + C₁) − μ_t`;
//! - a one-step lookahead of the loss itself,
//!   `E[(C₀μ' ∧ C₁(1 − μ'))·1{survive} + C_r·1{die}] + C_d·δ + C_s`.

mod bellman;

pub use bellman::{
    bellman_solve, policy_action, GridSpec, NestingAxis, NestingReport, NestingViolation, PolicyAction, ValueGrid,
};

use rand::Rng;

use crate::belief::{draw_next_belief, info_gain_distribution, DecisionState, InfoGainSample};
use crate::error::{Error, Result};
use crate::process::{Hypothesis, ProcessModel};

/// Loss coefficients: type I and type II errors, delay per unit time,
/// missed deadline, and cost per sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostConfig {
    pub c1: f64,
    pub c0: f64,
    pub cd: f64,
    pub cr: f64,
    pub cs: f64,
}

impl CostConfig {
    pub fn new(c1: f64, c0: f64, cd: f64, cr: f64, cs: f64) -> Result<Self> {
        let costs = Self { c1, c0, cd, cr, cs };
        costs.validate()?;
        Ok(costs)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c1", self.c1),
            ("c0", self.c0),
            ("cd", self.cd),
            ("cr", self.cr),
            ("cs", self.cs),
        ] {
            if !(v >= 0.0) || v.is_nan() {
                return Err(Error::InvalidParameter {
                    name: "costs",
                    reason: format!("{name} must be non-negative, got {v}"),
                });
            }
        }
        if !(self.c1 + self.c0 > 0.0) {
            return Err(Error::param("costs", "c1 + c0 must be positive"));
        }
        Ok(())
    }

    /// Expected error cost of stopping now with the optimal estimate,
    /// `C₀μ ∧ C₁(1 − μ)`.
    pub fn stop_cost(&self, mu: f64) -> f64 {
        (self.c0 * mu).min(self.c1 * (1.0 - mu))
    }
}

/// `C₁/(C₀ + C₁)`. With `C₀ = 0` the threshold is 1: predicting the adverse
/// hypothesis is only justified once it is certain.
pub fn decision_threshold(costs: &CostConfig) -> Result<f64> {
    if !(costs.c1 + costs.c0 > 0.0) {
        return Err(Error::param("costs", "c1 + c0 must be positive"));
    }
    Ok(costs.c1 / (costs.c0 + costs.c1))
}

/// Estimate declared on stopping. Ties go to the adverse hypothesis.
pub fn stop_decision(mu: f64, costs: &CostConfig) -> Hypothesis {
    let threshold = costs.c1 / (costs.c0 + costs.c1);
    Hypothesis::from_bit(mu >= threshold)
}

/// Which survival probability enters the displayed objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SurvivalReading {
    /// `P(τ > t + δ | info, Θ = 1)`.
    #[default]
    Adverse,
    /// `μ·S + 1 − μ`, survival under the current belief mixture.
    Marginal,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ObjectiveKind {
    Displayed(SurvivalReading),
    #[default]
    Lookahead,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RendezvousEvaluation {
    pub delta: f64,
    pub survival: f64,
    /// `P(I_t(δ) ≥ η_t)`.
    pub tail: f64,
    pub eta: f64,
    /// Displayed objective, a function of the fields above.
    pub objective: f64,
    /// Lookahead estimate from the same draws.
    pub lookahead: f64,
}

impl RendezvousEvaluation {
    pub fn displayed(costs: &CostConfig, survival: f64, tail: f64) -> f64 {
        ((costs.c1 - costs.c0) * tail + costs.c1) * survival + costs.cr * (1.0 - survival)
    }

    pub fn score(&self, kind: ObjectiveKind) -> f64 {
        match kind {
            ObjectiveKind::Displayed(_) => self.objective,
            ObjectiveKind::Lookahead => self.lookahead,
        }
    }
}

fn check_state(state: &DecisionState, delta: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::NonPositiveDuration(delta));
    }
    if !state.survived {
        return Err(Error::param("state", "the deadline has already been reached"));
    }
    Ok(())
}

/// Evaluates both objectives at `delta` from one batch of simulated next
/// beliefs.
pub fn rendezvous_objective<R: Rng + ?Sized>(
    model: &ProcessModel,
    state: &DecisionState,
    costs: &CostConfig,
    delta: f64,
    n_draws: usize,
    reading: SurvivalReading,
    rng: &mut R,
) -> Result<RendezvousEvaluation> {
    check_state(state, delta)?;
    let sample = info_gain_distribution(model, state, delta, n_draws, rng)?;
    evaluate_sample(model, state, costs, &sample, reading)
}

/// Both objectives computed from an existing information-gain sample.
pub fn evaluate_sample(
    model: &ProcessModel,
    state: &DecisionState,
    costs: &CostConfig,
    sample: &InfoGainSample,
    reading: SurvivalReading,
) -> Result<RendezvousEvaluation> {
    let threshold = decision_threshold(costs)?;
    let delta = sample.delta;
    let loss: f64 = sample
        .draws
        .iter()
        .map(|d| if d.survived { costs.stop_cost(state.mu + d.gain) } else { costs.cr })
        .sum();
    let eta = threshold - state.mu;
    let tail = sample.tail_probability(eta);
    let adverse_survival = state.conditional_survival(model, delta);
    let survival = match reading {
        SurvivalReading::Adverse => adverse_survival,
        SurvivalReading::Marginal => state.mu * adverse_survival + 1.0 - state.mu,
    };
    Ok(RendezvousEvaluation {
        delta,
        survival,
        tail,
        eta,
        objective: RendezvousEvaluation::displayed(costs, survival, tail),
        lookahead: loss / sample.draws.len() as f64 + costs.cd * delta + costs.cs,
    })
}

/// Monte Carlo one-step lookahead cost of sensing once after `delta` and then
/// stopping optimally.
pub fn lookahead_objective<R: Rng + ?Sized>(
    model: &ProcessModel,
    state: &DecisionState,
    costs: &CostConfig,
    delta: f64,
    n_draws: usize,
    rng: &mut R,
) -> Result<f64> {
    check_state(state, delta)?;
    if n_draws == 0 {
        return Err(Error::param("n_draws", "need at least one draw"));
    }
    let mut loss = 0.0;
    for _ in 0..n_draws {
        let (next, survived) = draw_next_belief(model, state, delta, rng)?;
        loss += if survived { costs.stop_cost(next) } else { costs.cr };
    }
    Ok(loss / n_draws as f64 + costs.cd * delta + costs.cs)
}

/// Grid search for the rendezvous. Every candidate reuses the same random
/// numbers, and ties go to the earliest date.
pub fn optimize_rendezvous<R: Rng + Clone>(
    model: &ProcessModel,
    state: &DecisionState,
    costs: &CostConfig,
    delta_grid: &[f64],
    kind: ObjectiveKind,
    n_draws: usize,
    rng: &mut R,
) -> Result<RendezvousEvaluation> {
    if delta_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(bad) = delta_grid.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::NonPositiveDuration(*bad));
    }
    let mut grid = delta_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let reading = match kind {
        ObjectiveKind::Displayed(r) => r,
        ObjectiveKind::Lookahead => SurvivalReading::Adverse,
    };
    let mut best: Option<RendezvousEvaluation> = None;
    for &delta in &grid {
        let mut local = rng.clone();
        let eval = rendezvous_objective(model, state, costs, delta, n_draws, reading, &mut local)?;
        if best.is_none_or(|b| eval.score(kind) < b.score(kind)) {
            best = Some(eval);
        }
    }
    // move the caller's stream past the shared block
    let _: u64 = rng.random();
    Ok(best.expect("grid is non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{DeadlineSpec, KernelSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn costs(c1: f64, c0: f64) -> CostConfig {
        CostConfig::new(c1, c0, 0.1, 5.0, 0.2).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(decision_threshold(&costs(2.0, 2.0)).unwrap(), 0.5);
        assert_eq!(decision_threshold(&costs(3.0, 1.0)).unwrap(), 0.75);
        assert_eq!(decision_threshold(&costs(3.0, 0.0)).unwrap(), 1.0);
        let zero = CostConfig { c1: 0.0, c0: 0.0, cd: 0.0, cr: 0.0, cs: 0.0 };
        assert!(decision_threshold(&zero).is_err());
        assert!(CostConfig::new(0.0, 0.0, 0.0, 0.0, 0.0).is_err());
        assert!(CostConfig::new(1.0, -1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn stop_decision_ties_go_adverse() {
        let c = costs(1.0, 1.0);
        assert_eq!(stop_decision(0.9, &c), Hypothesis::Adverse);
        assert_eq!(stop_decision(0.5, &c), Hypothesis::Adverse);
        assert_eq!(stop_decision(0.49, &c), Hypothesis::Benign);
    }

    #[test]
    fn displayed_objective_special_cases() {
        let c = CostConfig::new(4.0, 1.0, 0.0, 7.0, 0.0).unwrap();
        assert_eq!(RendezvousEvaluation::displayed(&c, 0.0, 0.3), 7.0);
        assert_eq!(RendezvousEvaluation::displayed(&c, 1.0, 0.0), 4.0);
        let sym = CostConfig::new(3.0, 3.0, 0.0, 7.0, 0.0).unwrap();
        for tail in [0.0, 0.4, 1.0] {
            assert_relative_eq!(
                RendezvousEvaluation::displayed(&sym, 0.6, tail),
                3.0 * 0.6 + 7.0 * 0.4,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn lookahead_without_information() {
        let m = ProcessModel::brownian(0.3, 0.0, 0.0, 1.0, 1e6).unwrap();
        let s = DecisionState::initial(&m, 0.0);
        let c = CostConfig::new(2.0, 1.0, 0.1, 5.0, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = lookahead_objective(&m, &s, &c, 2.0, 500, &mut rng).unwrap();
        assert_relative_eq!(v, c.stop_cost(0.3) + 0.2 + 0.25, epsilon = 1e-12);
    }

    #[test]
    fn lookahead_with_certain_death() {
        // every adverse chain is absorbed on the first step; a benign chain
        // landing on state 1 therefore reveals itself
        let k = KernelSpec::chain(vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let m = ProcessModel::new(0.5, k.clone(), k, DeadlineSpec::ChainAbsorb { state: 1 }).unwrap();
        let c = CostConfig::new(2.0, 1.0, 0.1, 5.0, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = DecisionState::initial(&m, 0.0);
        assert_eq!(s.conditional_survival(&m, 1.0), 0.0);
        let n = 20_000;
        let v = lookahead_objective(&m, &s, &c, 1.0, n, &mut rng).unwrap();
        // died with probability μ, otherwise μ' = 0 and stopping is free
        let se = 5.0 * 0.5 / (n as f64).sqrt();
        assert!((v - (0.5 * 5.0 + 0.1 + 0.25)).abs() < 4.0 * se);
        s.mu = 1.0;
        let v = lookahead_objective(&m, &s, &c, 1.0, 100, &mut rng).unwrap();
        assert_relative_eq!(v, 5.0 + 0.1 + 0.25, epsilon = 1e-12);
    }

    #[test]
    fn evaluation_fields_recompute_objective() {
        let m = ProcessModel::brownian(0.5, -0.2, 0.4, 1.0, 3.0).unwrap();
        let s = DecisionState::initial(&m, 0.0);
        let c = CostConfig::new(3.0, 1.0, 0.05, 8.0, 0.1).unwrap();
        for reading in [SurvivalReading::Adverse, SurvivalReading::Marginal] {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let e = rendezvous_objective(&m, &s, &c, 1.5, 2000, reading, &mut rng).unwrap();
            let recomputed = ((c.c1 - c.c0) * e.tail + c.c1) * e.survival + c.cr * (1.0 - e.survival);
            assert!((e.objective - recomputed).abs() < 1e-12);
            assert_relative_eq!(e.eta, 0.75 - 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn optimizer_tie_breaks_and_errors() {
        let m = ProcessModel::brownian(0.4, 0.0, 0.0, 1.0, 1e6).unwrap();
        let s = DecisionState::initial(&m, 0.0);
        let c = CostConfig::new(1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // identical kernels, no deadline, no delay cost: flat objective
        let best = optimize_rendezvous(&m, &s, &c, &[3.0, 0.5, 1.0], ObjectiveKind::Lookahead, 200, &mut rng).unwrap();
        assert_eq!(best.delta, 0.5);
        let single = optimize_rendezvous(&m, &s, &c, &[2.5], ObjectiveKind::Lookahead, 10, &mut rng).unwrap();
        assert_eq!(single.delta, 2.5);
        assert!(matches!(
            optimize_rendezvous(&m, &s, &c, &[], ObjectiveKind::Lookahead, 10, &mut rng),
            Err(Error::EmptyGrid)
        ));
        assert!(optimize_rendezvous(&m, &s, &c, &[1.0, 0.0], ObjectiveKind::Lookahead, 10, &mut rng).is_err());
    }

    #[test]
    fn optimizer_is_reproducible() {
        let m = ProcessModel::brownian(0.5, -0.3, 0.3, 1.0, 4.0).unwrap();
        let s = DecisionState::initial(&m, 0.0);
        let c = CostConfig::new(5.0, 5.0, 0.1, 10.0, 0.2).unwrap();
        let grid = crate::math::geometric_grid(0.25, 8.0, 12);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            optimize_rendezvous(&m, &s, &c, &grid, ObjectiveKind::Displayed(SurvivalReading::Adverse), 500, &mut rng).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.delta.to_bits(), b.delta.to_bits());
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    proptest! {
        #[test]
        fn threshold_scale_invariance(c1 in 0.0f64..50.0, c0 in 0.01f64..50.0, k in 1e-3f64..1e3, mu in 0.0f64..=1.0) {
            let a = CostConfig::new(c1, c0, 0.0, 0.0, 0.0).unwrap();
            let b = CostConfig::new(k * c1, k * c0, 0.0, 0.0, 0.0).unwrap();
            let (ta, tb) = (decision_threshold(&a).unwrap(), decision_threshold(&b).unwrap());
            prop_assert!((ta - tb).abs() <= 1e-15 * ta.max(1.0) * 4.0);
            if (mu - ta).abs() > 1e-12 {
                prop_assert_eq!(stop_decision(mu, &a), stop_decision(mu, &b));
            }
        }
    }
}

//! Backward induction on a `(t, μ, x̄)` grid.
//!
//! From a cell the policy either stops, paying `C₀μ ∧ C₁(1 − μ) + C_d·t`, or
//! senses again after `k` time steps. Continuation integrates the next value
//! against the killed adverse kernel and the benign kernel by quadrature, plus
//! `C_r` on the adverse mass that dies before the sample. Values between grid
//! points are interpolated bilinearly in `(μ, x̄)`.

use std::io::Write;

use log::warn;
use rayon::prelude::*;

use super::{decision_threshold, stop_decision, CostConfig};
use crate::belief::{step_log_ratio, DecisionState};
use crate::error::{Error, Result};
use crate::math::{linear_grid, logistic, logit};
use crate::process::{Hypothesis, KernelSpec, ProcessModel};

const LOG_ODDS_CLAMP: f64 = 745.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub horizon: f64,
    pub time_step: f64,
    pub belief_points: usize,
    /// Observation axis. Ignored for chains, which use every state.
    pub obs_min: f64,
    pub obs_max: f64,
    pub obs_points: usize,
}

impl GridSpec {
    pub fn check(&self, model: &ProcessModel) -> Result<()> {
        self.validate(model).map(|_| ())
    }

    fn validate(&self, model: &ProcessModel) -> Result<usize> {
        if !(self.time_step > 0.0) {
            return Err(Error::NonPositiveDuration(self.time_step));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::NonPositiveDuration(self.horizon));
        }
        let steps = self.horizon / self.time_step;
        let n = steps.round();
        if (steps - n).abs() > 1e-9 * steps.max(1.0) || n < 1.0 {
            return Err(Error::param(
                "grid",
                "horizon must be a whole number of time steps",
            ));
        }
        if self.belief_points < 3 {
            return Err(Error::param("grid", "need at least 3 belief points"));
        }
        if model.is_chain() {
            if (self.time_step - self.time_step.round()).abs() > 1e-9 {
                return Err(Error::param("grid", "chain time step must be a whole number"));
            }
        } else {
            if self.obs_points < 2 || !(self.obs_min < self.obs_max) {
                return Err(Error::param(
                    "grid",
                    "observation axis needs at least 2 points on an increasing range",
                ));
            }
            if let Some(level) = model.barrier_level() {
                if self.obs_max >= level {
                    return Err(Error::param("grid", "observation axis must end below the barrier"));
                }
            }
        }
        Ok(n as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PolicyAction {
    Stop(Hypothesis),
    /// Sense again after this delay.
    Continue(f64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NestingReport {
    /// Cells that continue although the same `(μ, x̄)` stops one slice earlier.
    pub time_violations: usize,
    /// Cells that continue although the next lower `x̄` stops.
    pub observation_violations: usize,
    pub cells: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NestingAxis {
    Time,
    Observation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NestingViolation {
    /// `(time, belief, observation)` indices.
    pub cell: (usize, usize, usize),
    pub axis: NestingAxis,
}

/// Solved value function and decisions.
#[derive(Clone, Debug)]
pub struct ValueGrid {
    times: Vec<f64>,
    beliefs: Vec<f64>,
    observations: Vec<f64>,
    value: Vec<f64>,
    q_stop: Vec<f64>,
    q_continue: Vec<f64>,
    best_delta: Vec<f64>,
    costs: CostConfig,
    threshold: f64,
}

struct Node {
    obs_index: usize,
    obs_weight: f64,
    weight: f64,
    log_ratio: f64,
}

struct Transition {
    survival: f64,
    adverse: Vec<Node>,
    benign: Vec<Node>,
}

/// Position of `v` on a uniform axis as a lower index and an interpolation
/// weight towards the next point.
fn locate(v: f64, lo: f64, hi: f64, n: usize) -> (usize, f64) {
    if n < 2 {
        return (0, 0.0);
    }
    let pos = (v - lo) / (hi - lo) * (n - 1) as f64;
    let i = (pos.floor().max(0.0) as usize).min(n - 2);
    (i, (pos - i as f64).clamp(0.0, 1.0))
}

const QUADRATURE_NODES: usize = 129;

fn simpson_weights(n: usize, h: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        let c = if i == 0 || i == n - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        c * h / 3.0
    })
}

/// Simpson nodes over eight standard deviations either side of the mean,
/// cut at the barrier for the adverse kernel. Adverse weights are rescaled to
/// the exact survival probability, benign weights to one.
fn gaussian_nodes(model: &ProcessModel, theta: Hypothesis, x: f64, dt: f64, obs: &[f64]) -> Result<(f64, Vec<Node>)> {
    let KernelSpec::Gaussian { drift, volatility } = *model.kernel(theta) else {
        unreachable!("gaussian nodes on a chain model");
    };
    let level = model.barrier_level().unwrap_or(f64::INFINITY);
    let mean = x + drift * dt;
    let sd = volatility * dt.sqrt();
    let lo = mean - 8.0 * sd;
    let hi = match theta {
        Hypothesis::Adverse => (mean + 8.0 * sd).min(level),
        Hypothesis::Benign => mean + 8.0 * sd,
    };
    let target = match theta {
        Hypothesis::Adverse => model.survival_from_sample(x, dt),
        Hypothesis::Benign => 1.0,
    };
    if !(hi > lo) || target <= 0.0 {
        return Ok((0.0, Vec::new()));
    }
    let h = (hi - lo) / (QUADRATURE_NODES - 1) as f64;
    let mut out = Vec::with_capacity(QUADRATURE_NODES);
    let mut total = 0.0;
    for (i, c) in simpson_weights(QUADRATURE_NODES, h).enumerate() {
        let y = lo + h * i as f64;
        let log_density = match theta {
            Hypothesis::Adverse => model.log_killed_density(x, y, dt)?,
            Hypothesis::Benign => model.log_transition_density(theta, x, y, dt)?,
        };
        let weight = c * log_density.exp();
        if weight <= 0.0 {
            continue;
        }
        total += weight;
        let (obs_index, obs_weight) = locate(y, obs[0], obs[obs.len() - 1], obs.len());
        out.push(Node {
            obs_index,
            obs_weight,
            weight,
            log_ratio: step_log_ratio(model, x, y, dt)?,
        });
    }
    if total <= 0.0 {
        return Ok((0.0, Vec::new()));
    }
    for node in &mut out {
        node.weight *= target / total;
    }
    Ok((target, out))
}

fn chain_nodes(model: &ProcessModel, x: usize, steps: usize) -> Result<Transition> {
    let (c0, c1, absorbing) = model.chain_kernels().expect("chain model");
    let n = c1.states();
    let dt = steps as f64;
    let node = |y: usize, weight: f64| -> Result<Node> {
        let (obs_index, obs_weight) = if y + 1 < n { (y, 0.0) } else { (n - 2, 1.0) };
        Ok(Node {
            obs_index,
            obs_weight,
            weight,
            log_ratio: step_log_ratio(model, x as f64, y as f64, dt)?,
        })
    };
    let taboo = c1.taboo_power(absorbing, steps);
    let full0 = c0.power(steps);
    let mut adverse = Vec::new();
    let mut survival = 0.0;
    if x != absorbing {
        for (y, &w) in taboo[x].iter().enumerate() {
            if w > 0.0 {
                survival += w;
                adverse.push(node(y, w)?);
            }
        }
    }
    let benign = full0[x]
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(y, &w)| node(y, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(Transition {
        survival: survival.min(1.0),
        adverse,
        benign,
    })
}

/// Solves the stopping problem by backward induction over the grid.
pub fn bellman_solve(model: &ProcessModel, costs: &CostConfig, grid: &GridSpec) -> Result<ValueGrid> {
    costs.validate()?;
    let steps = grid.validate(model)?;
    let threshold = decision_threshold(costs)?;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * grid.time_step).collect();
    let beliefs = linear_grid(0.0, 1.0, grid.belief_points);
    let observations = match model.chain_kernels() {
        Some((_, c1, _)) => {
            let n = c1.states();
            if n < 2 {
                return Err(Error::param("grid", "chain needs at least 2 states"));
            }
            (0..n).map(|s| s as f64).collect()
        }
        None => linear_grid(grid.obs_min, grid.obs_max, grid.obs_points),
    };
    let (nt, nb, nx) = (times.len(), beliefs.len(), observations.len());
    let spacing = 1.0 / (nb - 1) as f64;
    if spacing >= threshold.min(1.0 - threshold) {
        warn!(
            "belief grid spacing {spacing} does not bracket the decision threshold {threshold}"
        );
    }

    // transitions[k - 1][ix]
    let transitions: Vec<Vec<Transition>> = (1..nt)
        .into_par_iter()
        .map(|k| {
            let dt = k as f64 * grid.time_step;
            (0..nx)
                .map(|ix| {
                    if model.is_chain() {
                        chain_nodes(model, ix, (dt.round()) as usize)
                    } else {
                        let x = observations[ix];
                        let (survival, adverse) = gaussian_nodes(model, Hypothesis::Adverse, x, dt, &observations)?;
                        let (_, benign) = gaussian_nodes(model, Hypothesis::Benign, x, dt, &observations)?;
                        Ok(Transition { survival, adverse, benign })
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let cells = nb * nx;
    let mut value = vec![0.0; nt * cells];
    let mut q_stop = vec![0.0; nt * cells];
    let mut q_continue = vec![f64::INFINITY; nt * cells];
    let mut best_delta = vec![f64::NAN; nt * cells];

    let last = nt - 1;
    for c in 0..cells {
        let mu = beliefs[c / nx];
        let s = costs.stop_cost(mu) + costs.cd * times[last];
        q_stop[last * cells + c] = s;
        value[last * cells + c] = s;
    }

    for it in (0..last).rev() {
        let future_offset = it * cells + cells;
        let future = &value[future_offset..];
        let row: Vec<(f64, f64, f64)> = (0..cells)
            .into_par_iter()
            .map(|c| {
                let (ib, ix) = (c / nx, c % nx);
                let mu = beliefs[ib];
                let stop = costs.stop_cost(mu) + costs.cd * times[it];
                let prior_lo = logit(mu).clamp(-LOG_ODDS_CLAMP, LOG_ODDS_CLAMP);
                let mut best = (f64::INFINITY, f64::NAN);
                for k in 1..nt - it {
                    let slice = &future[(it + k) * cells - future_offset..][..cells];
                    let tr = &transitions[k - 1][ix];
                    let next_value = |node: &Node| {
                        let next_mu = logistic(prior_lo + node.log_ratio);
                        let (jb, wb) = locate(next_mu, 0.0, 1.0, nb);
                        let (jx, wx) = (node.obs_index, node.obs_weight);
                        let at = |b: usize, x: usize| slice[b * nx + x];
                        (1.0 - wb) * ((1.0 - wx) * at(jb, jx) + wx * at(jb, jx + 1))
                            + wb * ((1.0 - wx) * at(jb + 1, jx) + wx * at(jb + 1, jx + 1))
                    };
                    let adverse: f64 = tr
                        .adverse
                        .iter()
                        .map(|n| n.weight * (costs.cs + next_value(n)))
                        .sum();
                    let benign: f64 = tr
                        .benign
                        .iter()
                        .map(|n| n.weight * (costs.cs + next_value(n)))
                        .sum();
                    let q = mu * (1.0 - tr.survival) * costs.cr + mu * adverse + (1.0 - mu) * benign;
                    if q < best.0 {
                        best = (q, k as f64 * grid.time_step);
                    }
                }
                (stop, best.0, best.1)
            })
            .collect();
        for (c, (stop, cont, delta)) in row.into_iter().enumerate() {
            let i = it * cells + c;
            if !stop.is_finite() || cont.is_nan() {
                return Err(Error::NonFinite("bellman value"));
            }
            q_stop[i] = stop;
            q_continue[i] = cont;
            best_delta[i] = delta;
            value[i] = stop.min(cont);
        }
    }

    Ok(ValueGrid {
        times,
        beliefs,
        observations,
        value,
        q_stop,
        q_continue,
        best_delta,
        costs: *costs,
        threshold,
    })
}

impl ValueGrid {
    fn index(&self, it: usize, ib: usize, ix: usize) -> usize {
        (it * self.beliefs.len() + ib) * self.observations.len() + ix
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn beliefs(&self) -> &[f64] {
        &self.beliefs
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn costs(&self) -> &CostConfig {
        &self.costs
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn value(&self, it: usize, ib: usize, ix: usize) -> f64 {
        self.value[self.index(it, ib, ix)]
    }

    pub fn q_stop(&self, it: usize, ib: usize, ix: usize) -> f64 {
        self.q_stop[self.index(it, ib, ix)]
    }

    pub fn q_continue(&self, it: usize, ib: usize, ix: usize) -> f64 {
        self.q_continue[self.index(it, ib, ix)]
    }

    /// Strict preference for continuing; ties stop.
    pub fn continues(&self, it: usize, ib: usize, ix: usize) -> bool {
        let i = self.index(it, ib, ix);
        self.q_continue[i] < self.q_stop[i]
    }

    /// Best sensing delay at the cell, whether or not continuing is optimal.
    pub fn best_delta(&self, it: usize, ib: usize, ix: usize) -> Option<f64> {
        let d = self.best_delta[self.index(it, ib, ix)];
        (!d.is_nan()).then_some(d)
    }

    pub fn stop_fraction(&self) -> f64 {
        let n = self.value.len();
        let stops = (0..n).filter(|&i| !(self.q_continue[i] < self.q_stop[i])).count();
        stops as f64 / n as f64
    }

    pub fn nesting_report(&self) -> NestingReport {
        let mut report = NestingReport {
            cells: self.value.len(),
            ..Default::default()
        };
        for v in self.nesting_violations() {
            match v.axis {
                NestingAxis::Time => report.time_violations += 1,
                NestingAxis::Observation => report.observation_violations += 1,
            }
        }
        report
    }

    /// Continuing cells whose predecessor along time or along `x̄` stops.
    pub fn nesting_violations(&self) -> Vec<NestingViolation> {
        let (nt, nb, nx) = (self.times.len(), self.beliefs.len(), self.observations.len());
        let mut out = Vec::new();
        for it in 0..nt {
            for ib in 0..nb {
                for ix in 0..nx {
                    if !self.continues(it, ib, ix) {
                        continue;
                    }
                    let cell = (it, ib, ix);
                    if it > 0 && !self.continues(it - 1, ib, ix) {
                        out.push(NestingViolation { cell, axis: NestingAxis::Time });
                    }
                    if ix > 0 && !self.continues(it, ib, ix - 1) {
                        out.push(NestingViolation { cell, axis: NestingAxis::Observation });
                    }
                }
            }
        }
        out
    }

    /// Smallest and largest grid belief at which the policy continues.
    pub fn continuation_band(&self, it: usize, ix: usize) -> Option<(f64, f64)> {
        let mut band: Option<(f64, f64)> = None;
        for (ib, &mu) in self.beliefs.iter().enumerate() {
            if self.continues(it, ib, ix) {
                band = Some(band.map_or((mu, mu), |(lo, _)| (lo, mu)));
            }
        }
        band
    }

    pub const COLUMNS: [&'static str; 8] = [
        "t",
        "mu",
        "x_bar",
        "value",
        "q_stop",
        "q_continue",
        "continue",
        "best_delta",
    ];

    /// Writes one CSV row per cell.
    pub fn write_table<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::COLUMNS)?;
        for (it, t) in self.times.iter().enumerate() {
            for (ib, mu) in self.beliefs.iter().enumerate() {
                for (ix, x) in self.observations.iter().enumerate() {
                    let i = self.index(it, ib, ix);
                    let delta = self.best_delta(it, ib, ix).map(|d| d.to_string()).unwrap_or_default();
                    w.write_record([
                        t.to_string(),
                        mu.to_string(),
                        x.to_string(),
                        self.value[i].to_string(),
                        self.q_stop[i].to_string(),
                        self.q_continue[i].to_string(),
                        u8::from(self.continues(it, ib, ix)).to_string(),
                        delta,
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    fn nearest_time(&self, t: f64) -> usize {
        let step = self.times.get(1).copied().unwrap_or(1.0);
        ((t / step).round().max(0.0) as usize).min(self.times.len() - 1)
    }
}

/// Decision from the solved grid at the state's nearest time slice, with
/// `q_continue − q_stop` interpolated bilinearly in `(μ, x̄)`.
pub fn policy_action(grid: &ValueGrid, state: &DecisionState, costs: &CostConfig) -> PolicyAction {
    let stop = PolicyAction::Stop(stop_decision(state.mu, costs));
    if !state.survived {
        return stop;
    }
    let it = grid.nearest_time(state.t);
    if it + 1 >= grid.times.len() {
        return stop;
    }
    let (nb, nx) = (grid.beliefs.len(), grid.observations.len());
    let (ib, wb) = locate(state.mu, 0.0, 1.0, nb);
    let (ix, wx) = locate(state.x_last, grid.observations[0], grid.observations[nx - 1], nx);
    let corners = [
        (ib, ix, (1.0 - wb) * (1.0 - wx)),
        (ib, ix + 1, (1.0 - wb) * wx),
        (ib + 1, ix, wb * (1.0 - wx)),
        (ib + 1, ix + 1, wb * wx),
    ];
    let mut diff = 0.0;
    let mut delta: Option<(f64, f64)> = None;
    for &(b, x, w) in &corners {
        let i = grid.index(it, b, x);
        let (qc, qs) = (grid.q_continue[i], grid.q_stop[i]);
        if w > 0.0 {
            if !qc.is_finite() {
                return stop;
            }
            diff += w * (qc - qs);
        }
        if let Some(d) = grid.best_delta(it, b, x) {
            let continuing = qc < qs;
            let better = delta.is_none_or(|(bw, _)| w > bw);
            if continuing && better {
                delta = Some((w, d));
            }
        }
    }
    match delta {
        Some((_, d)) if diff < 0.0 => PolicyAction::Continue(d),
        _ => stop,
    }
}

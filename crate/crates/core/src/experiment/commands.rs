//! Experiment pipelines behind the command-line subcommands.

use std::path::PathBuf;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::output::{opt, write_sidecar, write_table, RunMeta};
use crate::belief::{belief_trajectory, info_gain_distribution, BeliefTrajectory, DecisionState};
use crate::error::{Error, Result};
use crate::policy::{bellman_solve, evaluate_sample, CostConfig, SurvivalReading, ValueGrid};
use crate::process::{Hypothesis, ProcessModel};
use crate::rng::{seeded, stream, Lane};
use crate::simulator::{
    compare_policies, simulate_episodes, BaselinePolicy, EpisodeOutcome, EpisodeSettings, RiskEstimate,
    EPISODE_COLUMNS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Beliefs,
    Tradeoff,
    Simulate,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Beliefs => "beliefs",
            Command::Tradeoff => "tradeoff",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
        }
    }
}

/// Command-line overrides of config values.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub episodes: Option<u64>,
    pub out: Option<PathBuf>,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    seed: u64,
    episodes: u64,
    out: PathBuf,
}

impl Context<'_> {
    fn meta(&self, command: Command) -> RunMeta {
        let episodes = matches!(command, Command::Simulate | Command::Compare).then_some(self.episodes);
        RunMeta::new(command.name(), self.cfg.source(), self.seed, episodes)
    }
}

/// Runs `command` and returns the table files written.
pub fn run(command: Command, cfg: &ExperimentConfig, overrides: &Overrides) -> Result<Vec<PathBuf>> {
    if overrides.episodes.is_some_and(|n| n < 2) {
        return Err(Error::Config("--episodes must be at least 2".into()));
    }
    let ctx = Context {
        cfg,
        seed: overrides.seed.unwrap_or(cfg.run.seed),
        episodes: overrides.episodes.unwrap_or(cfg.run.episodes),
        out: overrides.out.clone().unwrap_or_else(|| cfg.output.dir.clone()),
    };
    match command {
        Command::Solve => cmd_solve(&ctx),
        Command::Beliefs => cmd_beliefs(&ctx),
        Command::Tradeoff => cmd_tradeoff(&ctx),
        Command::Simulate => cmd_simulate(&ctx),
        Command::Compare => cmd_compare(&ctx),
    }
}

fn fmt(v: f64) -> String {
    v.to_string()
}

pub const SOLVE_SUMMARY_COLUMNS: [&str; 2] = ["metric", "value"];
pub const CONTINUATION_COLUMNS: [&str; 4] = ["t", "x_bar", "mu_lower", "mu_upper"];

fn cmd_solve(ctx: &Context<'_>) -> Result<Vec<PathBuf>> {
    let model = ctx.cfg.model()?;
    let costs = ctx.cfg.costs()?;
    let grid = bellman_solve(&model, &costs, &ctx.cfg.grid_spec()?)?;
    let meta = ctx.meta(Command::Solve);
    std::fs::create_dir_all(&ctx.out)?;

    let table_path = ctx.out.join("value_grid.csv");
    grid.write_table(std::fs::File::create(&table_path)?)?;
    let rows = grid.times().len() * grid.beliefs().len() * grid.observations().len();
    write_sidecar(&ctx.out, "value_grid.csv", &ValueGrid::COLUMNS, rows, &meta)?;

    let mut band = Vec::new();
    for (it, t) in grid.times().iter().enumerate() {
        for (ix, x) in grid.observations().iter().enumerate() {
            let b = grid.continuation_band(it, ix);
            band.push(vec![fmt(*t), fmt(*x), opt(b.map(|b| b.0)), opt(b.map(|b| b.1))]);
        }
    }
    let band_path = write_table(&ctx.out, "continuation.csv", &CONTINUATION_COLUMNS, &band, &meta)?;

    let report = grid.nesting_report();
    let summary = vec![
        vec!["cells".into(), report.cells.to_string()],
        vec!["stop_fraction".into(), fmt(grid.stop_fraction())],
        vec!["threshold".into(), fmt(grid.threshold())],
        vec!["time_nesting_violations".into(), report.time_violations.to_string()],
        vec!["observation_nesting_violations".into(), report.observation_violations.to_string()],
    ];
    let summary_path = write_table(&ctx.out, "solve_summary.csv", &SOLVE_SUMMARY_COLUMNS, &summary, &meta)?;
    Ok(vec![table_path, band_path, summary_path])
}

/// Belief paths of two nested periodic partitions and of wait-and-watch on
/// one adverse path.
#[derive(Clone, Debug)]
pub struct BeliefPaths {
    pub times: Vec<f64>,
    pub sparse: BeliefTrajectory,
    pub dense: BeliefTrajectory,
    pub wait_watch: BeliefTrajectory,
}

/// Simulates the adverse path of episode `index` and the three belief paths
/// over `[0, horizon]`.
pub fn belief_paths(
    model: &ProcessModel,
    settings: &EpisodeSettings,
    dense_interval: f64,
    sparse_interval: f64,
    seed: u64,
    index: u64,
) -> Result<BeliefPaths> {
    let EpisodeSettings { x0, dt_sim, horizon } = *settings;
    let path = model.simulate_path(Hypothesis::Adverse, x0, horizon, dt_sim, stream(seed, index, Lane::Path))?;
    let schedule = |interval: f64| -> Vec<f64> {
        let n = (horizon / interval + 1e-9).floor() as usize;
        (1..=n).map(|k| k as f64 * interval).collect()
    };
    let times: Vec<f64> = (0..path.values.len()).map(|i| i as f64 * dt_sim).collect();
    Ok(BeliefPaths {
        sparse: belief_trajectory(model, &path, &schedule(sparse_interval))?,
        dense: belief_trajectory(model, &path, &schedule(dense_interval))?,
        wait_watch: belief_trajectory(model, &path, &[])?,
        times,
    })
}

pub const BELIEF_COLUMNS: [&str; 4] = ["t", "mu_pi1", "mu_pi2", "mu_wait_watch"];

fn cmd_beliefs(ctx: &Context<'_>) -> Result<Vec<PathBuf>> {
    let b = ctx
        .cfg
        .run
        .beliefs
        .ok_or_else(|| Error::Config("beliefs needs a [run.beliefs] section".into()))?;
    let paths = belief_paths(
        &ctx.cfg.model()?,
        &ctx.cfg.settings(),
        b.dense_interval,
        b.sparse_interval,
        ctx.seed,
        0,
    )?;
    let rows: Vec<Vec<String>> = paths
        .times
        .iter()
        .map(|&t| {
            vec![
                fmt(t),
                fmt(paths.sparse.value_at(t)),
                fmt(paths.dense.value_at(t)),
                fmt(paths.wait_watch.value_at(t)),
            ]
        })
        .collect();
    let path = write_table(&ctx.out, "beliefs.csv", &BELIEF_COLUMNS, &rows, &ctx.meta(Command::Beliefs))?;
    Ok(vec![path])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TradeoffRow {
    pub delta: f64,
    /// `E[|I₀(δ)|·1{survived}]`, the gain delivered by the first sample.
    pub mean_abs_gain: f64,
    pub std_err: f64,
    /// `S₀(δ)` from the origin under the adverse hypothesis.
    pub survival: f64,
    pub displayed_objective: f64,
    pub lookahead_objective: f64,
    /// `E|I₀(δ)|` including the jump to 1 on the deadline.
    pub mean_abs_gain_all: f64,
}

pub const TRADEOFF_COLUMNS: [&str; 7] = [
    "delta",
    "mean_abs_gain",
    "std_err",
    "survival",
    "displayed_objective",
    "lookahead_objective",
    "mean_abs_gain_all",
];

/// Surprise and suspense of the first sample as a function of its date. Every
/// `δ` reuses the same random numbers.
pub fn tradeoff_curve(
    model: &ProcessModel,
    costs: &CostConfig,
    x0: f64,
    deltas: &[f64],
    draws: usize,
    seed: u64,
) -> Result<Vec<TradeoffRow>> {
    let state = DecisionState::initial(model, x0);
    deltas
        .par_iter()
        .map(|&delta| {
            let mut rng = seeded(seed);
            let sample = info_gain_distribution(model, &state, delta, draws, &mut rng)?;
            let eval = evaluate_sample(model, &state, costs, &sample, SurvivalReading::Adverse)?;
            let (mean_abs_gain, std_err) = sample.mean_abs_sampled();
            Ok(TradeoffRow {
                delta,
                mean_abs_gain,
                std_err,
                survival: eval.survival,
                displayed_objective: eval.objective,
                lookahead_objective: eval.lookahead,
                mean_abs_gain_all: sample.mean_abs().0,
            })
        })
        .collect()
}

fn cmd_tradeoff(ctx: &Context<'_>) -> Result<Vec<PathBuf>> {
    let t = ctx
        .cfg
        .run
        .tradeoff
        .ok_or_else(|| Error::Config("tradeoff needs a [run.tradeoff] section".into()))?;
    let curve = tradeoff_curve(
        &ctx.cfg.model()?,
        &ctx.cfg.costs()?,
        ctx.cfg.model.x0,
        &t.deltas.values()?,
        t.draws,
        ctx.seed,
    )?;
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|r| {
            [
                r.delta,
                r.mean_abs_gain,
                r.std_err,
                r.survival,
                r.displayed_objective,
                r.lookahead_objective,
                r.mean_abs_gain_all,
            ]
            .iter()
            .map(|v| fmt(*v))
            .collect()
        })
        .collect();
    let path = write_table(&ctx.out, "tradeoff.csv", &TRADEOFF_COLUMNS, &rows, &ctx.meta(Command::Tradeoff))?;
    Ok(vec![path])
}

pub const RISK_COLUMNS: [&str; 14] = [
    "policy",
    "sweep_parameter",
    "sweep_value",
    "mean",
    "std_error",
    "n_episodes",
    "false_negative",
    "false_positive",
    "delay",
    "deadline",
    "sampling",
    "deadline_rate",
    "mean_stop_time",
    "mean_samples",
];

pub const COMPARISON_COLUMNS: [&str; 6] = [
    "sweep_value",
    "first",
    "second",
    "mean_difference",
    "std_error",
    "z",
];

fn risk_row(name: &str, sweep: (&str, Option<f64>), outcomes: &[EpisodeOutcome]) -> Vec<String> {
    let r = RiskEstimate::from_outcomes(outcomes);
    let n = outcomes.len() as f64;
    let missed = outcomes.iter().filter(|o| o.estimate.is_none()).count() as f64 / n;
    let stop = outcomes.iter().map(|o| o.stop_time).sum::<f64>() / n;
    let samples = outcomes.iter().map(|o| o.n_samples as f64).sum::<f64>() / n;
    let mut row = vec![
        name.to_string(),
        if sweep.1.is_some() { sweep.0.to_string() } else { String::new() },
        opt(sweep.1),
        fmt(r.mean),
        fmt(r.std_error),
        r.n_episodes.to_string(),
    ];
    row.extend(r.components.values().iter().map(|v| fmt(*v)));
    row.extend([fmt(missed), fmt(stop), fmt(samples)]);
    row
}

fn episode_rows(name: &str, sweep: Option<f64>, outcomes: &[EpisodeOutcome]) -> Vec<Vec<String>> {
    outcomes
        .iter()
        .map(|o| {
            let mut row = vec![
                name.to_string(),
                opt(sweep),
                o.index.to_string(),
                o.truth.bit().to_string(),
                opt(o.tau),
                fmt(o.stop_time),
                o.estimate.map(|e| e.bit().to_string()).unwrap_or_default(),
                fmt(o.final_belief),
                o.n_samples.to_string(),
                fmt(o.loss),
            ];
            row.extend(o.components.values().iter().map(|v| fmt(*v)));
            row
        })
        .collect()
}

fn episode_columns() -> Vec<&'static str> {
    let mut c = vec!["policy", "sweep_value"];
    c.extend(EPISODE_COLUMNS);
    c
}

fn policies_for(ctx: &Context<'_>, costs: &CostConfig) -> Result<Vec<(String, BaselinePolicy)>> {
    ctx.cfg
        .policies
        .iter()
        .map(|p| Ok((p.name().to_string(), ctx.cfg.baseline(p, costs)?)))
        .collect()
}

fn sweep_name(cfg: &ExperimentConfig) -> &'static str {
    cfg.sweep.as_ref().map_or("", |s| s.parameter.name())
}

fn cmd_simulate(ctx: &Context<'_>) -> Result<Vec<PathBuf>> {
    if ctx.cfg.policies.is_empty() {
        return Err(Error::Config("simulate needs at least one [[policy]]".into()));
    }
    let model = ctx.cfg.model()?;
    let settings = ctx.cfg.settings();
    let mut risk = Vec::new();
    let mut episodes = Vec::new();
    for (value, costs) in ctx.cfg.cost_points()? {
        for (name, policy) in policies_for(ctx, &costs)? {
            let outcomes = simulate_episodes(&model, &policy, &costs, &settings, ctx.episodes, ctx.seed)?;
            risk.push(risk_row(&name, (sweep_name(ctx.cfg), value), &outcomes));
            episodes.extend(episode_rows(&name, value, &outcomes));
        }
    }
    let meta = ctx.meta(Command::Simulate);
    Ok(vec![
        write_table(&ctx.out, "risk.csv", &RISK_COLUMNS, &risk, &meta)?,
        write_table(&ctx.out, "episodes.csv", &episode_columns(), &episodes, &meta)?,
    ])
}

fn cmd_compare(ctx: &Context<'_>) -> Result<Vec<PathBuf>> {
    if ctx.cfg.policies.len() < 2 {
        return Err(Error::Config("compare needs at least two [[policy]] entries".into()));
    }
    let model = ctx.cfg.model()?;
    let settings = ctx.cfg.settings();
    let mut risk = Vec::new();
    let mut pairs = Vec::new();
    for (value, costs) in ctx.cfg.cost_points()? {
        let policies = policies_for(ctx, &costs)?;
        let cmp = compare_policies(&model, &costs, &policies, &settings, ctx.episodes, ctx.seed)?;
        for (name, outcomes) in cmp.names.iter().zip(&cmp.outcomes) {
            risk.push(risk_row(name, (sweep_name(ctx.cfg), value), outcomes));
        }
        for d in &cmp.differences {
            let z = if d.std_error > 0.0 { d.mean / d.std_error } else { 0.0 };
            pairs.push(vec![
                opt(value),
                cmp.names[d.first].clone(),
                cmp.names[d.second].clone(),
                fmt(d.mean),
                fmt(d.std_error),
                fmt(z),
            ]);
        }
    }
    let meta = ctx.meta(Command::Compare);
    Ok(vec![
        write_table(&ctx.out, "risk.csv", &RISK_COLUMNS, &risk, &meta)?,
        write_table(&ctx.out, "comparison.csv", &COMPARISON_COLUMNS, &pairs, &meta)?,
    ])
}

//! Strict TOML experiment configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::math::{geometric_grid, linear_grid};
use crate::policy::{bellman_solve, CostConfig, GridSpec, ObjectiveKind, SurvivalReading};
use crate::process::{DeadlineSpec, KernelSpec, ProcessModel};
use crate::simulator::{BaselinePolicy, EpisodeSettings, RendezvousRule};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub costs: CostSection,
    #[serde(default, rename = "policy")]
    pub policies: Vec<PolicySection>,
    pub run: RunSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    pub output: OutputSection,
    #[serde(skip)]
    source: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub prior: f64,
    pub x0: f64,
    pub kernel0: KernelSection,
    pub kernel1: KernelSection,
    pub deadline: DeadlineSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSection {
    Gaussian { drift: f64, volatility: f64 },
    Chain { matrix: Vec<Vec<f64>> },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeadlineSection {
    Barrier { level: f64 },
    Absorb { state: usize },
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub c1: f64,
    pub c0: f64,
    pub cd: f64,
    pub cr: f64,
    pub cs: f64,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveChoice {
    Lookahead,
    Displayed,
    DisplayedMarginal,
}

impl From<ObjectiveChoice> for ObjectiveKind {
    fn from(c: ObjectiveChoice) -> Self {
        match c {
            ObjectiveChoice::Lookahead => ObjectiveKind::Lookahead,
            ObjectiveChoice::Displayed => ObjectiveKind::Displayed(SurvivalReading::Adverse),
            ObjectiveChoice::DisplayedMarginal => ObjectiveKind::Displayed(SurvivalReading::Marginal),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySection {
    Periodic {
        name: String,
        interval: f64,
        lower: f64,
        upper: f64,
        /// Defaults to the run horizon.
        decision_time: Option<f64>,
    },
    WaitAndWatch {
        name: String,
        decision_time: f64,
    },
    /// Uses the value grid solved from `[run.grid]`.
    RendezvousGrid { name: String },
    RendezvousDirect {
        name: String,
        deltas: AxisSection,
        draws: usize,
        objective: ObjectiveChoice,
    },
}

impl PolicySection {
    pub fn name(&self) -> &str {
        match self {
            PolicySection::Periodic { name, .. }
            | PolicySection::WaitAndWatch { name, .. }
            | PolicySection::RendezvousGrid { name }
            | PolicySection::RendezvousDirect { name, .. } => name,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Geometric,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl AxisSection {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 || !(self.min > 0.0) || !(self.max >= self.min) {
            return Err(Error::Config(format!(
                "axis needs points >= 1 and 0 < min <= max, got {self:?}"
            )));
        }
        Ok(match self.spacing {
            Spacing::Linear => linear_grid(self.min, self.max, self.points),
            Spacing::Geometric => geometric_grid(self.min, self.max, self.points),
        })
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub time_step: f64,
    pub belief_points: usize,
    pub obs_min: f64,
    pub obs_max: f64,
    pub obs_points: usize,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeoffSection {
    pub deltas: AxisSection,
    pub draws: usize,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefsSection {
    /// Sensing interval of the denser policy.
    pub dense_interval: f64,
    /// Must be a whole multiple of `dense_interval` so the partitions nest.
    pub sparse_interval: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub episodes: u64,
    pub dt_sim: f64,
    pub horizon: f64,
    pub grid: Option<GridSection>,
    pub tradeoff: Option<TradeoffSection>,
    pub beliefs: Option<BeliefsSection>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    C1,
    C0,
    Cd,
    Cr,
    Cs,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::C1 => "c1",
            SweepParameter::C0 => "c0",
            SweepParameter::Cd => "cd",
            SweepParameter::Cr => "cr",
            SweepParameter::Cs => "cs",
        }
    }

    pub fn apply(self, costs: &CostConfig, value: f64) -> CostConfig {
        let mut c = *costs;
        match self {
            SweepParameter::C1 => c.c1 = value,
            SweepParameter::C0 => c.c0 = value,
            SweepParameter::Cd => c.cd = value,
            SweepParameter::Cr => c.cr = value,
            SweepParameter::Cs => c.cs = value,
        }
        c
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

/// Line of the `nth` occurrence of `key` inside `[section]` (1-based), found
/// by a plain scan.
fn line_of(source: &str, section: &str, key: &str, nth: usize) -> Option<usize> {
    let mut current = String::new();
    let mut seen = 0;
    for (i, line) in source.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(header) = trimmed.strip_prefix('[') {
            current = header.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        let Some((k, _)) = trimmed.split_once('=') else {
            continue;
        };
        if current == section && k.trim() == key {
            if seen == nth {
                return Some(i + 1);
            }
            seen += 1;
        }
    }
    None
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses and validates a configuration. Nothing is computed on failure.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.source = text.to_string();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Raw text the configuration was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    fn fail(&self, section: &str, key: &str, message: impl std::fmt::Display) -> Error {
        self.fail_nth(section, key, 0, message)
    }

    fn fail_nth(&self, section: &str, key: &str, nth: usize, message: impl std::fmt::Display) -> Error {
        match line_of(&self.source, section, key, nth) {
            Some(line) => Error::Config(format!("line {line}: {section}.{key}: {message}")),
            None => Error::Config(format!("{section}.{key}: {message}")),
        }
    }

    fn validate(&self) -> Result<()> {
        self.model().map_err(|e| self.fail("model", "prior", e))?;
        let costs = self.costs().map_err(|e| self.fail("costs", "c1", e))?;
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(self.fail("sweep", "values", "must not be empty"));
            }
            for &v in &sweep.values {
                sweep
                    .parameter
                    .apply(&costs, v)
                    .validate()
                    .map_err(|e| self.fail("sweep", "values", e))?;
            }
        }
        let run = &self.run;
        if !(run.dt_sim > 0.0) {
            return Err(self.fail("run", "dt_sim", "must be positive"));
        }
        if !(run.horizon > 0.0 && run.horizon.is_finite()) {
            return Err(self.fail("run", "horizon", "must be positive and finite"));
        }
        if run.episodes < 2 {
            return Err(self.fail("run", "episodes", "need at least 2"));
        }
        if let Some(grid) = &run.grid {
            let ratio = grid.time_step / run.dt_sim;
            if (ratio - ratio.round()).abs() > 1e-9 || ratio < 0.5 {
                return Err(self.fail("run.grid", "time_step", "must be a whole multiple of run.dt_sim"));
            }
        }
        if let Some(t) = &run.tradeoff {
            t.deltas.values().map_err(|e| self.fail("run.tradeoff", "deltas", e))?;
            if t.draws == 0 {
                return Err(self.fail("run.tradeoff", "draws", "need at least one draw"));
            }
        }
        if let Some(b) = &run.beliefs {
            if !(b.dense_interval > 0.0) {
                return Err(self.fail("run.beliefs", "dense_interval", "must be positive"));
            }
            let steps = b.dense_interval / run.dt_sim;
            if (steps - steps.round()).abs() > 1e-9 || steps < 0.5 {
                return Err(self.fail("run.beliefs", "dense_interval", "must be a whole multiple of run.dt_sim"));
            }
            let ratio = b.sparse_interval / b.dense_interval;
            if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
                return Err(self.fail(
                    "run.beliefs",
                    "sparse_interval",
                    "must be a whole multiple of dense_interval",
                ));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, p) in self.policies.iter().enumerate() {
            let name = p.name();
            if !names.insert(name) {
                return Err(self.fail_nth("policy", "name", i, format!("duplicate policy name {name:?}")));
            }
            let allowed = |c: char| c.is_ascii_alphanumeric() || "_-.".contains(c);
            if name.is_empty() || !name.chars().all(allowed) {
                return Err(self.fail_nth("policy", "name", i, format!("{name:?} must be non-empty [A-Za-z0-9_.-]")));
            }
            if matches!(p, PolicySection::RendezvousGrid { .. }) {
                if run.grid.is_none() {
                    return Err(self.fail_nth("policy", "kind", i, "rendezvous_grid policies need a [run.grid] section"));
                }
            } else {
                self.baseline(p, &costs).map_err(|e| self.fail_nth("policy", "kind", i, e))?;
            }
        }
        if run.grid.is_some() {
            let spec = self.grid_spec()?;
            spec.check(&self.model()?).map_err(|e| self.fail("run.grid", "time_step", e))?;
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ProcessModel> {
        let kernel = |k: &KernelSection| match k {
            KernelSection::Gaussian { drift, volatility } => KernelSpec::gaussian(*drift, *volatility),
            KernelSection::Chain { matrix } => KernelSpec::chain(matrix.clone()),
        };
        let deadline = match self.model.deadline {
            DeadlineSection::Barrier { level } => DeadlineSpec::Barrier { level },
            DeadlineSection::Absorb { state } => DeadlineSpec::ChainAbsorb { state },
        };
        ProcessModel::new(
            self.model.prior,
            kernel(&self.model.kernel0)?,
            kernel(&self.model.kernel1)?,
            deadline,
        )
    }

    pub fn costs(&self) -> Result<CostConfig> {
        let c = self.costs;
        CostConfig::new(c.c1, c.c0, c.cd, c.cr, c.cs)
    }

    pub fn settings(&self) -> EpisodeSettings {
        EpisodeSettings {
            x0: self.model.x0,
            dt_sim: self.run.dt_sim,
            horizon: self.run.horizon,
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = self
            .run
            .grid
            .ok_or_else(|| Error::Config("missing [run.grid] section".into()))?;
        Ok(GridSpec {
            horizon: self.run.horizon,
            time_step: g.time_step,
            belief_points: g.belief_points,
            obs_min: g.obs_min,
            obs_max: g.obs_max,
            obs_points: g.obs_points,
        })
    }

    /// Builds a policy, solving the value grid for `costs` where needed.
    pub fn baseline(&self, section: &PolicySection, costs: &CostConfig) -> Result<BaselinePolicy> {
        let policy = match section {
            PolicySection::Periodic {
                interval,
                lower,
                upper,
                decision_time,
                ..
            } => BaselinePolicy::periodic(*interval, *lower, *upper, decision_time.unwrap_or(self.run.horizon))?,
            PolicySection::WaitAndWatch { decision_time, .. } => BaselinePolicy::WaitAndWatch {
                decision_time: *decision_time,
            },
            PolicySection::RendezvousDirect {
                deltas, draws, objective, ..
            } => BaselinePolicy::Rendezvous(RendezvousRule::Direct {
                delta_grid: deltas.values()?,
                n_draws: *draws,
                kind: (*objective).into(),
            }),
            PolicySection::RendezvousGrid { .. } => {
                let grid = bellman_solve(&self.model()?, costs, &self.grid_spec()?)?;
                BaselinePolicy::Rendezvous(RendezvousRule::Grid(Arc::new(grid)))
            }
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Cost configurations to run: one per sweep value, or the base costs.
    pub fn cost_points(&self) -> Result<Vec<(Option<f64>, CostConfig)>> {
        let base = self.costs()?;
        Ok(match &self.sweep {
            Some(s) => s.values.iter().map(|&v| (Some(v), s.parameter.apply(&base, v))).collect(),
            None => vec![(None, base)],
        })
    }
}

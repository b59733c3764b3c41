//! Config-driven experiment pipelines that write CSV tables.
//!
//! Every table gets a `<name>.meta.json` sidecar with the tool version, the
//! SHA-256 of the config text and the seed. Outputs are a pure function of the
//! config and the seed.

mod commands;
mod config;
mod output;

pub use commands::{
    belief_paths, run, tradeoff_curve, BeliefPaths, Command, Overrides, TradeoffRow, BELIEF_COLUMNS,
    COMPARISON_COLUMNS, CONTINUATION_COLUMNS, RISK_COLUMNS, SOLVE_SUMMARY_COLUMNS, TRADEOFF_COLUMNS,
};
pub use config::{
    AxisSection, BeliefsSection, CostSection, DeadlineSection, ExperimentConfig, GridSection,
    KernelSection, ModelSection, ObjectiveChoice, OutputSection, PolicySection, RunSection, Spacing,
    SweepParameter, SweepSection, TradeoffSection,
};
pub use output::{write_table, RunMeta};

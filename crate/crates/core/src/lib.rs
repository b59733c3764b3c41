//! Timely Bayesian decision-making with costly sensing under a
//! context-dependent deadline.
//!
//! - [`process`]: hypothesis-indexed Markov models, deadline simulation and
//!   survival analytics
//! - [`belief`]: posterior belief, information-gain distribution and belief
//!   trajectories
//! - [`policy`]: threshold rule, rendezvous objectives and the grid Bellman
//!   solver
//! - [`simulator`]: Monte Carlo episodes, risk estimates and policy comparison
//! - [`experiment`]: configuration files, experiment pipelines and table output

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod error;
pub mod experiment;
pub mod math;
pub mod policy;
pub mod process;
pub mod rng;
pub mod simulator;

pub use belief::{
    belief_trajectory, expected_next_belief, info_gain_distribution, posterior_belief,
    tail_probability, BeliefTrajectory, DecisionState, InfoGainSample, Partition,
};
pub use error::{Error, Result};
pub use process::{DeadlineSpec, Hypothesis, KernelSpec, ProcessModel, SimulatedPath};

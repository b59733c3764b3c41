//! Grid Bellman solution: where the optimal policy keeps sensing, and what it
//! does from a given state.

use rendezvous::policy::{bellman_solve, policy_action, CostConfig, GridSpec};
use rendezvous::{DecisionState, ProcessModel};

fn main() -> rendezvous::Result<()> {
    let model = ProcessModel::brownian(0.5, 0.0, 1.0, 1.0, 5.0)?;
    let costs = CostConfig::new(10.0, 10.0, 0.1, 20.0, 0.2)?;
    let spec = GridSpec {
        horizon: 8.0,
        time_step: 0.5,
        belief_points: 41,
        obs_min: -4.0,
        obs_max: 4.8,
        obs_points: 23,
    };
    let grid = bellman_solve(&model, &costs, &spec)?;

    println!("stopping fraction {:.3}", grid.stop_fraction());
    println!("continuation band at t = 0:");
    for ix in (0..grid.observations().len()).step_by(2) {
        match grid.continuation_band(0, ix) {
            Some((lo, hi)) => println!("  x {:>5.2}: mu in [{lo:.3}, {hi:.3}]", grid.observations()[ix]),
            None => println!("  x {:>5.2}: stop", grid.observations()[ix]),
        }
    }

    let state = DecisionState::initial(&model, 0.0);
    println!("from the prior at x = 0: {:?}", policy_action(&grid, &state, &costs));
    let near = DecisionState { x_last: 4.6, ..state };
    println!("close to the barrier:    {:?}", policy_action(&grid, &near, &costs));

    let report = grid.nesting_report();
    println!(
        "nesting violations: {} in time, {} in x over {} cells",
        report.time_violations, report.observation_violations, report.cells
    );
    Ok(())
}

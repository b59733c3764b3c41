//! Risk of the grid rendezvous policy against periodic sensing and
//! wait-and-watch, on common random numbers.

use std::sync::Arc;

use rendezvous::policy::{bellman_solve, CostConfig, GridSpec};
use rendezvous::simulator::{compare_policies, BaselinePolicy, EpisodeSettings, RendezvousRule};
use rendezvous::ProcessModel;

fn main() -> rendezvous::Result<()> {
    let model = ProcessModel::brownian(0.5, 0.0, 1.0, 1.0, 5.0)?;
    let costs = CostConfig::new(10.0, 10.0, 0.1, 20.0, 0.2)?;
    let settings = EpisodeSettings {
        x0: 0.0,
        dt_sim: 0.1,
        horizon: 8.0,
    };
    let grid = bellman_solve(
        &model,
        &costs,
        &GridSpec {
            horizon: 8.0,
            time_step: 0.4,
            belief_points: 41,
            obs_min: -4.0,
            obs_max: 4.8,
            obs_points: 23,
        },
    )?;

    let policies = vec![
        ("rendezvous".to_string(), BaselinePolicy::Rendezvous(RendezvousRule::Grid(Arc::new(grid)))),
        ("periodic_0.4".to_string(), BaselinePolicy::periodic(0.4, 0.1, 0.9, 8.0)?),
        ("periodic_1.6".to_string(), BaselinePolicy::periodic(1.6, 0.1, 0.9, 8.0)?),
        ("wait_and_watch".to_string(), BaselinePolicy::WaitAndWatch { decision_time: 2.0 }),
    ];
    let cmp = compare_policies(&model, &costs, &policies, &settings, 2_000, 7)?;

    println!("{:<16} {:>8} {:>8} {:>8} {:>8}", "policy", "risk", "se", "deadline", "samples");
    for (name, risk) in cmp.names.iter().zip(&cmp.risks) {
        println!(
            "{name:<16} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            risk.mean, risk.std_error, risk.components.deadline, risk.components.sampling
        );
    }
    for j in 1..policies.len() {
        let d = cmp.difference(0, j).expect("pair");
        println!("rendezvous - {:<14} {:+.3} ± {:.3}", cmp.names[j], d.mean, d.std_error);
    }
    Ok(())
}

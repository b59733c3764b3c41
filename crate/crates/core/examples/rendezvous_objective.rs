//! Choosing the next sensing date from a single state with the one-step
//! lookahead and with the displayed objective.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rendezvous::math::geometric_grid;
use rendezvous::policy::{optimize_rendezvous, CostConfig, ObjectiveKind, SurvivalReading};
use rendezvous::{DecisionState, ProcessModel};

fn main() -> rendezvous::Result<()> {
    let model = ProcessModel::brownian(0.5, 0.0, 1.0, 1.0, 5.0)?;
    let costs = CostConfig::new(10.0, 10.0, 0.1, 20.0, 0.2)?;
    let deltas = geometric_grid(0.1, 8.0, 24);

    for (mu, x) in [(0.5, 0.0), (0.5, 3.5), (0.8, 0.0), (0.2, 4.0)] {
        let state = DecisionState {
            mu,
            x_last: x,
            ..DecisionState::initial(&model, x)
        };
        let mut line = format!("mu {mu:.1} x {x:.1}:");
        for (name, kind) in [
            ("lookahead", ObjectiveKind::Lookahead),
            ("displayed", ObjectiveKind::Displayed(SurvivalReading::Adverse)),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let best = optimize_rendezvous(&model, &state, &costs, &deltas, kind, 2_000, &mut rng)?;
            line += &format!(
                "  {name} delta {:.2} (S {:.3}, lookahead {:.3})",
                best.delta, best.survival, best.lookahead
            );
        }
        println!("{line}  stop now {:.3}", costs.stop_cost(mu));
    }
    Ok(())
}

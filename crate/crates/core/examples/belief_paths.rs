//! One adverse path watched by a dense sensor, a sparse sensor and one that
//! never samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rendezvous::{belief_trajectory, Hypothesis, ProcessModel};

fn main() -> rendezvous::Result<()> {
    let model = ProcessModel::brownian(0.5, 0.0, 1.0, 1.0, 8.0)?;
    let horizon = 12.0;
    let path = model.simulate_path(Hypothesis::Adverse, 0.0, horizon, 0.05, ChaCha8Rng::seed_from_u64(3))?;

    let every = |interval: f64| -> Vec<f64> {
        (1..).map(|k| k as f64 * interval).take_while(|t| *t <= horizon).collect()
    };
    let dense = belief_trajectory(&model, &path, &every(0.5))?;
    let sparse = belief_trajectory(&model, &path, &every(3.0))?;
    let blind = belief_trajectory(&model, &path, &[])?;

    println!("deadline at {:?}", path.hit_time);
    println!("{:>5} {:>8} {:>8} {:>8}", "t", "dense", "sparse", "none");
    for t in (0..=24).map(|k| k as f64 * 0.5) {
        println!(
            "{t:>5.1} {:>8.4} {:>8.4} {:>8.4}",
            dense.value_at(t),
            sparse.value_at(t),
            blind.value_at(t)
        );
    }
    for (name, tr) in [("dense", &dense), ("sparse", &sparse)] {
        println!(
            "{name}: {} jumps, first reaches 0.9 at {:?}",
            tr.count_jumps(),
            tr.first_time_at_or_above(0.9)
        );
    }
    Ok(())
}

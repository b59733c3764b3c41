//! Deadline survival for a drifted Brownian motion with a level barrier: the
//! closed forms against a simulated check.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rendezvous::{Hypothesis, ProcessModel};

fn main() -> rendezvous::Result<()> {
    // benign: driftless; adverse: drifts up towards the barrier at 3
    let model = ProcessModel::brownian(0.5, 0.0, 0.5, 1.0, 3.0)?;

    println!("{:>6} {:>10} {:>10}", "dt", "S(dt)", "simulated");
    for dt in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let exact = model.survival_from_sample(0.0, dt);
        let n = 2000;
        let alive = (0..n)
            .filter(|&i| {
                let rng = ChaCha8Rng::seed_from_u64(i);
                model
                    .simulate_path(Hypothesis::Adverse, 0.0, dt, dt / 50.0, rng)
                    .map(|p| p.hit_time.is_none())
                    .unwrap_or(false)
            })
            .count();
        println!("{dt:>6} {exact:>10.4} {:>10.4}", alive as f64 / n as f64);
    }

    // pinned at both ends, the path can still have touched the barrier
    println!();
    for (a, b) in [(0.0, 0.0), (2.0, 2.5), (2.9, 2.9)] {
        println!(
            "no crossing between {a} and {b} over 1.0: {:.4}",
            model.bridge_survival(a, b, 1.0)?
        );
    }
    Ok(())
}

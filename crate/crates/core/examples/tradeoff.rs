//! Surprise against suspense: the information a first sample delivers grows
//! with its date until the deadline starts to swallow it.

use rendezvous::experiment::tradeoff_curve;
use rendezvous::math::geometric_grid;
use rendezvous::policy::CostConfig;
use rendezvous::ProcessModel;

fn main() -> rendezvous::Result<()> {
    let model = ProcessModel::brownian(0.5, -0.1, 0.0, 1.0, 30.0)?;
    let costs = CostConfig::new(10.0, 10.0, 1e-4, 20.0, 0.2)?;
    let deltas = geometric_grid(1.0, 20_000.0, 24);
    let rows = tradeoff_curve(&model, &costs, 0.0, &deltas, 5_000, 4)?;

    println!("{:>10} {:>10} {:>10} {:>10}", "delta", "E|I|", "std_err", "survival");
    for r in &rows {
        println!(
            "{:>10.1} {:>10.4} {:>10.4} {:>10.4}",
            r.delta, r.mean_abs_gain, r.std_err, r.survival
        );
    }
    let peak = rows
        .iter()
        .max_by(|a, b| a.mean_abs_gain.total_cmp(&b.mean_abs_gain))
        .expect("non-empty curve");
    println!("peak at delta {:.0}, survival {:.2}", peak.delta, peak.survival);
    Ok(())
}

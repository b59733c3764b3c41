//! Posterior belief for a discrete chain whose adverse version can fall into
//! an absorbing state.

use rendezvous::{posterior_belief, DeadlineSpec, KernelSpec, Partition, ProcessModel};

fn main() -> rendezvous::Result<()> {
    let benign = vec![
        vec![0.6, 0.3, 0.1],
        vec![0.3, 0.6, 0.1],
        vec![0.0, 0.0, 1.0],
    ];
    let adverse = vec![
        vec![0.4, 0.4, 0.2],
        vec![0.2, 0.4, 0.4],
        vec![0.0, 0.0, 1.0],
    ];
    let model = ProcessModel::new(
        0.5,
        KernelSpec::chain(benign)?,
        KernelSpec::chain(adverse)?,
        DeadlineSpec::ChainAbsorb { state: 2 },
    )?;

    let mut partition = Partition::new(0.0);
    println!("t  sample  belief");
    println!("0  -       {:.4}", posterior_belief(&model, &partition, 0.0, true)?);
    for (t, x) in [(1.0, 1.0), (2.0, 1.0), (4.0, 0.0), (5.0, 1.0)] {
        // between samples the belief only drifts down: the chain is still alive
        let before = posterior_belief(&model, &partition, t, true)?;
        partition.push(t, x)?;
        let after = posterior_belief(&model, &partition, t, true)?;
        println!("{t}  {x}       {before:.4} -> {after:.4}");
    }
    println!(
        "absorbed at t=6 -> {}",
        posterior_belief(&model, &partition, 6.0, false)?
    );
    Ok(())
}

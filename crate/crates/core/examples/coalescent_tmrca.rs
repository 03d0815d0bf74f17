//! Mean time to the most recent common ancestor for Kingman and Beta coalescents.

use lambda_flows::coalescent::{simulate_coalescent, tmrca_sample, Horizon};
use lambda_flows::measure::LambdaMeasure;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 20;
    let kingman = LambdaMeasure::dirac0(1.0)?;
    let exact: f64 = 2.0 * (1.0 - 1.0 / n as f64);
    for (name, m) in [("kingman", kingman.clone()), ("beta(1.5)", LambdaMeasure::beta(1.5)?), ("uniform", LambdaMeasure::lebesgue())] {
        let xs = tmrca_sample(&m, n, 100_000, 42)?;
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        println!("{name:10} n={n} mean TMRCA {mean:.4}");
    }
    println!("kingman exact 2(1 - 1/n) = {exact:.4}");

    let path = simulate_coalescent(&LambdaMeasure::beta(1.5)?, 8, Horizon::Absorption, 7)?;
    for t in [0.0, 0.1, 0.5, 1.0] {
        println!("t={t:<4} {}", path.partition_at(t)?);
    }
    Ok(())
}

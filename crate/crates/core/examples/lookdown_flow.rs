//! Samples a small lookdown graph, prints its events and the flow of partitions.

use lambda_flows::lookdown::{evolve, flow_partition, sample_graph};
use lambda_flows::measure::LambdaMeasure;
use lambda_flows::partition::coag;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 6;
    let g = sample_graph(&LambdaMeasure::dirac(0.5, 1.0)?, n, (0.0, 2.0), 11)?;
    for e in g.events() {
        println!("t={:.4} levels {:?}", e.time, e.levels_usize());
    }
    let (r, s, t) = (0.0, 1.0, 2.0);
    let whole = flow_partition(&g, r, t)?;
    let split = coag(&flow_partition(&g, s, t)?, &flow_partition(&g, r, s)?)?;
    println!("Π(0,2] = {whole}");
    println!("Π(1,2] ∘ Π(0,1] = {split}");
    let types: Vec<usize> = (1..=n).collect();
    println!("types at t=2: {:?}", evolve(&g, &types, t)?);
    Ok(())
}

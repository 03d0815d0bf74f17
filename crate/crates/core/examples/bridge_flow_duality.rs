//! Builds a flow of bridges from a Poisson cloud of jumps and samples the
//! partition it induces on i.i.d. uniforms.

use lambda_flows::bridge::{partition_from_bridge, simulate_bridge_flow};
use lambda_flows::measure::LambdaMeasure;
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = LambdaMeasure::dirac(0.5, 1.0)?;
    let flow = simulate_bridge_flow(&m, (0.0, 3.0), 0.0, 5)?;
    println!("{} jump events in (0, 3]", flow.events.len());
    let f = flow.bridge(0.0, 3.0)?;
    println!("B(0,3]: {} jumps, drift {:.3e}", f.jumps().len(), f.drift());

    let mut rng = lambda_flows::rng::stream(5, 99, 0);
    let v: Vec<f64> = (0..8).map(|_| rng.random()).collect();
    println!("partition of 8 uniforms: {}", partition_from_bridge(&f, &v));

    let beta = LambdaMeasure::beta(0.5)?;
    let truncated = simulate_bridge_flow(&beta, (0.0, 1.0), 1e-3, 5)?;
    println!("beta(0.5), ε=1e-3: {} events, dropped mass rate {:?}", truncated.events.len(), truncated.dropped_mass.value());
    Ok(())
}

//! Compares mean block counts with the speed of coming down from infinity.

use lambda_flows::measure::LambdaMeasure;
use lambda_flows::validate::{speed_test, Thresholds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = LambdaMeasure::beta(1.5)?;
    for t in [1e-3, 1e-2, 0.1, 1.0] {
        println!("v({t}) = {:.3}", m.cdi_speed(t)?);
    }
    let r = speed_test(&m, 2000, &[0.1, 0.3, 1.0], 50, 1, &Thresholds::default())?;
    println!("{}", serde_json::to_string_pretty(&r.details)?);
    println!("verdict {:?}", r.verdict);
    Ok(())
}

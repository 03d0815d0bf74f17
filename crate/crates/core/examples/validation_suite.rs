//! Runs a reduced default validation suite and the negative controls.

use lambda_flows::validate::{default_suite, negative_controls, run_suite, Thresholds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let th = Thresholds::default();
    for (name, suite) in [("default", default_suite()), ("negative controls", negative_controls())] {
        println!("{name}:");
        for r in run_suite(&suite, 2024, &th)? {
            println!("  {:32} {:?}  statistic {:.4}", r.id, r.verdict, r.statistic);
        }
    }
    Ok(())
}

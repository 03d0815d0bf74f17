//! Runs a Fleming-Viot path to fixation and extracts its ordered Eves.

use lambda_flows::flemingviot::{extract_eves, simulate_fv, FvHorizon};
use lambda_flows::measure::LambdaMeasure;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (name, m) in [("kingman", LambdaMeasure::dirac0(1.0)?), ("beta(1.5)", LambdaMeasure::beta(1.5)?)] {
        let run = simulate_fv(&m, 100, FvHorizon::UntilFixation { initial: 1.0, max: 1e4 }, 3, None)?;
        let mid = run.state_at(0.1 * run.window().1)?;
        println!("{name}: {} atoms, dust {:.3} at t={:.3}", mid.atoms.len(), mid.dust, 0.1 * run.window().1);
        let eves = extract_eves(&run, 0.99)?;
        println!("  {:?}, resolved up to rank {}", eves.regime_case, eves.resolved_upto);
        for e in eves.ordered_eves.iter().take(4) {
            println!("  rank {} at {:.4} (level {}), evidence {:?}", e.rank, e.location, e.level, e.evidence);
        }
    }
    Ok(())
}

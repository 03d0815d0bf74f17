//! Classifies a handful of measures and prints the integrals behind each verdict.

use lambda_flows::measure::LambdaMeasure;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let measures = [
        ("Kingman δ0", LambdaMeasure::dirac0(1.0)?),
        ("δ_{1/2}", LambdaMeasure::dirac(0.5, 1.0)?),
        ("Beta(0.5, 1.5)", LambdaMeasure::beta(0.5)?),
        ("uniform (Bolthausen-Sznitman)", LambdaMeasure::lebesgue()),
        ("Beta(1.5, 0.5)", LambdaMeasure::beta(1.5)?),
    ];
    for (name, m) in &measures {
        let c = m.classify()?;
        let r = &c.integral_report;
        println!(
            "{name:32} {:18} ∫ν={:?}  ∫uν={:?}  ∫du/Ψ={:?}",
            c.regime.to_string(),
            r.nu_mass.value(),
            r.u_nu_mass.value(),
            r.inverse_psi_tail.value()
        );
    }
    Ok(())
}

//! Simulates the bundled ten-agent scenario and prints its verification summary.
//!
//! ```text
//! cargo run --release -p cdspec-core --example paper_analog
//! ```

use std::time::Instant;

use cdspec::dynamics::simulate;
use cdspec::scenario::load_scenario;
use cdspec::verify::{verify, VerifyRequest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/paper_analog_10agents.json");
    let scenario = load_scenario(path)?;
    let sim = scenario.sim();

    let start = Instant::now();
    let trace = simulate(&scenario, sim.h, sim.tf)?;
    println!("simulated {} samples in {:.2?}", trace.len(), start.elapsed());

    let start = Instant::now();
    let report = verify(&scenario, &trace, &VerifyRequest::all_psi())?;
    println!("verified in {:.2?}", start.elapsed());

    let m = &report.margins;
    println!("D_B = {:.4}  D_S = {:.4}  delta_max = {:.4}  lambda_min = {:.4}", m.d_b, m.d_s, m.delta_max, m.lambda_min);
    println!(
        "min eigenvalue = {:.4}  max deviation = {:.4}",
        report.theorem1.min_eigenvalue, report.theorem1.max_deviation
    );
    for f in &report.formulas {
        let status = if f.satisfied { "ok" } else { "VIOLATED" };
        println!("{:>5}: {status}{}", f.name, f.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default());
    }
    println!("certified: {}", report.certified.join(", "));
    Ok(())
}

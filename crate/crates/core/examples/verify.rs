//! Run the invariant suite without the probabilistic study and print each check.

use corrected_ei::analysis::verify::{run_verify, VerifyOptions};

fn main() -> corrected_ei::Result<()> {
    let report = run_verify(&VerifyOptions { study: false, ..VerifyOptions::default() })?;
    for c in &report.checks {
        println!("{} {:<44} margin {:.3e}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.margin);
    }
    println!("all hard checks passed: {}", report.passed);
    Ok(())
}

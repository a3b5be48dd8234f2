//! Empirical frequencies of the probabilistic regret lemmas on functions
//! drawn from a GP prior.

use corrected_ei::analysis::study::{run_study, StudyConfig};

fn main() -> corrected_ei::Result<()> {
    let report = run_study(&StudyConfig::default())?;
    for e in &report.events {
        println!(
            "{:<26} {:>4}/{:<4} freq {:.3} (target {:.2}) {}",
            e.name,
            e.successes,
            e.trials,
            e.frequency,
            e.target,
            if e.pass { "ok" } else { "below target" }
        );
    }
    for r in &report.runs {
        println!(
            "seed {:>20}  gain {:7.3}  R_T {:8.3}  bound {:10.2}",
            r.seed, r.gain_proxy, r.cumulative_regret, r.bound.value
        );
    }
    Ok(())
}

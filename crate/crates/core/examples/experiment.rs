//! A small comparison driven by a TOML config, the same as `cei run` but
//! in-process: traces and a summary go to the given directory.

use corrected_ei::experiment::{cmd_run, ExperimentConfig};

const CONFIG: &str = r#"
schema_version = 1
benchmark = "hartmann3"
acquisitions = ["ei", "corrected_ei", "pi", "corrected_pi"]
iterations = 25
seeds = [1, 2]

[noise]
kind = "range_fraction"
p = 0.1
"#;

fn main() -> corrected_ei::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "cei-example-out".into());
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let report = cmd_run(&cfg, out.as_ref(), 2)?;
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(&report.summary)?)?;
    for (name, s) in summary["acquisitions"].as_object().expect("acquisitions") {
        println!("{name:<13} final median log10 gap {:.3}", s["log_gap"]["final_median"].as_f64().unwrap_or(f64::NAN));
    }
    println!("{} traces under {out}", report.traces.len());
    Ok(())
}

//! Minimize a noisy Sphere3 with corrected EI and the stop rule α < κ.

use corrected_ei::benchmarks::{Benchmark, BenchmarkId, NoiseModel, NoisyBenchmark};
use corrected_ei::bo::{compute_profit, run_bo, Goal, RunConfig};
use corrected_ei::AcquisitionSpec;

fn main() -> corrected_ei::Result<()> {
    let bench = Benchmark::analytic(BenchmarkId::Sphere3)?;
    let mut cfg = RunConfig::new(bench.bounds().clone(), Goal::Minimize, AcquisitionSpec::corrected_ei(), 42);
    cfg.max_iters = 60;
    cfg.kappa = 0.2;
    let mut objective = NoisyBenchmark::new(bench.clone(), NoiseModel::RangeFraction { p: 0.1 }, 42)?;
    let trace = run_bo(&cfg, &mut objective, Some(&bench))?;
    for r in trace.acquired() {
        println!(
            "t {:>3}  y {:>9.3}  acq {:>9.5}  regret {:>8.4}",
            r.t,
            r.y,
            r.acq_value.unwrap_or(f64::NAN),
            r.regret.unwrap_or(f64::NAN)
        );
    }
    let inc = &trace.final_incumbent;
    println!("stopped: {:?} after {} evaluations", trace.termination.reason, trace.termination.at);
    println!("incumbent {:?}  f = {:.4}", inc.x, bench.eval(&inc.x)?);
    println!("profit at kappa {}: {:.4}", cfg.kappa, compute_profit(&trace, cfg.kappa, Some(&bench))?.profit);
    Ok(())
}

//! Draw a test function from the SE prior, save it as CSV, and optimize it
//! with EI and corrected EI under the function's fixed noise level.

use corrected_ei::benchmarks::{Benchmark, GpSampledFunction, NoiseModel, NoisyBenchmark, GP_SAMPLED_NOISE_STD};
use corrected_ei::bo::{run_bo, Goal, RunConfig};
use corrected_ei::AcquisitionSpec;

fn main() -> corrected_ei::Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse().expect("seed")).unwrap_or(0);
    let f = GpSampledFunction::sample(seed)?;
    let j = f.argmin();
    println!("min {:.4} at x = {:.3}, range {:.3}", f.values()[j], f.grid_point(j), f.range());
    let path = std::env::temp_dir().join(format!("gp_sampled_{seed}.csv"));
    f.write_csv(std::fs::File::create(&path)?)?;
    println!("grid written to {}", path.display());

    let bench = Benchmark::from_sampled(f);
    for spec in [AcquisitionSpec::ei(), AcquisitionSpec::corrected_ei()] {
        let mut cfg = RunConfig::new(bench.bounds().clone(), Goal::Minimize, spec, seed);
        cfg.max_iters = 30;
        let mut obj = NoisyBenchmark::new(bench.clone(), NoiseModel::FixedStd { std: GP_SAMPLED_NOISE_STD }, seed)?;
        let t = run_bo(&cfg, &mut obj, Some(&bench))?;
        println!("{:<13} incumbent x = {:.3}  gap {:.4}", spec.kind().name(), t.final_incumbent.x[0], bench.eval(&t.final_incumbent.x)? - bench.optimum_value());
    }
    Ok(())
}

//! Information gain of a finished run, computed as the sum of per-step
//! terms and as a log-determinant, plus the variance-sum inequality.

use corrected_ei::analysis::{achieved_gain, check_variance_sum_bound, trace_sequence};
use corrected_ei::benchmarks::{Benchmark, BenchmarkId, NoiseModel, NoisyBenchmark};
use corrected_ei::bo::{run_bo, Goal, RunConfig};
use corrected_ei::AcquisitionSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> corrected_ei::Result<()> {
    let bench = Benchmark::analytic(BenchmarkId::Hartmann3)?;
    let mut cfg = RunConfig::new(bench.bounds().clone(), Goal::Minimize, AcquisitionSpec::corrected_ei(), 3);
    cfg.max_iters = 40;
    let mut obj = NoisyBenchmark::new(bench.clone(), NoiseModel::RangeFraction { p: 0.1 }, 3)?;
    let trace = run_bo(&cfg, &mut obj, Some(&bench))?;
    let seq = trace_sequence(&trace)?;
    let gain = achieved_gain(&seq)?;
    println!("sequential {:.10}", gain.sequential_value);
    println!("log det    {:.10}", gain.logdet_value);
    println!("difference {:.2e}", gain.discrepancy());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let probes: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
    for c in check_variance_sum_bound(&seq, &probes)? {
        println!("sum of variances {:.4} <= {:.4}  ({})", c.lhs, c.rhs, if c.holds { "holds" } else { "VIOLATED" });
    }
    Ok(())
}

//! The built-in test functions: box, optimum, and a noisy observation at
//! the center with 10% range noise.

use corrected_ei::benchmarks::{noisy_eval, Benchmark, BenchmarkId, NoiseModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> corrected_ei::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let noise = NoiseModel::RangeFraction { p: 0.1 };
    for id in BenchmarkId::ANALYTIC {
        let b = Benchmark::analytic(id)?;
        let center: Vec<f64> = b.bounds().ranges().iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
        let obs = noisy_eval(&b, &noise, &center, &mut rng)?;
        println!(
            "{:<10} d={}  f* = {:>10.5}  range ~ {:>12.3}  f(center) = {:>10.4}  observed {:>10.4} (std {:.3})",
            id.name(),
            b.dim(),
            b.optimum_value(),
            b.range_estimate(),
            b.eval(&center)?,
            obs.y,
            obs.noise_var.sqrt()
        );
    }
    Ok(())
}

//! Fit a heteroscedastic GP to noisy samples of a 1-d function and print
//! the posterior on a grid, with the maximum-likelihood length scale.

use corrected_ei::gp::{default_length_scale_grid, fit_hyperparameters, DEFAULT_JITTER};
use corrected_ei::{Bounds, Dataset, GpPosterior, KernelFamily, PreprocessState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> corrected_ei::Result<()> {
    let bounds = Bounds::new(vec![(0.0, 6.0)])?;
    let f = |x: f64| x.sin() + 0.3 * x;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut data = Dataset::default();
    for _ in 0..12 {
        let x = rng.random_range(0.0..6.0);
        // Noise grows to the right.
        let std = 0.05 + 0.1 * x;
        let y = f(x) + Normal::new(0.0, std).unwrap().sample(&mut rng);
        data.push(vec![x], y, std * std)?;
    }
    let pre = PreprocessState::standardizing(&bounds, data.outputs());
    let kernel = fit_hyperparameters(KernelFamily::Matern52, &data, &pre, &default_length_scale_grid(), DEFAULT_JITTER)?;
    println!("length scale (unit box) {:.4}", kernel.length_scale());
    let gp = GpPosterior::fit_with(kernel, &data, pre, DEFAULT_JITTER)?;
    let s = gp.preprocess().output_std();
    println!("{:>6} {:>9} {:>9} {:>9}", "x", "f(x)", "mean", "std");
    for i in 0..=24 {
        let x = 6.0 * i as f64 / 24.0;
        println!("{x:6.2} {:9.4} {:9.4} {:9.4}", f(x), gp.mean(&[x]), s * gp.std_dev(&[x]));
    }
    Ok(())
}

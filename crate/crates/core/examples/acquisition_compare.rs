//! Compare EI and corrected EI on one noisy posterior. EI treats the
//! incumbent's mean as known; corrected EI uses the variance of
//! f(x) − f(x⁺), so it shrinks near the incumbent and grows where the two
//! are weakly correlated.

use corrected_ei::acquisition::{select_incumbent, AcquisitionContext, AcquisitionSpec};
use corrected_ei::{Bounds, Dataset, GpPosterior, KernelFamily, KernelSpec};

fn main() -> corrected_ei::Result<()> {
    let bounds = Bounds::new(vec![(0.0, 1.0)])?;
    let xs = [0.1, 0.25, 0.4, 0.55, 0.8];
    let ys = [0.2, 0.9, 0.6, 1.0, 0.1];
    let data = Dataset::new(xs.iter().map(|&x| vec![x]).collect(), ys.to_vec(), vec![0.09; xs.len()])?;
    let gp = GpPosterior::fit(KernelSpec::unit(KernelFamily::Matern52, 0.15)?, &data, &bounds, 1e-10)?;
    let inc = select_incumbent(&gp, data.inputs())?;
    println!("incumbent x+ = {:.2}, standardized mean {:.4}", inc.x_plus[0], inc.mu_plus);
    let ei = AcquisitionContext::new(AcquisitionSpec::ei(), &gp, &inc);
    let cei = AcquisitionContext::new(AcquisitionSpec::corrected_ei(), &gp, &inc);
    println!("{:>5} {:>8} {:>8} {:>9} {:>9}", "x", "sigma", "sigma~", "EI", "CEI");
    for i in 0..=20 {
        let x = [i as f64 / 20.0];
        let b = cei.breakdown(&x)?;
        println!(
            "{:5.2} {:8.4} {:8.4} {:9.5} {:9.5}",
            x[0],
            b.var.sqrt(),
            b.sigma_tilde_sq.sqrt(),
            ei.value(&x)?,
            b.value
        );
    }
    Ok(())
}

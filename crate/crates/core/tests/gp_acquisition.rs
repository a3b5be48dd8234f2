mod common;

use corrected_ei::acquisition::{
    corrected_ei, corrected_ei_tau, expected_improvement, select_incumbent, sigma_tilde_sq, AcquisitionContext,
    AcquisitionSpec,
};
use corrected_ei::analysis::improvement_integral;
use corrected_ei::normal::{cdf, pdf, tau};
use corrected_ei::{Bounds, GpPosterior, KernelFamily, KernelSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn family(se: bool) -> KernelFamily {
    if se {
        KernelFamily::SquaredExponential
    } else {
        KernelFamily::Matern52
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_matches_dense_solve(seed in any::<u64>(), dim in 1usize..4, n in 1usize..25, se in any::<bool>(), ell in 0.08f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bounds = Bounds::cube(-2.0, 5.0, dim).unwrap();
        let data = common::random_data(&mut rng, n, &bounds, (0.05, 1.0));
        let gp = GpPosterior::fit(KernelSpec::unit(family(se), ell).unwrap(), &data, &bounds, 1e-10).unwrap();
        let oracle = common::DenseOracle::new(&gp, &data);
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..5.0)).collect();
        let u = bounds.to_unit(&x);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-8 * b.abs().max(1e-6);
        prop_assert!(close(gp.latent_mean(&x), oracle.mean(&u)));
        prop_assert!(close(gp.variance(&x), oracle.cov(&u, &u)));
    }

    #[test]
    fn posterior_variance_bounded_by_prior(seed in any::<u64>(), n in 1usize..20, ell in 0.05f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bounds = Bounds::cube(0.0, 1.0, 2).unwrap();
        let data = common::random_data(&mut rng, n, &bounds, (0.01, 0.5));
        let gp = GpPosterior::fit(KernelSpec::unit(KernelFamily::Matern52, ell).unwrap(), &data, &bounds, 1e-10).unwrap();
        for _ in 0..5 {
            let x = vec![rng.random::<f64>(), rng.random::<f64>()];
            let v = gp.variance(&x);
            prop_assert!((0.0..=1.0 + 1e-9).contains(&v));
        }
    }

    #[test]
    fn adding_data_never_raises_variance(seed in any::<u64>(), n in 2usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bounds = Bounds::cube(0.0, 1.0, 1).unwrap();
        let data = common::random_data(&mut rng, n, &bounds, (0.05, 0.5));
        let k = KernelSpec::unit(KernelFamily::SquaredExponential, 0.3).unwrap();
        // Outputs do not enter the variance, so an unscaled fit keeps kernels comparable.
        let pre = corrected_ei::PreprocessState::unscaled(&bounds);
        let small = GpPosterior::fit_with(k, &data.prefix(n - 1), pre.clone(), 1e-10).unwrap();
        let big = GpPosterior::fit_with(k, &data, pre, 1e-10).unwrap();
        let x = vec![rng.random::<f64>()];
        prop_assert!(big.variance(&x) <= small.variance(&x) + 1e-10);
    }

    #[test]
    fn tau_identities(z in -30.0f64..30.0) {
        let t = tau(z);
        prop_assert!(t > 0.0 || z < -25.0);
        prop_assert!((t - (z * cdf(z) + pdf(z))).abs() <= 1e-12 * (1.0 + z.abs()));
        // τ' = Φ and τ'' = φ, so τ is increasing and convex.
        let h = 1e-4;
        let d = (tau(z + h) - tau(z - h)) / (2.0 * h);
        prop_assert!((d - cdf(z)).abs() <= 1e-7);
        prop_assert!(t >= z.max(0.0) - 1e-14);
    }

    #[test]
    fn ei_forms_agree_and_bound(u in -5.0f64..5.0, s in 1e-3f64..5.0) {
        let a = corrected_ei(u, s);
        let b = corrected_ei_tau(u, s);
        prop_assert!(a >= 0.0 && b >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        prop_assert!(a >= u.max(0.0) - 1e-12);
        // Monotone in both arguments.
        prop_assert!(corrected_ei(u + 0.1, s) >= a);
        prop_assert!(corrected_ei(u, s * 1.1) >= a);
        prop_assert_eq!(expected_improvement(u, s), a);
    }

    #[test]
    fn closed_form_matches_integral(u in -3.0f64..3.0, s in 0.05f64..3.0) {
        let exact = corrected_ei(u, s);
        let q = improvement_integral(u, s, 1e-13);
        prop_assert!((exact - q).abs() <= 1e-9 * exact.max(1e-6), "{} {}", exact, q);
    }

    #[test]
    fn sigma_tilde_is_bounded_by_triangle(seed in any::<u64>(), n in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bounds = Bounds::cube(-1.0, 1.0, 2).unwrap();
        let data = common::random_data(&mut rng, n, &bounds, (0.05, 0.5));
        let gp = GpPosterior::fit(KernelSpec::unit(KernelFamily::Matern52, 0.25).unwrap(), &data, &bounds, 1e-10).unwrap();
        let inc = select_incumbent(&gp, data.inputs()).unwrap();
        let x = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let st = sigma_tilde_sq(&gp, &x, &inc).unwrap().sqrt();
        let bound = gp.std_dev(&x) + inc.var_plus.sqrt();
        prop_assert!(st <= bound + 1e-9);
        prop_assert!(st >= (gp.std_dev(&x) - inc.var_plus.sqrt()).abs() - 1e-6);
        // At the incumbent itself σ̃ vanishes up to the floor.
        let at_inc = sigma_tilde_sq(&gp, &inc.x_plus, &inc).unwrap();
        prop_assert!(at_inc <= 1e-6);
        let ctx = AcquisitionContext::new(AcquisitionSpec::corrected_ei(), &gp, &inc);
        prop_assert!(ctx.value(&x).unwrap() >= 0.0);
    }
}

#[test]
fn incumbent_is_best_posterior_mean_among_observed() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bounds = Bounds::cube(0.0, 10.0, 3).unwrap();
    let data = common::random_data(&mut rng, 12, &bounds, (0.1, 0.3));
    let gp = GpPosterior::fit(KernelSpec::unit(KernelFamily::Matern52, 0.4).unwrap(), &data, &bounds, 1e-10).unwrap();
    let inc = select_incumbent(&gp, data.inputs()).unwrap();
    for x in data.inputs() {
        assert!(gp.latent_mean(x) <= inc.mu_plus);
    }
    assert_eq!(data.inputs()[inc.index], inc.x_plus);
}

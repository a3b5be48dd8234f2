use corrected_ei::analysis::{
    beta_schedule, g_ratio, info_gain_logdet, info_gain_sequential, lower_bound_inequality, regret_bound_rhs,
    stopping_constant, stopping_constant_text, variance_sum_bound, PosteriorSequence,
};
use corrected_ei::{Bounds, Dataset, KernelFamily, KernelSpec, PreprocessState};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sequence(seed: u64, n: usize, noise: (f64, f64)) -> (PosteriorSequence, Dataset, KernelSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let vs: Vec<f64> = (0..n).map(|_| rng.random_range(noise.0..noise.1).powi(2)).collect();
    let data = Dataset::new(xs, ys, vs).unwrap();
    let k = KernelSpec::unit(KernelFamily::SquaredExponential, 0.3).unwrap();
    let bounds = Bounds::unit(2);
    let seq = PosteriorSequence::new(k, &data, PreprocessState::unscaled(&bounds), 1e-10).unwrap();
    (seq, data, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gain_sum_equals_logdet(seed in any::<u64>(), n in 1usize..25) {
        let (seq, data, k) = sequence(seed, n, (0.05, 0.8));
        let seq_gain = info_gain_sequential(&seq.predictive_variances(), data.noise_vars()).unwrap();
        let gram = k.matrix(data.inputs()).unwrap();
        let det_gain = info_gain_logdet(&gram, data.noise_vars()).unwrap();
        prop_assert!((seq_gain - det_gain).abs() <= 1e-9 * (1.0 + det_gain));
    }

    #[test]
    fn logdet_gain_ignores_order(seed in any::<u64>(), n in 2usize..15) {
        let (_, data, k) = sequence(seed, n, (0.05, 0.8));
        let gram = k.matrix(data.inputs()).unwrap();
        let a = info_gain_logdet(&gram, data.noise_vars()).unwrap();
        let perm: Vec<usize> = (0..n).rev().collect();
        let pg = DMatrix::from_fn(n, n, |i, j| gram[(perm[i], perm[j])]);
        let pv: Vec<f64> = perm.iter().map(|&i| data.noise_vars()[i]).collect();
        let b = info_gain_logdet(&pg, &pv).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn variance_sum_inequality_holds(seed in any::<u64>(), n in 1usize..30) {
        let (seq, data, _) = sequence(seed, n, (0.02, 0.5));
        let chk = variance_sum_bound(&seq.predictive_variances(), data.noise_vars(), 1.0).unwrap();
        prop_assert!(chk.holds, "{:?}", chk);
    }

    #[test]
    fn g_ratio_is_increasing(a in 1e-6f64..1e6, r in 1.001f64..10.0) {
        prop_assert!(g_ratio(a * r) > g_ratio(a));
        prop_assert!(g_ratio(a) > 1.0);
    }

    #[test]
    fn beta_grows_with_t_and_gain(t in 1usize..10_000, gamma in 0.0f64..50.0, b in 0.1f64..20.0, delta in 0.01f64..0.5) {
        let base = beta_schedule(t, gamma, b, delta);
        prop_assert!(base >= 2.0 * b * b);
        prop_assert!(beta_schedule(t + 1, gamma, b, delta) >= base);
        prop_assert!(beta_schedule(t, gamma + 1.0, b, delta) >= base);
    }

    #[test]
    fn regret_bound_monotone(t in 1usize..1000, gamma in 0.1f64..50.0, beta in 0.1f64..1e4, kappa in 1e-4f64..0.7) {
        let c = stopping_constant(kappa);
        let r = regret_bound_rhs(t, gamma, beta, c, 0.5);
        prop_assert!(!r.c_clamped);
        prop_assert!(regret_bound_rhs(t + 1, gamma, beta, c, 0.5).value >= r.value);
        prop_assert!(regret_bound_rhs(t, gamma, beta * 2.0, c, 0.5).value >= r.value);
        prop_assert!((stopping_constant(kappa) - stopping_constant_text(kappa) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_holds_when_truth_is_inside_intervals(
        mu in -3.0f64..3.0, mu_plus in -3.0f64..3.0, s in 0.01f64..2.0, sp in 0.01f64..2.0,
        beta in 0.5f64..9.0, wx in -1.0f64..1.0, wp in -1.0f64..1.0,
    ) {
        // With f(x) and f(x⁺) inside their √β intervals, α ≥ f(x) − f(x⁺) − (√β + 1)(σ + σ⁺)
        // for the corrected EI built from the same posterior.
        let rb = beta.sqrt();
        let f_x = mu + wx * rb * s;
        let f_plus = mu_plus + wp * rb * sp;
        let st = s + sp;
        let alpha = corrected_ei::acquisition::corrected_ei(mu - mu_plus, st);
        let ineq = lower_bound_inequality(alpha, f_x, f_plus, beta, s, sp);
        prop_assert!(ineq.holds, "{:?}", ineq);
    }
}

//! Numerical checks of the inequalities behind the regret analysis of
//! corrected EI.

use serde::{Deserialize, Serialize};

use super::info_gain::info_gain_terms;
use super::sequence::PosteriorSequence;
use crate::acquisition::{corrected_ei_tau, AcquisitionKind, Incumbent};
use crate::bo::{ModelSnapshot, RunTrace};
use crate::error::{Error, Result};
use crate::gp::GpPosterior;
use crate::normal::tau;

/// Absolute slack allowed on every deterministic inequality.
pub const TOLERANCE: f64 = 1e-10;

/// `lhs ≤ rhs` evaluated at one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    pub fn le(lhs: f64, rhs: f64) -> Self {
        Inequality { lhs, rhs, holds: lhs <= rhs + TOLERANCE }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// `G(x) = x / log(1 + x)`, increasing on `x > 0`.
pub fn g_ratio(x: f64) -> f64 {
    x / x.ln_1p()
}

/// `log(2 / (π κ²))`, the constant of the stopping-gap lemma.
pub fn stopping_constant(kappa: f64) -> f64 {
    (2.0 / (std::f64::consts::PI * kappa * kappa)).ln()
}

/// `log(1 / (π κ²))`, the variant printed in the statement of the τ bound.
pub fn stopping_constant_text(kappa: f64) -> f64 {
    (1.0 / (std::f64::consts::PI * kappa * kappa)).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceSumCheck {
    /// `Σ_t σ²_{t−1}(x)`.
    pub lhs: f64,
    /// `(2 / log(1 + υ_max⁻²)) · ½ Σ_t log(1 + υ_t⁻² σ²_{t−1}(x))`.
    pub rhs: f64,
    pub holds: bool,
    /// `rhs / lhs`, absent when `lhs = 0`.
    pub slack_ratio: Option<f64>,
}

/// The computable intermediate step of the variance-sum bound at one probe:
/// `variances[t]` is `σ²_{t}(x)` conditioned on `t` observations and
/// `noise_vars[t]` is `υ²_{t+1}`. Requires `amplitude ≤ 1`, which makes
/// every `σ² ≤ 1`.
pub fn variance_sum_bound(variances: &[f64], noise_vars: &[f64], amplitude: f64) -> Result<VarianceSumCheck> {
    if amplitude > 1.0 {
        return Err(Error::input(format!(
            "variance-sum bound assumes k(x, x) ≤ 1, got amplitude {amplitude}"
        )));
    }
    let clamped: Vec<f64> = variances.iter().map(|v| v.max(0.0)).collect();
    let terms = info_gain_terms(&clamped, noise_vars)?;
    let v_max = noise_vars.iter().cloned().fold(0.0, f64::max);
    let lhs: f64 = clamped.iter().sum();
    let rhs = if terms.is_empty() {
        0.0
    } else {
        2.0 / (1.0 / v_max).ln_1p() * terms.iter().sum::<f64>()
    };
    Ok(VarianceSumCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + TOLERANCE,
        slack_ratio: (lhs > 0.0).then(|| rhs / lhs),
    })
}

/// The variance-sum check at each probe, using the posterior sequence of a
/// run.
pub fn check_variance_sum_bound(seq: &PosteriorSequence, probes: &[Vec<f64>]) -> Result<Vec<VarianceSumCheck>> {
    let n = seq.len();
    let noise: Vec<f64> = (0..n).map(|i| seq.noise_var(i)).collect();
    probes
        .iter()
        .map(|x| {
            let q = seq.query(x);
            let vars: Vec<f64> = (0..n).map(|t| seq.var(t, &q)).collect();
            variance_sum_bound(&vars, &noise, seq.kernel().amplitude())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingGapCheck {
    /// Evaluation index of the record.
    pub t: usize,
    /// Whether `α(x_t) ≥ κ`, the hypothesis of both lemmas.
    pub precondition: bool,
    /// `log(2/(πκ²))`, clamped at 0 (see `c_clamped`).
    pub c: f64,
    pub c_clamped: bool,
    /// `log(1/(πκ²))` clamped at 0.
    pub c_text: f64,
    /// `μ(x_t) ≤ μ(x⁺)`, the case the gap lemma speaks about.
    pub gap_applies: bool,
    /// `μ(x⁺) − μ(x_t) ≤ √C σ̃(x_t)`.
    pub gap: Inequality,
    /// `τ(−z(x_t)) ≤ 1 + √C`.
    pub tau_bound: Inequality,
    /// The same with the text constant.
    pub tau_bound_text: Inequality,
}

/// Evaluates the stopping-gap and τ bounds for one acquisition decision,
/// using standardized model quantities and `kappa` on the same scale.
pub fn stopping_gap_lemma(t: usize, snapshot: &ModelSnapshot, kappa: f64) -> StoppingGapCheck {
    let s2 = snapshot.sigma_tilde_sq();
    let st = s2.sqrt();
    let u = snapshot.mean_x - snapshot.mean_plus;
    let alpha = corrected_ei_tau(u, st);
    let raw_c = stopping_constant(kappa);
    let c = raw_c.max(0.0);
    let c_text = stopping_constant_text(kappa).max(0.0);
    let gap = Inequality::le(-u, c.sqrt() * st);
    let tau_lhs = if st > 0.0 { tau(-u / st) } else { 0.0 };
    StoppingGapCheck {
        t,
        precondition: alpha >= kappa && st > 0.0,
        c,
        c_clamped: raw_c < 0.0,
        c_text,
        gap_applies: u <= 0.0,
        gap,
        tau_bound: Inequality::le(tau_lhs, 1.0 + c.sqrt()),
        tau_bound_text: Inequality::le(tau_lhs, 1.0 + c_text.sqrt()),
    }
}

/// Both lemmas at every acquired record of a corrected-EI run with
/// `kappa > 0`. The threshold is converted to the standardized scale of
/// each iteration's model.
pub fn check_stopping_gap_lemma(trace: &RunTrace) -> Result<Vec<StoppingGapCheck>> {
    let kind = trace.config.acquisition.kind();
    if kind != AcquisitionKind::CorrectedEi {
        return Err(Error::input(format!("stopping-gap lemma concerns corrected EI, trace used {kind}")));
    }
    if trace.config.kappa <= 0.0 {
        return Err(Error::input("stopping-gap lemma needs kappa > 0"));
    }
    Ok(trace
        .acquired()
        .map(|r| {
            let s = r.snapshot.as_ref().expect("acquired records carry a snapshot");
            stopping_gap_lemma(r.t, s, trace.config.kappa / s.output_std)
        })
        .collect())
}

/// `α(x) ≥ max{I(x) − √β (σ(x) + σ(x⁺)), 0}` with `I(x) = max{0, f(x) − f(x⁺)}`.
pub fn lower_bound_inequality(alpha: f64, f_x: f64, f_plus: f64, beta: f64, sigma_x: f64, sigma_plus: f64) -> Inequality {
    let improvement = (f_x - f_plus).max(0.0);
    let lhs = (improvement - beta.sqrt() * (sigma_x + sigma_plus)).max(0.0);
    Inequality::le(lhs, alpha)
}

/// The lower-bound lemma at `x` for a fitted model. `f_x` and `f_plus` are
/// true function values on the model's output scale.
pub fn check_lower_bound_lemma(
    gp: &GpPosterior,
    x: &[f64],
    incumbent: &Incumbent,
    f_x: f64,
    f_plus: f64,
    beta: f64,
) -> Result<Inequality> {
    let q = gp.query(x);
    let qp = gp.query(&incumbent.x_plus);
    let cov = gp.cross_covariance(&q, &qp);
    let s2 = crate::acquisition::sigma_tilde_sq_from(q.var, qp.var, cov, gp.kernel().amplitude())?;
    let alpha = corrected_ei_tau(q.mean - qp.mean, s2.sqrt());
    Ok(lower_bound_inequality(
        alpha,
        f_x,
        f_plus,
        beta,
        q.var.max(0.0).sqrt(),
        qp.var.max(0.0).sqrt(),
    ))
}

/// `σ̃ ≤ σ(x) + σ(x⁺)`.
pub fn sigma_tilde_triangle(var_x: f64, var_plus: f64, cov: f64) -> Inequality {
    let st = (var_x + var_plus - 2.0 * cov).max(0.0).sqrt();
    Inequality::le(st, var_x.max(0.0).sqrt() + var_plus.max(0.0).sqrt())
}

/// `β_t = 2B² + 300 γ_t ln³(t/δ)`.
pub fn beta_schedule(t: usize, gamma: f64, rkhs_norm_bound: f64, delta: f64) -> f64 {
    let l = (t as f64 / delta).ln();
    2.0 * rkhs_norm_bound * rkhs_norm_bound + 300.0 * gamma * l * l * l
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretBound {
    pub value: f64,
    pub c_used: f64,
    /// The supplied `C` was negative (κ above √(2/π)) and was raised to 0.
    pub c_clamped: bool,
}

/// `√(2Tγ / log(1 + υ_max⁻²)) · (√β + √(2(1+C)) + √(3(1+C+β)))`.
pub fn regret_bound_rhs(t: usize, gamma: f64, beta: f64, c: f64, upsilon_max: f64) -> RegretBound {
    let c_used = c.max(0.0);
    let scale = (2.0 * t as f64 * gamma / (1.0 / (upsilon_max * upsilon_max)).ln_1p()).sqrt();
    let value = scale * (beta.sqrt() + (2.0 * (1.0 + c_used)).sqrt() + (3.0 * (1.0 + c_used + beta)).sqrt());
    RegretBound { value, c_used, c_clamped: c < 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn variance_sum_tight_case() {
        let c = variance_sum_bound(&[1.0], &[1.0], 1.0).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-15 && (c.rhs - 1.0).abs() < 1e-15);
        assert!(c.holds);
        let z = variance_sum_bound(&[0.0, 0.0], &[1.0, 2.0], 1.0).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
        assert!(z.holds && z.slack_ratio.is_none());
    }

    #[test]
    fn variance_sum_requires_bounded_kernel() {
        assert!(matches!(variance_sum_bound(&[1.0], &[1.0], 1.5), Err(Error::Input(_))));
    }

    #[test]
    fn g_ratio_increasing() {
        let mut prev = 0.0;
        for i in 1..=10_000 {
            let g = g_ratio(i as f64 * 0.01);
            assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_schedule(1, 0.0, 1.0, 0.5), 2.0);
        // t/δ = e with t = 1.
        let b = beta_schedule(1, 1.0, 0.0, (-1.0f64).exp());
        assert!((b - 300.0).abs() < 1e-10);
        let gammas = [0.0, 0.1, 0.1, 0.5, 2.0, 2.0, 3.5];
        let betas: Vec<f64> = gammas.iter().enumerate().map(|(i, &g)| beta_schedule(i + 1, g, 1.0, 0.1)).collect();
        assert!(betas.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn regret_bound_examples() {
        assert_eq!(regret_bound_rhs(10, 0.0, 5.0, 1.0, 0.5).value, 0.0);
        let r = regret_bound_rhs(1, 0.5 * LN_2, 2.0, 0.0, 1.0);
        assert!((r.value - (2f64.sqrt() * 2.0 + 3.0)).abs() < 1e-12);
        assert!((r.value - 5.828427).abs() < 1e-6);
        assert!(regret_bound_rhs(1, 0.5 * LN_2, 2.0, -0.3, 1.0).c_clamped);
    }

    #[test]
    fn lower_bound_trivial_cases() {
        // No improvement: the bound is max(·, 0) = 0 ≤ α.
        assert!(lower_bound_inequality(0.0, 1.0, 2.0, 4.0, 0.1, 0.1).holds);
        // σ̃ = 0 means α = 0, and the bound is 0 when f(x) = f(x⁺).
        assert!(lower_bound_inequality(0.0, 1.0, 1.0, 4.0, 0.0, 0.0).holds);
    }

    #[test]
    fn stopping_constants() {
        let k: f64 = 0.01;
        assert!((stopping_constant(k) - stopping_constant_text(k) - LN_2).abs() < 1e-12);
        assert!(stopping_constant((2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn case_one_of_tau_bound() {
        // μ(x_t) ≥ μ(x⁺): τ(−z) ≤ φ(−z) ≤ 1.
        let s = ModelSnapshot {
            kernel: crate::kernels::KernelSpec::unit(crate::kernels::KernelFamily::Matern52, 0.2).unwrap(),
            output_mean: 0.0,
            output_std: 1.0,
            mean_x: 0.8,
            mean_plus: 0.5,
            var_x: 0.3,
            var_plus: 0.05,
            cov: 0.01,
            acq_std: 0.0,
        };
        let c = stopping_gap_lemma(10, &s, 0.01);
        assert!(c.precondition && !c.gap_applies);
        assert!(c.tau_bound.lhs <= 1.0 && c.tau_bound.holds);
    }

    #[test]
    fn zero_sigma_tilde_fails_precondition() {
        let s = ModelSnapshot {
            kernel: crate::kernels::KernelSpec::unit(crate::kernels::KernelFamily::Matern52, 0.2).unwrap(),
            output_mean: 0.0,
            output_std: 1.0,
            mean_x: 0.5,
            mean_plus: 0.5,
            var_x: 0.1,
            var_plus: 0.1,
            cov: 0.1,
            acq_std: 0.0,
        };
        assert!(!stopping_gap_lemma(3, &s, 0.01).precondition);
    }
}

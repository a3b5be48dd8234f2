//! Closed-form acquisition functions and the incumbent rule.
//!
//! All values are computed on the model's standardized output scale. The
//! incumbent is the observed input with the largest posterior mean.
//!
//! The corrected expected improvement treats the incumbent's function value
//! as unknown: with `u = μ(x) − μ(x⁺)` and the variance of `f(x) − f(x⁺)`,
//!
//! ```text
//! σ̃²(x) = σ²(x) + σ²(x⁺) − 2σ(x, x⁺)
//! α(x)  = σ̃·φ(u/σ̃) + u·Φ(u/σ̃) = σ̃·τ(u/σ̃),   α = 0 when σ̃ = 0.
//! ```
//!
//! With noiseless data `σ²(x⁺) = σ(x, x⁺) = 0` and this reduces to ordinary
//! expected improvement.
//!
//! The corrected probability of improvement, `Φ(u/σ̃)`, is a reconstruction:
//! the published variant is referenced only by name, and this form simply
//! swaps σ for σ̃ as in the corrected EI.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GpPosterior, PointQuery};
use crate::normal::{cdf, pdf, tau};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionKind {
    Ei,
    CorrectedEi,
    Pi,
    CorrectedPi,
    Ucb,
}

impl AcquisitionKind {
    pub const ALL: [AcquisitionKind; 5] = [
        AcquisitionKind::Ei,
        AcquisitionKind::CorrectedEi,
        AcquisitionKind::Pi,
        AcquisitionKind::CorrectedPi,
        AcquisitionKind::Ucb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AcquisitionKind::Ei => "ei",
            AcquisitionKind::CorrectedEi => "corrected_ei",
            AcquisitionKind::Pi => "pi",
            AcquisitionKind::CorrectedPi => "corrected_pi",
            AcquisitionKind::Ucb => "ucb",
        }
    }

    /// Whether values are in output units (improvements) rather than
    /// probabilities.
    pub fn is_improvement(self) -> bool {
        matches!(self, AcquisitionKind::Ei | AcquisitionKind::CorrectedEi)
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AcquisitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ei" => AcquisitionKind::Ei,
            "corrected_ei" | "cei" => AcquisitionKind::CorrectedEi,
            "pi" => AcquisitionKind::Pi,
            "corrected_pi" | "cpi" => AcquisitionKind::CorrectedPi,
            "ucb" => AcquisitionKind::Ucb,
            other => return Err(Error::input(format!("unknown acquisition {other:?}"))),
        })
    }
}

/// Which acquisition to use. `ucb_beta` is present exactly when the kind is
/// UCB.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    kind: AcquisitionKind,
    ucb_beta: Option<f64>,
}

impl AcquisitionSpec {
    pub fn new(kind: AcquisitionKind, ucb_beta: Option<f64>) -> Result<Self> {
        match (kind, ucb_beta) {
            (AcquisitionKind::Ucb, Some(b)) if b.is_finite() && b > 0.0 => {}
            (AcquisitionKind::Ucb, Some(b)) => {
                return Err(Error::input(format!("UCB beta must be positive, got {b}")))
            }
            (AcquisitionKind::Ucb, None) => return Err(Error::input("UCB requires a beta")),
            (_, Some(_)) => {
                return Err(Error::input(format!("{kind} does not take a beta parameter")))
            }
            (_, None) => {}
        }
        Ok(AcquisitionSpec { kind, ucb_beta })
    }

    pub fn ei() -> Self {
        AcquisitionSpec { kind: AcquisitionKind::Ei, ucb_beta: None }
    }

    pub fn corrected_ei() -> Self {
        AcquisitionSpec { kind: AcquisitionKind::CorrectedEi, ucb_beta: None }
    }

    pub fn pi() -> Self {
        AcquisitionSpec { kind: AcquisitionKind::Pi, ucb_beta: None }
    }

    pub fn corrected_pi() -> Self {
        AcquisitionSpec { kind: AcquisitionKind::CorrectedPi, ucb_beta: None }
    }

    pub fn ucb(beta: f64) -> Result<Self> {
        Self::new(AcquisitionKind::Ucb, Some(beta))
    }

    pub fn kind(&self) -> AcquisitionKind {
        self.kind
    }

    pub fn ucb_beta(&self) -> Option<f64> {
        self.ucb_beta
    }
}

/// The observed point with the largest posterior mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    /// Position in the observed set.
    pub index: usize,
    /// The point, in original input units.
    pub x_plus: Vec<f64>,
    /// Standardized posterior mean at `x_plus`.
    pub mu_plus: f64,
    /// Standardized posterior variance at `x_plus`.
    pub var_plus: f64,
}

/// `argmax_i μ(x_i)` over `observed`; ties go to the lowest index.
pub fn select_incumbent(gp: &GpPosterior, observed: &[Vec<f64>]) -> Result<Incumbent> {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in observed.iter().enumerate() {
        let m = gp.latent_mean(x);
        if best.is_none_or(|(_, b)| m > b) {
            best = Some((i, m));
        }
    }
    let (index, mu_plus) = best.ok_or_else(|| Error::input("no observations to choose an incumbent from"))?;
    let x_plus = observed[index].clone();
    let var_plus = gp.variance(&x_plus);
    Ok(Incumbent { index, x_plus, mu_plus, var_plus })
}

/// Raw values of `σ̃²` below `−SIGMA_TILDE_FLOOR · amplitude` signal a broken
/// posterior rather than rounding.
pub const SIGMA_TILDE_FLOOR: f64 = 1e-6;

/// `σ̃² = σ²(x) + σ²(x⁺) − 2σ(x, x⁺)`, clamped at zero.
pub fn sigma_tilde_sq_from(var_x: f64, var_plus: f64, cov: f64, amplitude: f64) -> Result<f64> {
    let raw = var_x + var_plus - 2.0 * cov;
    if raw < -SIGMA_TILDE_FLOOR * amplitude || raw.is_nan() {
        return Err(Error::numerical(format!(
            "corrected variance is {raw:e}; the posterior covariance is not positive semidefinite"
        )));
    }
    Ok(raw.max(0.0))
}

/// Variance of `f(x) − f(x⁺)` under the joint posterior.
pub fn sigma_tilde_sq(gp: &GpPosterior, x: &[f64], incumbent: &Incumbent) -> Result<f64> {
    let m = gp.joint(x, &incumbent.x_plus);
    sigma_tilde_sq_from(m.var_a, m.var_b, m.cov, gp.kernel().amplitude())
}

/// Beyond this standardized distance the limiting forms are used.
const Z_LIMIT: f64 = 40.0;

/// Expected improvement `σφ(z) + uΦ(z)` with `z = u/σ`; zero when `σ = 0`.
pub fn expected_improvement(u: f64, sigma: f64) -> f64 {
    corrected_ei(u, sigma)
}

/// Corrected EI in its `σ̃φ(z̃) + uΦ(z̃)` form.
pub fn corrected_ei(u: f64, sigma_tilde: f64) -> f64 {
    if sigma_tilde <= 0.0 {
        return 0.0;
    }
    let z = u / sigma_tilde;
    if z > Z_LIMIT {
        u
    } else if z < -Z_LIMIT {
        0.0
    } else {
        sigma_tilde * pdf(z) + u * cdf(z)
    }
}

/// Corrected EI in its `σ̃·τ(z̃)` form.
pub fn corrected_ei_tau(u: f64, sigma_tilde: f64) -> f64 {
    if sigma_tilde <= 0.0 {
        return 0.0;
    }
    let z = u / sigma_tilde;
    if z > Z_LIMIT {
        u
    } else if z < -Z_LIMIT {
        0.0
    } else {
        sigma_tilde * tau(z)
    }
}

/// `Φ(u/σ)`; with `σ = 0` the improvement is certain iff `u > 0`.
pub fn probability_of_improvement(u: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return if u > 0.0 { 1.0 } else { 0.0 };
    }
    cdf(u / sigma)
}

/// Intermediate quantities of one acquisition evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcqBreakdown {
    pub mean: f64,
    pub var: f64,
    pub var_plus: f64,
    pub cov: f64,
    pub sigma_tilde_sq: f64,
    pub value: f64,
}

/// An acquisition bound to one posterior and incumbent, with the incumbent's
/// posterior solve cached.
#[derive(Clone, Debug)]
pub struct AcquisitionContext<'a> {
    spec: AcquisitionSpec,
    gp: &'a GpPosterior,
    incumbent: &'a Incumbent,
    plus: PointQuery,
}

impl<'a> AcquisitionContext<'a> {
    pub fn new(spec: AcquisitionSpec, gp: &'a GpPosterior, incumbent: &'a Incumbent) -> Self {
        let plus = gp.query(&incumbent.x_plus);
        AcquisitionContext { spec, gp, incumbent, plus }
    }

    pub fn spec(&self) -> &AcquisitionSpec {
        &self.spec
    }

    pub fn gp(&self) -> &GpPosterior {
        self.gp
    }

    pub fn incumbent(&self) -> &Incumbent {
        self.incumbent
    }

    /// Value at `x` in original input units.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.breakdown(x)?.value)
    }

    pub fn breakdown(&self, x: &[f64]) -> Result<AcqBreakdown> {
        let u = self.gp.preprocess().normalize_input(x);
        self.breakdown_unit(u)
    }

    /// Value at a point of the normalized cube.
    pub fn value_unit(&self, u: &[f64]) -> Result<f64> {
        Ok(self.breakdown_unit(u.to_vec())?.value)
    }

    fn breakdown_unit(&self, u: Vec<f64>) -> Result<AcqBreakdown> {
        let q = self.gp.query_unit(u);
        let sigma = q.var.max(0.0).sqrt();
        let diff = q.mean - self.incumbent.mu_plus;
        let var_plus = self.plus.var;
        let kind = self.spec.kind;
        let (cov, s2) = if matches!(kind, AcquisitionKind::CorrectedEi | AcquisitionKind::CorrectedPi) {
            let cov = self.gp.cross_covariance(&q, &self.plus);
            (cov, sigma_tilde_sq_from(q.var, var_plus, cov, self.gp.kernel().amplitude())?)
        } else {
            (f64::NAN, f64::NAN)
        };
        let value = match kind {
            AcquisitionKind::Ei => expected_improvement(diff, sigma),
            AcquisitionKind::CorrectedEi => corrected_ei_tau(diff, s2.sqrt()),
            AcquisitionKind::Pi => probability_of_improvement(diff, sigma),
            AcquisitionKind::CorrectedPi => probability_of_improvement(diff, s2.sqrt()),
            AcquisitionKind::Ucb => {
                q.mean + self.spec.ucb_beta.expect("validated at construction").sqrt() * sigma
            }
        };
        Ok(AcqBreakdown {
            mean: q.mean,
            var: q.var,
            var_plus,
            cov,
            sigma_tilde_sq: s2,
            value,
        })
    }
}

/// Acquisition value at `x` (original input units, standardized output
/// scale).
pub fn acq_value(
    spec: &AcquisitionSpec,
    gp: &GpPosterior,
    x: &[f64],
    incumbent: &Incumbent,
) -> Result<f64> {
    AcquisitionContext::new(*spec, gp, incumbent).value(x)
}

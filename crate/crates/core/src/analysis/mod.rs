//! Numerical checks of the theory behind corrected EI: information gain,
//! the confidence-width schedule `β_t`, the lemma inequalities and the
//! cumulative-regret bound.
//!
//! The maximum information gain `γ_T` is a maximum over subsets and is
//! never computed. Wherever it appears, the gain achieved on the points a
//! run actually selected stands in for it. That is a lower bound on `γ_T`,
//! so bounds computed with it are optimistic and every report says so.

mod info_gain;
mod lemmas;
mod oracles;
mod sequence;
pub mod study;
pub mod verify;

pub use info_gain::{info_gain_logdet, info_gain_sequential, info_gain_terms, InfoGainReport};
pub use lemmas::{
    beta_schedule, check_lower_bound_lemma, check_stopping_gap_lemma, check_variance_sum_bound, g_ratio,
    lower_bound_inequality, regret_bound_rhs, sigma_tilde_triangle, stopping_constant, stopping_constant_text,
    stopping_gap_lemma, variance_sum_bound, Inequality, RegretBound, StoppingGapCheck, VarianceSumCheck, TOLERANCE,
};
pub use oracles::{improvement_integral, integrate, mc_improvement, McEstimate};
pub use sequence::PosteriorSequence;

use serde::{Deserialize, Serialize};

use crate::bo::RunTrace;
use crate::error::{Error, Result};
use crate::gp::Dataset;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Failure probability `δ` of the confidence events.
    pub delta: f64,
    /// `B ≥ ‖f‖_k`.
    pub rkhs_norm_bound: f64,
}

impl AnalysisConfig {
    pub fn new(delta: f64, rkhs_norm_bound: f64) -> Result<Self> {
        let c = AnalysisConfig { delta, rkhs_norm_bound };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::input(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.rkhs_norm_bound > 0.0 && self.rkhs_norm_bound.is_finite()) {
            return Err(Error::input(format!(
                "RKHS norm bound must be positive, got {}",
                self.rkhs_norm_bound
            )));
        }
        Ok(())
    }

    /// `β_t` with the achieved gain standing in for `γ_t`.
    pub fn beta(&self, t: usize, gain: f64) -> f64 {
        beta_schedule(t, gain, self.rkhs_norm_bound, self.delta)
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { delta: 0.1, rkhs_norm_bound: 10.0 }
    }
}

/// The trace's observations as the loop modeled them (sign-flipped for
/// minimization).
pub fn modeled_dataset(trace: &RunTrace) -> Dataset {
    let sign = trace.config.goal.sign();
    let mut d = Dataset::default();
    for r in &trace.records {
        d.push(r.x.clone(), sign * r.y, r.noise_var).expect("trace records are valid");
    }
    d
}

/// Posterior sequence of a finished run under one fixed model: the kernel
/// and output scaling of the model fitted to all observations. With
/// maximum-likelihood hyperparameters the per-iteration models differ
/// slightly from this one; the inequalities checked on it are properties of
/// any fixed kernel.
pub fn trace_sequence(trace: &RunTrace) -> Result<PosteriorSequence> {
    let data = modeled_dataset(trace);
    let model = crate::bo::fit_model(&trace.config, &data)?;
    PosteriorSequence::new(
        *model.gp.kernel(),
        &data,
        model.gp.preprocess().clone(),
        trace.config.jitter,
    )
}

/// Information gain of a run's selected points under the sequence's model,
/// by both routes.
pub fn achieved_gain(seq: &PosteriorSequence) -> Result<InfoGainReport> {
    let vars = seq.predictive_variances();
    let noise: Vec<f64> = (0..seq.len()).map(|i| seq.noise_var(i)).collect();
    let per_step_terms = info_gain_terms(&vars, &noise)?;
    let k = seq.kernel().matrix(seq.full().train_inputs())?;
    Ok(InfoGainReport {
        sequential_value: per_step_terms.iter().sum(),
        logdet_value: info_gain_logdet(&k, &noise)?,
        per_step_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(AnalysisConfig::new(0.1, 10.0).is_ok());
        assert!(AnalysisConfig::new(0.0, 10.0).is_err());
        assert!(AnalysisConfig::new(1.0, 10.0).is_err());
        assert!(AnalysisConfig::new(0.1, 0.0).is_err());
        assert_eq!(AnalysisConfig::new(0.5, 1.0).unwrap().beta(1, 0.0), 2.0);
    }
}

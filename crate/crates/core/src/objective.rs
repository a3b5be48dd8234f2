//! What the optimizer talks to: a noisy black box, and optionally the
//! noiseless function behind it.

use crate::error::Result;

/// One noisy observation and the variance of its noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub y: f64,
    pub noise_var: f64,
}

/// A noisy black-box function. Implementations report the noise variance
/// of every observation truthfully.
pub trait Objective {
    fn observe(&mut self, x: &[f64]) -> Result<Observation>;
}

impl<F> Objective for F
where
    F: FnMut(&[f64]) -> Result<Observation>,
{
    fn observe(&mut self, x: &[f64]) -> Result<Observation> {
        self(x)
    }
}

/// Noiseless access to the function being optimized, used only for
/// reporting (regret, gaps, profit).
pub trait Truth: Sync {
    fn value(&self, x: &[f64]) -> Result<f64>;

    /// Best attainable value in the goal's sense, if known.
    fn optimum(&self) -> Option<f64> {
        None
    }
}

impl<F> Truth for F
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    fn value(&self, x: &[f64]) -> Result<f64> {
        self(x)
    }
}

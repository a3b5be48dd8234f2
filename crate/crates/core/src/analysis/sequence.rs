//! Posteriors conditioned on every prefix of a dataset, from one
//! factorization of the full kernel matrix.

use crate::error::Result;
use crate::gp::{Dataset, GpPosterior, PointQuery, PreprocessState};
use crate::kernels::KernelSpec;

/// `μ_t`, `σ²_t` and `σ_t(·,·)` for every `t = 0..=n`, where index `t`
/// means "conditioned on the first `t` observations". All values are on the
/// model's (standardized) scale.
#[derive(Clone, Debug)]
pub struct PosteriorSequence {
    gp: GpPosterior,
    z: Vec<f64>,
}

impl PosteriorSequence {
    pub fn new(kernel: KernelSpec, data: &Dataset, preprocess: PreprocessState, jitter: f64) -> Result<Self> {
        let gp = GpPosterior::fit_with(kernel, data, preprocess, jitter)?;
        let z = gp.whitened_targets();
        Ok(PosteriorSequence { gp, z })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn kernel(&self) -> &KernelSpec {
        self.gp.kernel()
    }

    pub fn full(&self) -> &GpPosterior {
        &self.gp
    }

    /// Standardized noise variance of observation `i` (0-based).
    pub fn noise_var(&self, i: usize) -> f64 {
        self.gp.noise_vars()[i]
    }

    pub fn query(&self, x: &[f64]) -> PointQuery {
        self.gp.query(x)
    }

    pub fn mean(&self, t: usize, q: &PointQuery) -> f64 {
        q.whitened()[..t].iter().zip(&self.z[..t]).map(|(a, b)| a * b).sum()
    }

    pub fn var(&self, t: usize, q: &PointQuery) -> f64 {
        let w = &q.whitened()[..t];
        self.kernel().amplitude() - w.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn std(&self, t: usize, q: &PointQuery) -> f64 {
        self.var(t, q).max(0.0).sqrt()
    }

    pub fn cov(&self, t: usize, a: &PointQuery, b: &PointQuery) -> f64 {
        let prior = self.kernel().eval_unchecked(&a.unit, &b.unit);
        prior
            - a.whitened()[..t]
                .iter()
                .zip(&b.whitened()[..t])
                .map(|(x, y)| x * y)
                .sum::<f64>()
    }

    /// `σ²_{t}(x_{t+1})` for each observation: the variance at each point
    /// given the observations before it.
    pub fn predictive_variances(&self) -> Vec<f64> {
        let inputs = self.gp.train_inputs();
        (0..self.len())
            .map(|i| {
                let q = self.gp.query_unit(inputs[i].clone());
                self.var(i, &q)
            })
            .collect()
    }
}

//! Mutual information between noisy observations and latent values at the
//! selected points, computed two ways: as a sum of per-step predictive
//! terms, and from the log-determinant of `I + Σ⁻¹K`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoGainReport {
    pub sequential_value: f64,
    pub logdet_value: f64,
    /// `½ log(1 + υ_t⁻² σ²_{t−1}(x_t))`.
    pub per_step_terms: Vec<f64>,
}

impl InfoGainReport {
    pub fn discrepancy(&self) -> f64 {
        (self.sequential_value - self.logdet_value).abs()
    }
}

/// `½ Σ log(1 + υ_t⁻² σ²_{t−1}(x_t))` and its terms.
pub fn info_gain_terms(variances: &[f64], noise_vars: &[f64]) -> Result<Vec<f64>> {
    if variances.len() != noise_vars.len() {
        return Err(Error::input(format!(
            "{} variances but {} noise variances",
            variances.len(),
            noise_vars.len()
        )));
    }
    variances
        .iter()
        .zip(noise_vars)
        .enumerate()
        .map(|(i, (&s2, &v))| {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::input(format!(
                    "noise variance at step {i} is {v}; information gain needs positive noise"
                )));
            }
            if !(s2 >= 0.0 && s2.is_finite()) {
                return Err(Error::input(format!("variance at step {i} is {s2}")));
            }
            Ok(0.5 * (s2 / v).ln_1p())
        })
        .collect()
}

pub fn info_gain_sequential(variances: &[f64], noise_vars: &[f64]) -> Result<f64> {
    Ok(info_gain_terms(variances, noise_vars)?.iter().sum())
}

// Symmetric-part eigenvalues below this fraction of the largest diagonal
// entry count as a non-PSD input.
const PSD_TOL: f64 = 1e-8;

/// `½ log det(I + Σ⁻¹K)`, computed as `Σ log L_ii` for the Cholesky factor
/// `L` of the symmetric `I + Σ^{−1/2} K Σ^{−1/2}`.
pub fn info_gain_logdet(k: &DMatrix<f64>, noise_vars: &[f64]) -> Result<f64> {
    let n = k.nrows();
    if k.ncols() != n || noise_vars.len() != n {
        return Err(Error::input("kernel matrix and noise variances disagree in size"));
    }
    if let Some(v) = noise_vars.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::input(format!("noise variance {v} is not positive")));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let scale = k.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let asym = (k - k.transpose()).abs().max();
    if asym > PSD_TOL * scale {
        return Err(Error::input(format!("kernel matrix is not symmetric (max |K − Kᵀ| = {asym:e})")));
    }
    let min_eig = k.clone().symmetric_eigenvalues().min();
    if min_eig < -PSD_TOL * scale {
        return Err(Error::input(format!(
            "kernel matrix is not positive semidefinite (smallest eigenvalue {min_eig:e})"
        )));
    }
    let inv_sd: Vec<f64> = noise_vars.iter().map(|v| 1.0 / v.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let base = if i == j { 1.0 } else { 0.0 };
        base + inv_sd[i] * k[(i, j)] * inv_sd[j]
    });
    let chol = nalgebra::Cholesky::new(m)
        .ok_or_else(|| Error::numerical("I + Σ^{-1/2} K Σ^{-1/2} failed to factor"))?;
    Ok(chol.l().diagonal().iter().map(|d| d.ln()).sum())
}

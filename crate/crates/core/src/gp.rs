//! Gaussian-process regression with known, per-observation noise variances.
//!
//! Inputs are min-max normalized to the unit cube using the declared search
//! box; outputs are standardized to zero mean and unit variance, and every
//! noise variance is divided by the squared output scale so that the model
//! equations hold on the standardized scale. The prior mean is zero on that
//! scale.
//!
//! Query methods take points in original input units. [`GpPosterior::mean`]
//! answers in original output units; variances and covariances are on the
//! standardized scale, where the prior variance is the kernel amplitude.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};

/// Default diagonal jitter, relative to the kernel amplitude.
pub const DEFAULT_JITTER: f64 = 1e-10;

/// Number of ×10 jitter escalations attempted after a failed factorization.
pub const JITTER_RETRIES: u32 = 3;

/// Observed triples `(x_i, y_i, υ_i²)` in original units.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
    noise_vars: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<f64>, noise_vars: Vec<f64>) -> Result<Self> {
        if inputs.len() != outputs.len() || inputs.len() != noise_vars.len() {
            return Err(Error::input(format!(
                "dataset lengths differ: {} inputs, {} outputs, {} noise variances",
                inputs.len(),
                outputs.len(),
                noise_vars.len()
            )));
        }
        let mut data = Dataset::default();
        for ((x, y), v) in inputs.into_iter().zip(outputs).zip(noise_vars) {
            data.push(x, y, v)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64, noise_var: f64) -> Result<()> {
        if let Some(first) = self.inputs.first() {
            if first.len() != x.len() {
                return Err(Error::input(format!(
                    "input has dimension {}, dataset has {}",
                    x.len(),
                    first.len()
                )));
            }
        }
        if !y.is_finite() {
            return Err(Error::input(format!("non-finite output {y}")));
        }
        if !(noise_var.is_finite() && noise_var >= 0.0) {
            return Err(Error::input(format!(
                "noise variance must be finite and nonnegative, got {noise_var}"
            )));
        }
        self.inputs.push(x);
        self.outputs.push(y);
        self.noise_vars.push(noise_var);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.inputs.first().map(Vec::len)
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn noise_vars(&self) -> &[f64] {
        &self.noise_vars
    }

    /// The first `n` observations.
    pub fn prefix(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            inputs: self.inputs[..n].to_vec(),
            outputs: self.outputs[..n].to_vec(),
            noise_vars: self.noise_vars[..n].to_vec(),
        }
    }
}

/// Normalization and standardization constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessState {
    input_lo: Vec<f64>,
    input_hi: Vec<f64>,
    output_mean: f64,
    output_std: f64,
}

impl PreprocessState {
    pub fn new(bounds: &Bounds, output_mean: f64, output_std: f64) -> Result<Self> {
        if !output_mean.is_finite() {
            return Err(Error::input("output mean must be finite"));
        }
        if !(output_std.is_finite() && output_std > 0.0) {
            return Err(Error::input(format!(
                "output scale must be positive, got {output_std}"
            )));
        }
        Ok(PreprocessState {
            input_lo: bounds.lower(),
            input_hi: bounds.upper(),
            output_mean,
            output_std,
        })
    }

    /// Standardizes with the sample mean and (population) standard deviation
    /// of `outputs`. A degenerate spread falls back to unit scale.
    pub fn standardizing(bounds: &Bounds, outputs: &[f64]) -> Self {
        let n = outputs.len();
        let (mean, std) = if n == 0 {
            (0.0, 1.0)
        } else {
            let mean = outputs.iter().sum::<f64>() / n as f64;
            let var = outputs.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n as f64;
            let std = var.sqrt();
            if std > 1e-12 * (1.0 + mean.abs()) {
                (mean, std)
            } else {
                (mean, 1.0)
            }
        };
        PreprocessState {
            input_lo: bounds.lower(),
            input_hi: bounds.upper(),
            output_mean: mean,
            output_std: std,
        }
    }

    /// Normalizes inputs but leaves outputs untouched.
    pub fn unscaled(bounds: &Bounds) -> Self {
        PreprocessState {
            input_lo: bounds.lower(),
            input_hi: bounds.upper(),
            output_mean: 0.0,
            output_std: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.input_lo.len()
    }

    pub fn output_mean(&self) -> f64 {
        self.output_mean
    }

    pub fn output_std(&self) -> f64 {
        self.output_std
    }

    pub fn bounds(&self) -> Bounds {
        Bounds::new(
            self.input_lo
                .iter()
                .copied()
                .zip(self.input_hi.iter().copied())
                .collect(),
        )
        .expect("preprocess bounds validated at construction")
    }

    pub fn normalize_input(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim(), "query dimension mismatch");
        x.iter()
            .zip(self.input_lo.iter().zip(&self.input_hi))
            .map(|(&v, (&lo, &hi))| (v - lo) / (hi - lo))
            .collect()
    }

    pub fn denormalize_input(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.input_lo.iter().zip(&self.input_hi))
            .map(|(&v, (&lo, &hi))| lo + v * (hi - lo))
            .collect()
    }

    pub fn standardize_output(&self, y: f64) -> f64 {
        (y - self.output_mean) / self.output_std
    }

    pub fn destandardize_output(&self, z: f64) -> f64 {
        z * self.output_std + self.output_mean
    }

    pub fn standardize_noise_var(&self, v: f64) -> f64 {
        v / (self.output_std * self.output_std)
    }
}

/// Posterior moments at one point, with the whitened cross-covariance
/// `L⁻¹ k(x)` kept for cheap covariance queries against other points.
#[derive(Clone, Debug)]
pub struct PointQuery {
    pub unit: Vec<f64>,
    pub mean: f64,
    pub var: f64,
    whitened: Vec<f64>,
}

impl PointQuery {
    /// `L⁻¹k(x)` for the training factor `L`.
    pub fn whitened(&self) -> &[f64] {
        &self.whitened
    }
}

/// Joint standardized posterior of `(f(a), f(b))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointMoments {
    pub mean_a: f64,
    pub mean_b: f64,
    pub var_a: f64,
    pub var_b: f64,
    pub cov: f64,
}

/// A fitted model. Immutable once built.
#[derive(Clone, Debug)]
pub struct GpPosterior {
    kernel: KernelSpec,
    preprocess: PreprocessState,
    train: Vec<Vec<f64>>,
    noise_vars: Vec<f64>,
    targets: Vec<f64>,
    // Row-major lower-triangular Cholesky factor of K + Σ + jitter·I.
    chol: Vec<f64>,
    weights: Vec<f64>,
    jitter: f64,
}

impl GpPosterior {
    /// Fits with outputs standardized from `data` and inputs normalized to
    /// `bounds`. `jitter` is relative to the kernel amplitude.
    pub fn fit(kernel: KernelSpec, data: &Dataset, bounds: &Bounds, jitter: f64) -> Result<Self> {
        let pre = PreprocessState::standardizing(bounds, data.outputs());
        Self::fit_with(kernel, data, pre, jitter)
    }

    /// Fits with caller-supplied preprocessing constants.
    pub fn fit_with(
        kernel: KernelSpec,
        data: &Dataset,
        preprocess: PreprocessState,
        jitter: f64,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::input("cannot fit a posterior to an empty dataset"));
        }
        if data.dim() != Some(preprocess.dim()) {
            return Err(Error::input(format!(
                "data dimension {:?} does not match bounds dimension {}",
                data.dim(),
                preprocess.dim()
            )));
        }
        if !(jitter.is_finite() && jitter >= 0.0) {
            return Err(Error::input(format!("jitter must be nonnegative, got {jitter}")));
        }
        let train: Vec<Vec<f64>> = data
            .inputs()
            .iter()
            .map(|x| preprocess.normalize_input(x))
            .collect();
        let noise_vars: Vec<f64> = data
            .noise_vars()
            .iter()
            .map(|&v| preprocess.standardize_noise_var(v))
            .collect();
        let targets: Vec<f64> = data
            .outputs()
            .iter()
            .map(|&y| preprocess.standardize_output(y))
            .collect();

        let (factor, jitter_abs) = factorize(&kernel, &train, &noise_vars, jitter)?;
        let n = train.len();
        let mut chol = vec![0.0; n * n];
        let l = factor.l();
        for i in 0..n {
            for j in 0..=i {
                chol[i * n + j] = l[(i, j)];
            }
        }
        let mut gp = GpPosterior {
            kernel,
            preprocess,
            train,
            noise_vars,
            targets,
            chol,
            weights: Vec::new(),
            jitter: jitter_abs,
        };
        let half = gp.forward_solve(&gp.targets);
        gp.weights = gp.backward_solve(&half);
        Ok(gp)
    }

    /// The prior: a posterior conditioned on nothing.
    pub fn prior(kernel: KernelSpec, preprocess: PreprocessState) -> Self {
        GpPosterior {
            kernel,
            preprocess,
            train: Vec::new(),
            noise_vars: Vec::new(),
            targets: Vec::new(),
            chol: Vec::new(),
            weights: Vec::new(),
            jitter: 0.0,
        }
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn preprocess(&self) -> &PreprocessState {
        &self.preprocess
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }

    /// Absolute jitter that was added to the diagonal.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Training inputs in normalized units.
    pub fn train_inputs(&self) -> &[Vec<f64>] {
        &self.train
    }

    /// Noise variances on the standardized scale.
    pub fn noise_vars(&self) -> &[f64] {
        &self.noise_vars
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Solution of `(K + Σ)w = ỹ`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The Cholesky factor as a dense matrix.
    pub fn factor(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| if j <= i { self.chol[i * n + j] } else { 0.0 })
    }

    /// Posterior mean in original output units.
    pub fn mean(&self, x: &[f64]) -> f64 {
        self.preprocess.destandardize_output(self.latent_mean(x))
    }

    /// Posterior mean on the standardized scale.
    pub fn latent_mean(&self, x: &[f64]) -> f64 {
        let u = self.preprocess.normalize_input(x);
        self.mean_unit(&u)
    }

    /// Posterior variance on the standardized scale.
    pub fn variance(&self, x: &[f64]) -> f64 {
        self.query(x).var
    }

    pub fn std_dev(&self, x: &[f64]) -> f64 {
        self.variance(x).max(0.0).sqrt()
    }

    /// Posterior covariance `σ(a, b)` on the standardized scale.
    pub fn covariance(&self, a: &[f64], b: &[f64]) -> f64 {
        let qa = self.query(a);
        let qb = self.query(b);
        self.cross_covariance(&qa, &qb)
    }

    pub fn joint(&self, a: &[f64], b: &[f64]) -> JointMoments {
        let qa = self.query(a);
        let qb = self.query(b);
        JointMoments {
            mean_a: qa.mean,
            mean_b: qb.mean,
            var_a: qa.var,
            var_b: qb.var,
            cov: self.cross_covariance(&qa, &qb),
        }
    }

    /// Posterior moments at a point in original input units.
    pub fn query(&self, x: &[f64]) -> PointQuery {
        let u = self.preprocess.normalize_input(x);
        self.query_unit(u)
    }

    /// Posterior moments at a point of the normalized cube.
    pub fn query_unit(&self, u: Vec<f64>) -> PointQuery {
        let k = self.cross_kernel(&u);
        let mean = dot(&k, &self.weights);
        let whitened = self.forward_solve(&k);
        let var = self.kernel.amplitude() - dot(&whitened, &whitened);
        PointQuery {
            unit: u,
            mean,
            var,
            whitened,
        }
    }

    pub fn cross_covariance(&self, a: &PointQuery, b: &PointQuery) -> f64 {
        self.kernel.eval_unchecked(&a.unit, &b.unit) - dot(&a.whitened, &b.whitened)
    }

    /// `L⁻¹ỹ`. Because a Cholesky factor's leading block factors the leading
    /// block of the matrix, prefixes of this vector and of
    /// [`PointQuery::whitened`] give the posterior conditioned on the first
    /// observations only.
    pub fn whitened_targets(&self) -> Vec<f64> {
        self.forward_solve(&self.targets)
    }

    pub(crate) fn mean_unit(&self, u: &[f64]) -> f64 {
        self.train
            .iter()
            .zip(&self.weights)
            .map(|(xi, w)| w * self.kernel.eval_unchecked(xi, u))
            .sum()
    }

    fn cross_kernel(&self, u: &[f64]) -> Vec<f64> {
        self.train
            .iter()
            .map(|xi| self.kernel.eval_unchecked(xi, u))
            .collect()
    }

    fn forward_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = &self.chol[i * n..i * n + i];
            let s = b[i] - dot(row, &out[..i]);
            out[i] = s / self.chol[i * n + i];
        }
        out
    }

    fn backward_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= self.chol[j * n + i] * out[j];
            }
            out[i] = s / self.chol[i * n + i];
        }
        out
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky of `K + Σ + jitter·amplitude·I`, escalating the jitter ×10 up to
/// [`JITTER_RETRIES`] times. Returns the factor and the absolute jitter used.
fn factorize(
    kernel: &KernelSpec,
    train: &[Vec<f64>],
    noise_vars: &[f64],
    jitter: f64,
) -> Result<(Cholesky<f64, nalgebra::Dyn>, f64)> {
    let mut base = kernel.matrix(train)?;
    for (i, v) in noise_vars.iter().enumerate() {
        base[(i, i)] += v;
    }
    let amp = kernel.amplitude();
    let mut rel = jitter;
    for attempt in 0..=JITTER_RETRIES {
        if attempt > 0 {
            rel = if rel > 0.0 { rel * 10.0 } else { DEFAULT_JITTER };
        }
        let abs = rel * amp;
        let mut m = base.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += abs;
        }
        if let Some(c) = Cholesky::new(m) {
            return Ok((c, abs));
        }
    }
    let eig = base.symmetric_eigenvalues();
    Err(Error::numerical(format!(
        "Cholesky failed for n = {} after {} jitter escalations (final relative jitter {rel:e}); \
         eigenvalue range [{:e}, {:e}]",
        train.len(),
        JITTER_RETRIES,
        eig.min(),
        eig.max()
    )))
}

/// Gaussian log marginal likelihood of the standardized outputs,
/// `−½ỹᵀ(K+Σ)⁻¹ỹ − ½log det(K+Σ) − (n/2)log 2π`.
pub fn log_marginal_likelihood(
    kernel: KernelSpec,
    data: &Dataset,
    preprocess: &PreprocessState,
    jitter: f64,
) -> Result<f64> {
    let gp = GpPosterior::fit_with(kernel, data, preprocess.clone(), jitter)?;
    Ok(gp.log_marginal_likelihood())
}

impl GpPosterior {
    /// Log marginal likelihood of the training targets under this model.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len();
        let fit = dot(&self.targets, &self.weights);
        let log_det: f64 = (0..n).map(|i| self.chol[i * n + i].ln()).sum::<f64>() * 2.0;
        -0.5 * fit - 0.5 * log_det - 0.5 * n as f64 * (2.0 * PI).ln()
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// The default length-scale grid: 13 points from 1e-2 to 1e1.
pub fn default_length_scale_grid() -> Vec<f64> {
    log_grid(1e-2, 1e1, 13)
}

const GOLDEN_ITERS: usize = 30;

/// Maximum-likelihood length scale (amplitude fixed at 1): scan `grid`,
/// then refine by golden-section search in log-length-scale on the interval
/// bracketing the best grid point. Ties go to the larger length scale.
pub fn fit_hyperparameters(
    family: KernelFamily,
    data: &Dataset,
    preprocess: &PreprocessState,
    grid: &[f64],
    jitter: f64,
) -> Result<KernelSpec> {
    if grid.is_empty() {
        return Err(Error::input("length-scale grid is empty"));
    }
    let mut grid: Vec<f64> = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let lml = |ls: f64| -> Option<f64> {
        let spec = KernelSpec::unit(family, ls).ok()?;
        log_marginal_likelihood(spec, data, preprocess, jitter)
            .ok()
            .filter(|v| v.is_finite())
    };

    let scores: Vec<Option<f64>> = grid.iter().map(|&ls| lml(ls)).collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter().enumerate() {
        if let Some(v) = *s {
            if best.is_none_or(|(_, b)| v >= b) {
                best = Some((i, v));
            }
        }
    }
    let (bi, best_score) = best.ok_or_else(|| {
        Error::numerical(format!(
            "log marginal likelihood failed for all {} length-scale candidates",
            grid.len()
        ))
    })?;
    if grid.len() == 1 {
        return KernelSpec::unit(family, grid[0]);
    }

    let lo = grid[bi.saturating_sub(1)].ln();
    let hi = grid[(bi + 1).min(grid.len() - 1)].ln();
    let neg = |t: f64| lml(t.exp()).map_or(f64::INFINITY, |v| -v);
    let t = golden_section_min(neg, lo, hi, GOLDEN_ITERS);
    let refined = t.exp();
    match lml(refined) {
        Some(v) if v > best_score => KernelSpec::unit(family, refined),
        _ => KernelSpec::unit(family, grid[bi]),
    }
}

/// Golden-section minimization of `f` on `[a, b]`; returns the best abscissa
/// visited.
pub(crate) fn golden_section_min<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    iters: usize,
) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let (mut best_x, mut best_f) = if fc <= fd { (c, fc) } else { (d, fd) };
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            if fc < best_f {
                best_x = c;
                best_f = fc;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            if fd < best_f {
                best_x = d;
                best_f = fd;
            }
        }
    }
    best_x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_box(d: usize) -> Bounds {
        Bounds::unit(d)
    }

    fn se(ls: f64) -> KernelSpec {
        KernelSpec::unit(KernelFamily::SquaredExponential, ls).unwrap()
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![vec![0.0]], vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(Dataset::new(vec![vec![0.0]], vec![1.0], vec![-1.0]).is_err());
        assert!(Dataset::new(vec![vec![0.0]], vec![1.0], vec![f64::INFINITY]).is_err());
        assert!(Dataset::new(vec![vec![0.0], vec![0.0, 1.0]], vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Dataset::new(vec![vec![0.0]], vec![1.0], vec![0.0]).is_ok());
    }

    #[test]
    fn empty_dataset_rejected() {
        let r = GpPosterior::fit(se(1.0), &Dataset::default(), &unit_box(1), 0.0);
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn preprocess_round_trip() {
        let b = Bounds::new(vec![(-600.0, 600.0), (0.0, 1e-3), (3.0, 7.5)]).unwrap();
        let p = PreprocessState::standardizing(&b, &[1.0, 4.0, -2.0]);
        let x = [123.456, 7.7e-4, 4.1];
        let back = p.denormalize_input(&p.normalize_input(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
        let y = 3.25;
        assert!((p.destandardize_output(p.standardize_output(y)) - y).abs() < 1e-12);
    }

    #[test]
    fn single_observation_hand_solution() {
        // Unscaled outputs: (1 + 1)w = ỹ so μ = ỹ/2 and σ² = 1 − 1/2.
        let data = Dataset::new(vec![vec![0.3]], vec![0.8], vec![1.0]).unwrap();
        let pre = PreprocessState::unscaled(&unit_box(1));
        let gp = GpPosterior::fit_with(se(0.5), &data, pre, 0.0).unwrap();
        assert!((gp.mean(&[0.3]) - 0.4).abs() < 1e-14);
        assert!((gp.variance(&[0.3]) - 0.5).abs() < 1e-14);

        // Standardized: a single output has ỹ = 0 and unit scale.
        let gp = GpPosterior::fit(se(0.5), &data, &unit_box(1), 0.0).unwrap();
        assert!((gp.latent_mean(&[0.3]) - 0.0).abs() < 1e-14);
        assert!((gp.mean(&[0.3]) - 0.8).abs() < 1e-14);
    }

    #[test]
    fn noiseless_interpolates() {
        let xs = vec![vec![0.1], vec![0.5], vec![0.9]];
        let ys = vec![1.0, -2.0, 0.5];
        let data = Dataset::new(xs.clone(), ys.clone(), vec![0.0; 3]).unwrap();
        let gp = GpPosterior::fit(se(0.2), &data, &unit_box(1), 0.0).unwrap();
        assert_eq!(gp.jitter(), 0.0);
        for (x, y) in xs.iter().zip(&ys) {
            assert!((gp.mean(x) - y).abs() < 1e-8);
            assert!(gp.variance(x).abs() < 1e-8);
        }
    }

    #[test]
    fn far_query_reverts_to_prior_mean() {
        let data =
            Dataset::new(vec![vec![0.0], vec![0.05]], vec![3.0, 5.0], vec![0.01, 0.01]).unwrap();
        let b = Bounds::new(vec![(0.0, 1.0)]).unwrap();
        let gp = GpPosterior::fit(se(0.01), &data, &b, DEFAULT_JITTER).unwrap();
        let m = gp.mean(&[0.9]);
        assert!((m - gp.preprocess().output_mean()).abs() < 1e-6);
        assert!((gp.variance(&[0.9]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prior_covariance_is_kernel() {
        let k = KernelSpec::unit(KernelFamily::Matern52, 0.3).unwrap();
        let gp = GpPosterior::prior(k, PreprocessState::unscaled(&unit_box(2)));
        let (a, b) = ([0.1, 0.2], [0.4, 0.9]);
        assert_eq!(gp.covariance(&a, &b), k.eval(&a, &b).unwrap());
        assert_eq!(gp.variance(&a), 1.0);
        assert_eq!(gp.latent_mean(&a), 0.0);
    }

    #[test]
    fn factor_reconstructs_regularized_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.random(), rng.random()]).collect();
        let ys: Vec<f64> = (0..12).map(|_| rng.random()).collect();
        let vs: Vec<f64> = (0..12).map(|_| rng.random::<f64>() * 0.1).collect();
        let data = Dataset::new(xs, ys, vs).unwrap();
        let k = se(0.3);
        let gp = GpPosterior::fit(k, &data, &unit_box(2), DEFAULT_JITTER).unwrap();
        let mut target = k.matrix(gp.train_inputs()).unwrap();
        for i in 0..12 {
            target[(i, i)] += gp.noise_vars()[i] + gp.jitter();
        }
        let l = gp.factor();
        let err = (&l * l.transpose() - &target).norm() / target.norm();
        assert!(err < 1e-8, "relative reconstruction error {err}");
    }

    #[test]
    fn jitter_escalates_for_duplicates() {
        let data = Dataset::new(vec![vec![0.5]; 3], vec![1.0, 1.0, 1.0], vec![0.0; 3]).unwrap();
        let gp = GpPosterior::fit(se(0.3), &data, &unit_box(1), 0.0).unwrap();
        assert!(gp.jitter() > 0.0);
    }

    #[test]
    fn lml_single_observation() {
        let data = Dataset::new(vec![vec![0.5]], vec![0.0], vec![1.0]).unwrap();
        let pre = PreprocessState::unscaled(&unit_box(1));
        let v = log_marginal_likelihood(se(1.0), &data, &pre, 0.0).unwrap();
        let expected = -0.5 * 2f64.ln() - 0.5 * (2.0 * PI).ln();
        assert!((v - expected).abs() < 1e-14);
        assert!((v + 1.26551).abs() < 1e-5);
    }

    #[test]
    fn lml_large_noise_limit() {
        let y = 1.7;
        let data = Dataset::new(vec![vec![0.5]], vec![y], vec![1e6]).unwrap();
        let pre = PreprocessState::unscaled(&unit_box(1));
        let v = log_marginal_likelihood(se(1.0), &data, &pre, 0.0).unwrap();
        let limit = -0.5 * y * y / 1e6 - 0.5 * 1e6f64.ln() - 0.5 * (2.0 * PI).ln();
        assert!((v - limit).abs() < 1e-3);
    }

    #[test]
    fn single_candidate_grid() {
        let data = Dataset::new(vec![vec![0.2], vec![0.7]], vec![1.0, 2.0], vec![0.1, 0.1]).unwrap();
        let pre = PreprocessState::standardizing(&unit_box(1), data.outputs());
        let k = fit_hyperparameters(KernelFamily::Matern52, &data, &pre, &[0.37], DEFAULT_JITTER)
            .unwrap();
        assert_eq!(k.length_scale(), 0.37);
        assert!(fit_hyperparameters(KernelFamily::Matern52, &data, &pre, &[], 0.0).is_err());
    }

    #[test]
    fn constant_outputs_prefer_longest_scale() {
        let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
        let data = Dataset::new(xs, vec![2.5; 8], vec![0.01; 8]).unwrap();
        let pre = PreprocessState::standardizing(&unit_box(1), data.outputs());
        let grid = default_length_scale_grid();
        let k = fit_hyperparameters(KernelFamily::Matern52, &data, &pre, &grid, DEFAULT_JITTER)
            .unwrap();
        assert!(k.length_scale() >= grid[grid.len() - 2]);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = golden_section_min(|x| (x - 0.3).powi(2), -1.0, 2.0, 60);
        assert!((x - 0.3).abs() < 1e-9);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = default_length_scale_grid();
        assert_eq!(g.len(), 13);
        assert!((g[0] - 1e-2).abs() < 1e-15);
        assert!((g[12] - 10.0).abs() < 1e-12);
        assert!((g[4] - 0.1).abs() < 1e-12);
    }
}

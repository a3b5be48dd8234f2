#![allow(dead_code)]

use corrected_ei::{Bounds, Dataset, GpPosterior, KernelSpec};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Random heteroscedastic data on a box, with a smooth signal.
pub fn random_data<R: Rng>(rng: &mut R, n: usize, bounds: &Bounds, noise_std: (f64, f64)) -> Dataset {
    let inputs: Vec<Vec<f64>> = (0..n)
        .map(|_| bounds.ranges().iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect())
        .collect();
    let outputs = inputs
        .iter()
        .map(|x| {
            let u = bounds.to_unit(x);
            u.iter().enumerate().map(|(i, v)| ((3.0 + i as f64) * v).sin()).sum::<f64>() * 2.0 + 5.0
        })
        .collect();
    let noise = (0..n)
        .map(|_| {
            if noise_std.1 > 0.0 {
                rng.random_range(noise_std.0..noise_std.1).powi(2)
            } else {
                0.0
            }
        })
        .collect();
    Dataset::new(inputs, outputs, noise).unwrap()
}

/// Posterior moments by an LU solve of the dense system, on the model's
/// standardized scale.
pub struct DenseOracle {
    kernel: KernelSpec,
    train: Vec<Vec<f64>>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    alpha: DVector<f64>,
}

impl DenseOracle {
    pub fn new(gp: &GpPosterior, data: &Dataset) -> Self {
        let pre = gp.preprocess();
        let kernel = *gp.kernel();
        let train: Vec<Vec<f64>> = data.inputs().iter().map(|x| pre.normalize_input(x)).collect();
        let n = train.len();
        let mut a = DMatrix::from_fn(n, n, |i, j| kernel.eval(&train[i], &train[j]).unwrap());
        for i in 0..n {
            a[(i, i)] += pre.standardize_noise_var(data.noise_vars()[i]) + gp.jitter();
        }
        let y = DVector::from_iterator(n, data.outputs().iter().map(|&v| pre.standardize_output(v)));
        let lu = a.lu();
        let alpha = lu.solve(&y).unwrap();
        DenseOracle { kernel, train, lu, alpha }
    }

    fn kvec(&self, u: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.train.len(), self.train.iter().map(|t| self.kernel.eval(t, u).unwrap()))
    }

    /// `(mean, cov(a, b))` at normalized points.
    pub fn mean(&self, u: &[f64]) -> f64 {
        self.kvec(u).dot(&self.alpha)
    }

    pub fn cov(&self, ua: &[f64], ub: &[f64]) -> f64 {
        let ka = self.kvec(ua);
        let kb = self.kvec(ub);
        self.kernel.eval(ua, ub).unwrap() - ka.dot(&self.lu.solve(&kb).unwrap())
    }
}

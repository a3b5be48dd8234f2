//! Stationary prior covariance functions.
//!
//! Both families are isotropic: a single length scale is shared by every
//! input dimension. The Matérn kernel is fixed at smoothness 5/2, where it
//! has the closed form `(1 + s + s²/3)·exp(−s)` with `s = √5·r/ℓ`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Matern52,
    SquaredExponential,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Matern52 => "matern52",
            KernelFamily::SquaredExponential => "squared_exponential",
        }
    }
}

/// Kernel family plus hyperparameters. `amplitude` is the prior variance
/// `k(x, x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    family: KernelFamily,
    length_scale: f64,
    amplitude: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, length_scale: f64, amplitude: f64) -> Result<Self> {
        if !(length_scale.is_finite() && length_scale > 0.0) {
            return Err(Error::input(format!(
                "length scale must be positive and finite, got {length_scale}"
            )));
        }
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::input(format!(
                "amplitude must be positive and finite, got {amplitude}"
            )));
        }
        Ok(KernelSpec {
            family,
            length_scale,
            amplitude,
        })
    }

    /// Unit-amplitude kernel of the given family.
    pub fn unit(family: KernelFamily, length_scale: f64) -> Result<Self> {
        Self::new(family, length_scale, 1.0)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn with_length_scale(&self, length_scale: f64) -> Result<Self> {
        Self::new(self.family, length_scale, self.amplitude)
    }

    /// Covariance as a function of squared Euclidean distance.
    #[inline]
    pub fn of_sq_dist(&self, sq_dist: f64) -> f64 {
        let l = self.length_scale;
        let rho = match self.family {
            KernelFamily::SquaredExponential => (-0.5 * sq_dist / (l * l)).exp(),
            KernelFamily::Matern52 => {
                let s = 5f64.sqrt() * sq_dist.sqrt() / l;
                (1.0 + s + s * s / 3.0) * (-s).exp()
            }
        };
        self.amplitude * rho
    }

    /// Covariance at Euclidean distance `r`.
    pub fn of_distance(&self, r: f64) -> f64 {
        self.of_sq_dist(r * r)
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::input(format!(
                "dimension mismatch: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        Ok(self.eval_unchecked(a, b))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        self.of_sq_dist(sq_dist(a, b))
    }

    /// Gram matrix `[k(x_i, x_j)]`.
    pub fn matrix<P: AsRef<[f64]>>(&self, points: &[P]) -> Result<DMatrix<f64>> {
        check_same_dim(points)?;
        let n = points.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.amplitude;
            for j in 0..i {
                let v = self.eval_unchecked(points[i].as_ref(), points[j].as_ref());
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_same_dim<P: AsRef<[f64]>>(points: &[P]) -> Result<()> {
    if let Some(first) = points.first() {
        let d = first.as_ref().len();
        if let Some(i) = points.iter().position(|p| p.as_ref().len() != d) {
            return Err(Error::input(format!(
                "point {i} has dimension {}, expected {d}",
                points[i].as_ref().len()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn se() -> KernelSpec {
        KernelSpec::unit(KernelFamily::SquaredExponential, 1.0).unwrap()
    }

    fn matern() -> KernelSpec {
        KernelSpec::unit(KernelFamily::Matern52, 1.0).unwrap()
    }

    #[test]
    fn zero_distance_is_amplitude() {
        assert_eq!(se().eval(&[0.3, 0.1], &[0.3, 0.1]).unwrap(), 1.0);
        let k = KernelSpec::new(KernelFamily::Matern52, 0.2, 2.5).unwrap();
        assert_eq!(k.eval(&[1.0], &[1.0]).unwrap(), 2.5);
    }

    #[test]
    fn se_unit_distance() {
        let v = se().eval(&[0.0, 0.0], &[0.6, 0.8]).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.606531).abs() < 1e-6);
    }

    #[test]
    fn matern_unit_distance() {
        // 30-digit evaluation of (1 + √5 + 5/3)·exp(−√5).
        let v = matern().eval(&[0.0], &[1.0]).unwrap();
        assert!((v - 0.523994108831820310592713250761).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_input_error() {
        assert!(matches!(se().eval(&[0.0], &[0.0, 1.0]), Err(Error::Input(_))));
        assert!(se().matrix(&[vec![0.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn invalid_hyperparameters_rejected() {
        assert!(KernelSpec::new(KernelFamily::Matern52, 0.0, 1.0).is_err());
        assert!(KernelSpec::new(KernelFamily::Matern52, 1.0, -1.0).is_err());
        assert!(KernelSpec::new(KernelFamily::Matern52, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn small_matrices() {
        let m = se().matrix(&[vec![0.5]]).unwrap();
        assert_eq!(m.shape(), (1, 1));
        assert_eq!(m[(0, 0)], 1.0);

        let m = se().matrix(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(m.iter().all(|&v| v == 1.0));
    }

    fn arb_point(d: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-3.0f64..3.0, d)
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in arb_point(3), b in arb_point(3), ls in 0.05f64..5.0, amp in 0.1f64..4.0, matern in any::<bool>()) {
            let fam = if matern { KernelFamily::Matern52 } else { KernelFamily::SquaredExponential };
            let k = KernelSpec::new(fam, ls, amp).unwrap();
            let ab = k.eval(&a, &b).unwrap();
            let ba = k.eval(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab <= amp);
            prop_assert!(ab >= 0.0);
        }

        #[test]
        fn monotone_in_distance(r1 in 0.0f64..10.0, dr in 0.0f64..10.0, matern in any::<bool>()) {
            let fam = if matern { KernelFamily::Matern52 } else { KernelFamily::SquaredExponential };
            let k = KernelSpec::unit(fam, 0.7).unwrap();
            prop_assert!(k.of_distance(r1 + dr) <= k.of_distance(r1));
        }

        #[test]
        fn gram_matrix_is_psd(n in 1usize..=20, seed in any::<u64>(), ls in 0.05f64..2.0, matern in any::<bool>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
            let fam = if matern { KernelFamily::Matern52 } else { KernelFamily::SquaredExponential };
            let amp = 1.7;
            let k = KernelSpec::new(fam, ls, amp).unwrap();
            let m = k.matrix(&pts).unwrap();
            prop_assert_eq!(&m, &m.transpose());
            let eig = m.symmetric_eigenvalues();
            prop_assert!(eig.min() >= -1e-8 * amp);
        }
    }

    #[test]
    fn five_points_se_half_eigenvalues() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let k = KernelSpec::unit(KernelFamily::SquaredExponential, 0.5).unwrap();
        let eig = k.matrix(&pts).unwrap().symmetric_eigenvalues();
        assert!(eig.min() >= -1e-10);
    }

    #[test]
    fn translation_invariant() {
        let k = matern();
        let a = [0.25, 0.5];
        let b = [0.75, 0.0];
        let shift = [2.0, -4.0];
        let a2: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
        let b2: Vec<f64> = b.iter().zip(&shift).map(|(x, s)| x + s).collect();
        // Offsets are exact in binary, so the distance computation is unchanged.
        assert_eq!(k.eval(&a, &b).unwrap(), k.eval(&a2, &b2).unwrap());
    }
}

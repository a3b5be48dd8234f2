//! Standard normal density, distribution and the EI kernel `τ(z) = zΦ(z) + φ(z)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal density φ.
#[inline]
pub fn pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function Φ, via `erfc` so the lower tail
/// keeps full relative precision.
#[inline]
pub fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Beyond this |z| the direct formula loses relative precision.
const TAIL_SWITCH: f64 = 5.0;

/// `τ(z) = zΦ(z) + φ(z)`.
///
/// For `z < −5` the cancellation between `zΦ(z)` and `φ(z)` is avoided with
/// the continued fraction of the Mills ratio: writing
/// `R(t) = 1/(t + c)` with `c = 1/(t + 2/(t + 3/(t + …)))`,
/// `τ(−t) = φ(t)·c/(t + c)`. For `z > 5`, `τ(z) = z + τ(−z)`.
pub fn tau(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < -TAIL_SWITCH {
        lower_tail_tau(-z)
    } else if z > TAIL_SWITCH {
        z + lower_tail_tau(z)
    } else {
        z * cdf(z) + pdf(z)
    }
}

/// `τ(−t)` for large positive `t`.
fn lower_tail_tau(t: f64) -> f64 {
    let phi = pdf(t);
    if phi == 0.0 {
        return 0.0;
    }
    // Backward evaluation of c = 1/(t + 2/(t + 3/(t + ...))).
    let mut tail = 0.0;
    for k in (2..=120u32).rev() {
        tail = k as f64 / (t + tail);
    }
    let c = 1.0 / (t + tail);
    phi * c / (t + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_at_zero() {
        assert!((tau(0.0) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-16);
        assert!((tau(0.0) - 0.398942).abs() < 1e-6);
    }

    #[test]
    fn reflection_identity() {
        for z in [-3.0, -1.0, 0.5, 2.0, 4.99, 5.01, 7.5] {
            assert!((tau(z) - tau(-z) - z).abs() <= 1e-12, "z = {z}");
        }
    }

    #[test]
    fn deep_lower_tail_matches_asymptotic_series() {
        // τ(−t) = φ(t)/t² · (1 − 3/t² + 15/t⁴ − 105/t⁶ + 945/t⁸ − …)
        let t: f64 = 8.0;
        let u = 1.0 / (t * t);
        let series = pdf(t) * u * (1.0 - 3.0 * u + 15.0 * u * u - 105.0 * u.powi(3) + 945.0 * u.powi(4));
        let v = tau(-t);
        assert!(v > 0.0 && v < 1e-14);
        // Truncation error of the series is below the next term, 10395/t^10.
        assert!((v - series).abs() <= pdf(t) * u * 10395.0 * u.powi(5));
    }

    #[test]
    fn branches_agree_near_switch() {
        for t in [4.0, 5.0, 5.5, 6.0] {
            let direct = -t * cdf(-t) + pdf(t);
            let cf = lower_tail_tau(t);
            assert!((direct - cf).abs() < 1e-12 * cf, "t = {t}");
        }
    }

    #[test]
    fn extreme_arguments() {
        assert_eq!(tau(-50.0), 0.0);
        assert_eq!(tau(50.0), 50.0);
        assert!(tau(f64::NAN).is_nan());
    }

    #[test]
    fn cdf_symmetry() {
        for z in [0.1, 1.0, 3.0, 9.0] {
            assert!((cdf(z) + cdf(-z) - 1.0).abs() < 1e-15);
        }
        assert!((cdf(0.0) - 0.5).abs() < 1e-16);
    }
}

//! Independent numerical oracles for the closed-form acquisitions: Monte
//! Carlo over the joint posterior of `(f(x), f(x⁺))`, and adaptive
//! quadrature of the improvement integral.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::JointMoments;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// Sample mean of `max(0, f(x) − f(x⁺))`.
    pub improvement: f64,
    pub improvement_se: f64,
    /// Sample variance of `f(x) − f(x⁺)`.
    pub diff_var: f64,
    pub diff_var_se: f64,
}

/// Samples `(A, B)` from the bivariate normal described by `m` and returns
/// moments of `A − B`.
pub fn mc_improvement<R: Rng + ?Sized>(m: &JointMoments, n: usize, rng: &mut R) -> Result<McEstimate> {
    if n < 2 {
        return Err(Error::input("need at least two Monte Carlo samples"));
    }
    // 2×2 Cholesky with a PSD clamp on the conditional variance.
    let la = m.var_a.max(0.0).sqrt();
    let (c, lb) = if la > 0.0 {
        let c = m.cov / la;
        (c, (m.var_b - c * c).max(0.0).sqrt())
    } else {
        (0.0, m.var_b.max(0.0).sqrt())
    };
    let mean_d = m.mean_a - m.mean_b;
    let (mut s_imp, mut s_imp2) = (0.0, 0.0);
    // Central moments of the difference, accumulated around the known mean
    // so the sums stay well conditioned.
    let (mut s_d, mut s_d2, mut s_d4) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let a = la * z1;
        let b = c * z1 + lb * z2;
        let e = a - b;
        let imp = (mean_d + e).max(0.0);
        s_imp += imp;
        s_imp2 += imp * imp;
        s_d += e;
        s_d2 += e * e;
        s_d4 += e * e * e * e;
    }
    let nf = n as f64;
    let imp_mean = s_imp / nf;
    let imp_var = (s_imp2 / nf - imp_mean * imp_mean).max(0.0) * nf / (nf - 1.0);
    let d_mean = s_d / nf;
    let diff_var = (s_d2 / nf - d_mean * d_mean) * nf / (nf - 1.0);
    let m4 = s_d4 / nf;
    let diff_var_se = ((m4 - diff_var * diff_var).max(0.0) / nf).sqrt();
    Ok(McEstimate {
        improvement: imp_mean,
        improvement_se: (imp_var / nf).sqrt(),
        diff_var,
        diff_var_se,
    })
}

// Gauss–Kronrod 7/15 nodes and weights on [−1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth >= 50 {
            return v;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
    }
    recurse(&f, a, b, tol, 0)
}

/// `∫₀^∞ I · N(I; u, σ̃²) dI` by quadrature, truncated where the integrand
/// is below double precision.
pub fn improvement_integral(u: f64, sigma_tilde: f64, tol: f64) -> f64 {
    if sigma_tilde <= 0.0 {
        return u.max(0.0);
    }
    let upper = u.max(0.0) + 40.0 * sigma_tilde;
    let lower = (u - 40.0 * sigma_tilde).max(0.0);
    if upper <= lower {
        return 0.0;
    }
    let norm = 1.0 / (sigma_tilde * (2.0 * std::f64::consts::PI).sqrt());
    let density = |i: f64| {
        let s = (i - u) / sigma_tilde;
        i * norm * (-0.5 * s * s).exp()
    };
    integrate(density, lower, upper, tol)
}

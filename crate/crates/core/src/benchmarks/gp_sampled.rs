//! One-dimensional test functions drawn from a squared-exponential GP prior
//! on an even grid, evaluated by nearest-grid-point lookup.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};

pub const GRID_POINTS: usize = 4000;
pub const DOMAIN: (f64, f64) = (0.0, 40.0);
pub const LENGTH_SCALE: f64 = 3.0;
pub const AMPLITUDE: f64 = 1.0;
/// Observation noise standard deviation used with these functions.
pub const NOISE_STD: f64 = 0.16;

/// Values beyond this magnitude are implausible under the unit-variance
/// prior and worth a warning.
pub const PLAUSIBLE_BOUND: f64 = 8.0;

// Pivoted Cholesky stops once every remaining conditional variance is
// below this fraction of the amplitude.
const PIVOT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpSampledFunction {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

impl GpSampledFunction {
    /// Draws the standard function for `seed`: 4000 points on `[0, 40]`
    /// from SE(ℓ = 3, amplitude 1).
    pub fn sample(seed: u64) -> Result<Self> {
        let kernel = KernelSpec::new(KernelFamily::SquaredExponential, LENGTH_SCALE, AMPLITUDE)?;
        Self::sample_with(kernel, DOMAIN, GRID_POINTS, seed)
    }

    pub fn sample_with(kernel: KernelSpec, domain: (f64, f64), n: usize, seed: u64) -> Result<Self> {
        if n < 2 || !(domain.1 > domain.0) {
            return Err(Error::input("need at least two grid points on a nonempty interval"));
        }
        let grid = even_grid(domain, n);
        let factor = pivoted_cholesky(&kernel, &grid, PIVOT_TOL * kernel.amplitude())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..factor.rank).map(|_| StandardNormal.sample(&mut rng)).collect();
        let values = (0..n)
            .map(|i| {
                let row = &factor.cols;
                (0..factor.rank).map(|r| row[r][i] * z[r]).sum()
            })
            .collect();
        Ok(GpSampledFunction {
            lo: domain.0,
            hi: domain.1,
            values,
        })
    }

    pub fn from_grid(domain: (f64, f64), values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || !(domain.1 > domain.0) {
            return Err(Error::input("need at least two grid values on a nonempty interval"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("grid values must be finite"));
        }
        Ok(GpSampledFunction {
            lo: domain.0,
            hi: domain.1,
            values,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> Vec<f64> {
        even_grid((self.lo, self.hi), self.values.len())
    }

    pub fn grid_point(&self, j: usize) -> f64 {
        let step = (self.hi - self.lo) / (self.values.len() - 1) as f64;
        self.lo + j as f64 * step
    }

    pub fn nearest_index(&self, x: f64) -> usize {
        let n = self.values.len();
        let step = (self.hi - self.lo) / (n - 1) as f64;
        let j = ((x - self.lo) / step).round();
        j.clamp(0.0, (n - 1) as f64) as usize
    }

    /// Value at the grid point nearest to `x`.
    pub fn value(&self, x: f64) -> f64 {
        self.values[self.nearest_index(x)]
    }

    /// Grid index of the minimum (first one on ties).
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (j, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = j;
            }
        }
        best
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (j, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = j;
            }
        }
        best
    }

    pub fn range(&self) -> f64 {
        self.values[self.argmax()] - self.values[self.argmin()]
    }

    pub fn exceeds_plausible_bound(&self) -> bool {
        self.values.iter().any(|v| v.abs() > PLAUSIBLE_BOUND)
    }

    /// Writes `x,value` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["x", "value"])?;
        for (j, v) in self.values.iter().enumerate() {
            out.write_record([format!("{:.16e}", self.grid_point(j)), format!("{v:.16e}")])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a grid written by [`write_csv`](Self::write_csv). The grid must be
    /// evenly spaced.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::input(format!("bad grid row {rec:?}")))
            };
            xs.push(parse(0)?);
            values.push(parse(1)?);
        }
        if xs.len() < 2 {
            return Err(Error::input("grid file has fewer than two rows"));
        }
        let f = Self::from_grid((xs[0], xs[xs.len() - 1]), values)?;
        let step = (f.hi - f.lo) / (xs.len() - 1) as f64;
        for (j, &x) in xs.iter().enumerate() {
            if (x - f.grid_point(j)).abs() > 1e-9 * step.max(1.0) {
                return Err(Error::input(format!("grid row {j} at {x} is not evenly spaced")));
            }
        }
        Ok(f)
    }
}

fn even_grid((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|j| lo + j as f64 * step).collect()
}

pub(crate) struct LowRankFactor {
    /// Column-major: `cols[r][i]`.
    pub cols: Vec<Vec<f64>>,
    pub rank: usize,
}

/// Greedy pivoted Cholesky of the 1-d kernel matrix on `xs`, stopped when
/// the largest remaining diagonal entry falls below `tol`. `L Lᵀ` then
/// differs from `K` by a PSD matrix with trace at most `n·tol`.
pub(crate) fn pivoted_cholesky(kernel: &KernelSpec, xs: &[f64], tol: f64) -> Result<LowRankFactor> {
    let n = xs.len();
    let mut diag = vec![kernel.amplitude(); n];
    let mut cols: Vec<Vec<f64>> = Vec::new();
    loop {
        let (p, &dmax) = diag
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty grid");
        if dmax <= tol || cols.len() == n {
            return Ok(LowRankFactor {
                rank: cols.len(),
                cols,
            });
        }
        let root = dmax.sqrt();
        let mut col = vec![0.0; n];
        for i in 0..n {
            let mut v = kernel.of_distance(xs[i] - xs[p]);
            for c in &cols {
                v -= c[i] * c[p];
            }
            col[i] = v / root;
        }
        col[p] = root;
        for i in 0..n {
            diag[i] -= col[i] * col[i];
        }
        diag[p] = 0.0;
        if !col.iter().all(|v| v.is_finite()) {
            return Err(Error::numerical("pivoted Cholesky produced non-finite entries"));
        }
        cols.push(col);
    }
}

//! Synthetic test functions, the noise protocol wrapped around them, and
//! the gap metrics used to score a run.
//!
//! All benchmarks are minimization problems on their usual literature boxes:
//!
//! | id          | box                 | minimum                      |
//! |-------------|---------------------|------------------------------|
//! | hartmann3   | [0, 1]³             | −3.86278 near (0.1146, 0.5556, 0.8525) |
//! | griewank6   | [−600, 600]⁶        | 0 at the origin              |
//! | levy4       | [−10, 10]⁴          | 0 at (1, 1, 1, 1)            |
//! | powell5     | [−4, 5]⁵            | 0 at the origin              |
//! | sphere3     | [−5.12, 5.12]³      | 0 at the origin              |
//! | gp_sampled  | [0, 40]             | grid minimum of the draw     |
//!
//! Powell is defined for dimensions divisible by four. In five dimensions
//! the second group of four wraps around, using indices (4, 0, 1, 2).

mod gp_sampled;

pub use gp_sampled::{GpSampledFunction, GRID_POINTS, NOISE_STD as GP_SAMPLED_NOISE_STD};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::objective::{Objective, Observation, Truth};
use crate::sobol::Sobol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkId {
    Hartmann3,
    Griewank6,
    Levy4,
    Powell5,
    Sphere3,
    GpSampled,
}

impl BenchmarkId {
    pub const ANALYTIC: [BenchmarkId; 5] = [
        BenchmarkId::Hartmann3,
        BenchmarkId::Griewank6,
        BenchmarkId::Levy4,
        BenchmarkId::Powell5,
        BenchmarkId::Sphere3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkId::Hartmann3 => "hartmann3",
            BenchmarkId::Griewank6 => "griewank6",
            BenchmarkId::Levy4 => "levy4",
            BenchmarkId::Powell5 => "powell5",
            BenchmarkId::Sphere3 => "sphere3",
            BenchmarkId::GpSampled => "gp_sampled",
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let id = match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "hartmann3" => BenchmarkId::Hartmann3,
            "griewank6" => BenchmarkId::Griewank6,
            "levy4" => BenchmarkId::Levy4,
            "powell5" => BenchmarkId::Powell5,
            "sphere3" => BenchmarkId::Sphere3,
            "gp_sampled" => BenchmarkId::GpSampled,
            other => return Err(Error::input(format!("unknown benchmark '{other}'"))),
        };
        Ok(id)
    }
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN_A: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];
const HARTMANN_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];
// Located by a tight multi-start local search.
const HARTMANN_XSTAR: [f64; 3] = [0.11458886908541062, 0.5556488928322367, 0.8525469854282611];
const HARTMANN_FSTAR: f64 = -3.862779787332663;

fn hartmann3(x: &[f64]) -> f64 {
    -(0..4)
        .map(|i| {
            let e: f64 = (0..3)
                .map(|j| HARTMANN_A[i][j] * (x[j] - HARTMANN_P[i][j]).powi(2))
                .sum();
            HARTMANN_ALPHA[i] * (-e).exp()
        })
        .sum::<f64>()
}

fn griewank(x: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let p: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    1.0 + s - p
}

fn levy(x: &[f64]) -> f64 {
    let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
    let d = w.len();
    let mut total = (PI * w[0]).sin().powi(2);
    for wi in &w[..d - 1] {
        total += (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2));
    }
    let wd = w[d - 1];
    total + (wd - 1.0).powi(2) * (1.0 + (2.0 * PI * wd).sin().powi(2))
}

fn powell(x: &[f64]) -> f64 {
    let d = x.len();
    let groups = d.div_ceil(4);
    (0..groups)
        .map(|g| {
            let a = x[(4 * g) % d];
            let b = x[(4 * g + 1) % d];
            let c = x[(4 * g + 2) % d];
            let e = x[(4 * g + 3) % d];
            (a + 10.0 * b).powi(2) + 5.0 * (c - e).powi(2) + (b - 2.0 * c).powi(4) + 10.0 * (a - e).powi(4)
        })
        .sum()
}

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[derive(Clone, Debug)]
enum Kind {
    Analytic(fn(&[f64]) -> f64),
    Sampled(Arc<GpSampledFunction>),
}

/// A test function with its box and known optimum.
#[derive(Clone, Debug)]
pub struct Benchmark {
    id: BenchmarkId,
    bounds: Bounds,
    optimum_value: f64,
    optimizer: Vec<f64>,
    kind: Kind,
}

// Relative slack on the box check, so points produced by the unit-cube
// mapping are never rejected for rounding.
const BOX_SLACK: f64 = 1e-12;

const RANGE_SCAN_POINTS: usize = 100_000;

static RANGES: [OnceLock<f64>; 5] = [
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
];

impl Benchmark {
    /// One of the analytic benchmarks. Use [`Benchmark::gp_sampled`] for
    /// sampled functions.
    pub fn analytic(id: BenchmarkId) -> Result<Self> {
        let (f, bounds, xstar, fstar): (fn(&[f64]) -> f64, Bounds, Vec<f64>, f64) = match id {
            BenchmarkId::Hartmann3 => (hartmann3, Bounds::unit(3), HARTMANN_XSTAR.to_vec(), HARTMANN_FSTAR),
            BenchmarkId::Griewank6 => (griewank, Bounds::cube(-600.0, 600.0, 6)?, vec![0.0; 6], 0.0),
            BenchmarkId::Levy4 => (levy, Bounds::cube(-10.0, 10.0, 4)?, vec![1.0; 4], 0.0),
            BenchmarkId::Powell5 => (powell, Bounds::cube(-4.0, 5.0, 5)?, vec![0.0; 5], 0.0),
            BenchmarkId::Sphere3 => (sphere, Bounds::cube(-5.12, 5.12, 3)?, vec![0.0; 3], 0.0),
            BenchmarkId::GpSampled => {
                return Err(Error::input("gp_sampled needs a seed; use Benchmark::gp_sampled"))
            }
        };
        Ok(Benchmark {
            id,
            bounds,
            optimum_value: fstar,
            optimizer: xstar,
            kind: Kind::Analytic(f),
        })
    }

    /// The function drawn from the GP prior with `seed`.
    pub fn gp_sampled(seed: u64) -> Result<Self> {
        Ok(Self::from_sampled(GpSampledFunction::sample(seed)?))
    }

    pub fn from_sampled(f: GpSampledFunction) -> Self {
        let j = f.argmin();
        let (lo, hi) = f.domain();
        Benchmark {
            id: BenchmarkId::GpSampled,
            bounds: Bounds::new(vec![(lo, hi)]).expect("validated domain"),
            optimum_value: f.values()[j],
            optimizer: vec![f.grid_point(j)],
            kind: Kind::Sampled(Arc::new(f)),
        }
    }

    pub fn id(&self) -> BenchmarkId {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn optimum_value(&self) -> f64 {
        self.optimum_value
    }

    pub fn optimizer(&self) -> &[f64] {
        &self.optimizer
    }

    pub fn sampled(&self) -> Option<&GpSampledFunction> {
        match &self.kind {
            Kind::Sampled(f) => Some(f),
            Kind::Analytic(_) => None,
        }
    }

    /// Noiseless value; points outside the box are an input error.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::input(format!(
                "{} takes {} coordinates, got {}",
                self.id,
                self.dim(),
                x.len()
            )));
        }
        for (i, (&v, &(lo, hi))) in x.iter().zip(self.bounds.ranges()).enumerate() {
            let slack = BOX_SLACK * (hi - lo);
            if !(v >= lo - slack && v <= hi + slack) {
                return Err(Error::input(format!(
                    "{}: coordinate {i} = {v} is outside [{lo}, {hi}]",
                    self.id
                )));
            }
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::Analytic(f) => f(x),
            Kind::Sampled(g) => g.value(x[0]),
        }
    }

    /// `max f − min f` over the box. For analytic functions this is
    /// estimated once from a 10⁵-point Sobol scan (plus the known minimum)
    /// and cached; for sampled functions it is exact on the grid.
    pub fn range_estimate(&self) -> f64 {
        match &self.kind {
            Kind::Sampled(g) => g.range(),
            Kind::Analytic(_) => {
                let slot = BenchmarkId::ANALYTIC
                    .iter()
                    .position(|&id| id == self.id)
                    .expect("analytic id");
                *RANGES[slot].get_or_init(|| self.scan_range(RANGE_SCAN_POINTS))
            }
        }
    }

    fn scan_range(&self, n: usize) -> f64 {
        let sobol = Sobol::new(self.dim()).expect("benchmark dims are small");
        let mut hi = f64::NEG_INFINITY;
        let mut lo = self.optimum_value;
        for u in sobol.take(n) {
            let v = self.eval_unchecked(&self.bounds.from_unit(&u));
            hi = hi.max(v);
            lo = lo.min(v);
        }
        hi - lo
    }

    /// `log₁₀(f(x⁺) − f(x*))`, with the gap floored at 1e−12.
    pub fn log_gap(&self, x_plus: &[f64]) -> Result<f64> {
        let gap = self.eval(x_plus)? - self.optimum_value;
        Ok(gap.max(1e-12).log10())
    }

    /// Euclidean distance from `x⁺` to the optimizer, in original units.
    pub fn l2_gap(&self, x_plus: &[f64]) -> f64 {
        x_plus
            .iter()
            .zip(&self.optimizer)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl Truth for Benchmark {
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.eval(x)
    }

    fn optimum(&self) -> Option<f64> {
        Some(self.optimum_value)
    }
}

/// How the observation noise standard deviation is chosen per query.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    /// `υ_t` uniform on `(0, p·range]`, drawn independently per query.
    RangeFraction { p: f64 },
    /// The same `υ` for every query.
    FixedStd { std: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::RangeFraction { p } if p.is_finite() && p >= 0.0 => Ok(()),
            NoiseModel::FixedStd { std } if std.is_finite() && std >= 0.0 => Ok(()),
            other => Err(Error::input(format!("invalid noise model {other:?}"))),
        }
    }

    /// Largest standard deviation this model can produce on `bench`.
    pub fn max_std(&self, bench: &Benchmark) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::RangeFraction { p } => p * bench.range_estimate(),
            NoiseModel::FixedStd { std } => std,
        }
    }
}

/// `(y, υ²)` with `y = f(x) + ε`, `ε ~ N(0, υ²)`.
pub fn noisy_eval<R: Rng + ?Sized>(
    bench: &Benchmark,
    noise: &NoiseModel,
    x: &[f64],
    rng: &mut R,
) -> Result<Observation> {
    let f = bench.eval(x)?;
    let std = match *noise {
        NoiseModel::None => 0.0,
        NoiseModel::RangeFraction { p } => {
            // 1 − U with U on [0, 1) lands in (0, 1].
            let u: f64 = rng.random();
            p * bench.range_estimate() * (1.0 - u)
        }
        NoiseModel::FixedStd { std } => std,
    };
    if std == 0.0 {
        return Ok(Observation { y: f, noise_var: 0.0 });
    }
    let e: f64 = StandardNormal.sample(rng);
    Ok(Observation {
        y: f + std * e,
        noise_var: std * std,
    })
}

/// A benchmark plus noise model and its own random stream.
#[derive(Clone, Debug)]
pub struct NoisyBenchmark {
    bench: Benchmark,
    noise: NoiseModel,
    rng: ChaCha8Rng,
}

impl NoisyBenchmark {
    pub fn new(bench: Benchmark, noise: NoiseModel, seed: u64) -> Result<Self> {
        noise.validate()?;
        Ok(NoisyBenchmark {
            bench,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn benchmark(&self) -> &Benchmark {
        &self.bench
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }
}

impl Objective for NoisyBenchmark {
    fn observe(&mut self, x: &[f64]) -> Result<Observation> {
        noisy_eval(&self.bench, &self.noise, x, &mut self.rng)
    }
}

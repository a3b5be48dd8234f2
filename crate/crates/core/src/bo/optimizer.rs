//! Derivative-free maximization of an acquisition over the unit cube:
//! a space-filling candidate scan followed by coordinate-wise golden-section
//! refinement of the best few candidates.

use std::cell::RefCell;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::golden_section_min;
use crate::sobol::Sobol;

/// Candidates per input dimension when `n_raw` is not given.
pub const RAW_PER_DIM: usize = 512;

const GOLDEN_ITERS: usize = 30;
const INITIAL_HALF_WIDTH: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcqOptConfig {
    /// Number of raw candidates; `None` means `512·d`.
    #[serde(default)]
    pub n_raw: Option<usize>,
    /// How many of the best raw candidates to refine.
    #[serde(default = "default_refine")]
    pub n_refine: usize,
    /// Coordinate sweeps per refined start.
    #[serde(default = "default_refine_iters")]
    pub refine_iters: usize,
}

fn default_refine() -> usize {
    5
}

fn default_refine_iters() -> usize {
    3
}

impl Default for AcqOptConfig {
    fn default() -> Self {
        AcqOptConfig {
            n_raw: None,
            n_refine: default_refine(),
            refine_iters: default_refine_iters(),
        }
    }
}

impl AcqOptConfig {
    pub fn raw_count(&self, dim: usize) -> usize {
        self.n_raw.unwrap_or(RAW_PER_DIM * dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_raw == Some(0) {
            return Err(Error::config("acq_opt.n_raw must be at least 1"));
        }
        Ok(())
    }
}

/// Best point found, in unit-cube coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Maximum {
    pub unit: Vec<f64>,
    pub value: f64,
}

/// Raw candidates: the first half from a freshly scrambled Sobol sequence,
/// the rest uniform.
pub fn raw_candidates<R: Rng + ?Sized>(dim: usize, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let n_sobol = n.div_ceil(2);
    let mut out = Sobol::scrambled(dim, rng)?.take_points(n_sobol);
    for _ in n_sobol..n {
        out.push((0..dim).map(|_| rng.random::<f64>()).collect());
    }
    Ok(out)
}

/// Maximizes `acq` over `[0, 1]^dim`. Errors from `acq` abort the search.
pub fn maximize<F, R>(acq: F, dim: usize, cfg: &AcqOptConfig, rng: &mut R) -> Result<Maximum>
where
    F: Fn(&[f64]) -> Result<f64>,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let candidates = raw_candidates(dim, cfg.raw_count(dim), rng)?;
    maximize_from(acq, candidates, cfg)
}

/// As [`maximize`], with the raw candidates supplied by the caller.
pub fn maximize_from<F>(acq: F, candidates: Vec<Vec<f64>>, cfg: &AcqOptConfig) -> Result<Maximum>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut scored = Vec::with_capacity(candidates.len());
    for c in candidates {
        let v = acq(&c)?;
        scored.push((c, v));
    }
    if scored.is_empty() {
        return Err(Error::input("no acquisition candidates"));
    }
    // Stable sort: equal values keep generation order.
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].1.total_cmp(&scored[a].1));

    let first = order[0];
    let mut best = Maximum {
        unit: scored[first].0.clone(),
        value: scored[first].1,
    };
    for &i in order.iter().take(cfg.n_refine) {
        let (start, v) = &scored[i];
        let refined = refine(&acq, start.clone(), *v, cfg.refine_iters)?;
        if refined.value > best.value {
            best = refined;
        }
    }
    Ok(best)
}

/// Coordinate sweeps of golden-section search, halving the search window on
/// each sweep. A move is kept only if it improves the value.
fn refine<F>(acq: &F, mut x: Vec<f64>, mut value: f64, sweeps: usize) -> Result<Maximum>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    for sweep in 0..sweeps {
        let half = INITIAL_HALF_WIDTH / (1u32 << sweep.min(30)) as f64;
        for k in 0..x.len() {
            let lo = (x[k] - half).max(0.0);
            let hi = (x[k] + half).min(1.0);
            if hi <= lo {
                continue;
            }
            let mut probe = x.clone();
            let t = golden_section_min(
                |t| {
                    probe[k] = t;
                    match acq(&probe) {
                        Ok(v) if v.is_finite() => -v,
                        Ok(_) => f64::INFINITY,
                        Err(e) => {
                            failure.borrow_mut().get_or_insert(e);
                            f64::INFINITY
                        }
                    }
                },
                lo,
                hi,
                GOLDEN_ITERS,
            );
            if let Some(e) = failure.borrow_mut().take() {
                return Err(e);
            }
            let mut cand = x.clone();
            cand[k] = t;
            let v = acq(&cand)?;
            if v > value {
                x = cand;
                value = v;
            }
        }
    }
    Ok(Maximum { unit: x, value })
}

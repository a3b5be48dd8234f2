//! The sequential optimization loop.
//!
//! A run evaluates `init_count` scrambled Sobol points, then repeatedly
//! refits the GP, picks the incumbent, maximizes the acquisition and either
//! stops (the maximized value fell below `kappa`) or evaluates the chosen
//! point. Everything is deterministic given the configuration seed.
//!
//! Acquisition formulas are written for maximization. For a minimization
//! goal the loop models `−y` and reports every quantity back in the
//! objective's own units.
//!
//! The stop test compares acquisition values in original output units:
//! improvement-based values (EI, corrected EI) are rescaled by the output
//! standard deviation, PI values are unitless, and UCB is mapped back
//! through the output standardization. This is the same test as comparing
//! the standardized value against `kappa / std`.

mod optimizer;
mod profit;

pub use optimizer::{maximize, maximize_from, raw_candidates, AcqOptConfig, Maximum, RAW_PER_DIM};
pub use profit::{compute_profit, profit_at_threshold, Profit};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{select_incumbent, AcquisitionContext, AcquisitionKind, AcquisitionSpec, Incumbent};
use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::gp::{default_length_scale_grid, fit_hyperparameters, Dataset, GpPosterior, PreprocessState, DEFAULT_JITTER};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::objective::{Objective, Truth};
use crate::sobol::sobol_init;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    Maximize,
    Minimize,
}

impl Goal {
    /// `+1` for maximization, `−1` for minimization.
    pub fn sign(self) -> f64 {
        match self {
            Goal::Maximize => 1.0,
            Goal::Minimize => -1.0,
        }
    }
}

/// How the kernel is chosen at every iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Hyperparameters {
    /// Maximum-likelihood length scale over a log grid plus refinement;
    /// amplitude 1.
    MaxLikelihood { grid: Vec<f64> },
    /// A fixed kernel.
    Fixed { length_scale: f64, amplitude: f64 },
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters::MaxLikelihood {
            grid: default_length_scale_grid(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub bounds: Bounds,
    pub goal: Goal,
    /// Total evaluation budget `T`, initialization included.
    pub max_iters: usize,
    pub init_count: usize,
    /// Stop threshold in original output units; 0 disables stopping.
    pub kappa: f64,
    pub acquisition: AcquisitionSpec,
    pub kernel_family: KernelFamily,
    pub hyperparameters: Hyperparameters,
    /// Standardize outputs before fitting. When off, outputs and noise
    /// variances are used as given (prior mean zero).
    pub standardize_outputs: bool,
    /// Relative diagonal jitter.
    pub jitter: f64,
    pub seed: u64,
    pub acq_opt: AcqOptConfig,
}

impl RunConfig {
    /// Defaults: `3d` initial points, 150 evaluations, no stopping, Matérn
    /// kernel with maximum-likelihood length scale, standardized outputs.
    pub fn new(bounds: Bounds, goal: Goal, acquisition: AcquisitionSpec, seed: u64) -> Self {
        let d = bounds.dim();
        RunConfig {
            bounds,
            goal,
            max_iters: 150,
            init_count: 3 * d,
            kappa: 0.0,
            acquisition,
            kernel_family: KernelFamily::Matern52,
            hyperparameters: Hyperparameters::default(),
            standardize_outputs: true,
            jitter: DEFAULT_JITTER,
            seed,
            acq_opt: AcqOptConfig::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.init_count < 1 {
            return Err(Error::config("init_count must be at least 1"));
        }
        if self.max_iters < self.init_count {
            return Err(Error::config(format!(
                "max_iters ({}) must be at least init_count ({})",
                self.max_iters, self.init_count
            )));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::config(format!("kappa must be finite and nonnegative, got {}", self.kappa)));
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(Error::config("jitter must be finite and nonnegative"));
        }
        AcquisitionSpec::new(self.acquisition.kind(), self.acquisition.ucb_beta())
            .map_err(|e| Error::config(e.to_string()))?;
        match &self.hyperparameters {
            Hyperparameters::MaxLikelihood { grid } => {
                if grid.is_empty() || grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                    return Err(Error::config("length-scale grid must be nonempty and positive"));
                }
            }
            Hyperparameters::Fixed { length_scale, amplitude } => {
                KernelSpec::new(self.kernel_family, *length_scale, *amplitude)
                    .map_err(|e| Error::config(e.to_string()))?;
            }
        }
        if self.dim() > crate::sobol::MAX_DIM {
            return Err(Error::config(format!(
                "at most {} input dimensions are supported",
                crate::sobol::MAX_DIM
            )));
        }
        self.acq_opt.validate()
    }
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed for the stream named by `tags` under `master`.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(master), |acc, &t| mix(acc ^ mix(t)))
}

pub(crate) const STREAM_INIT: u64 = 1;
pub(crate) const STREAM_OPTIMIZER: u64 = 2;

fn kind_tag(kind: AcquisitionKind) -> u64 {
    AcquisitionKind::ALL.iter().position(|&k| k == kind).unwrap_or(0) as u64
}

/// Model quantities behind one acquisition decision. Means and variances
/// are on the standardized scale of the maximized objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub kernel: KernelSpec,
    pub output_mean: f64,
    pub output_std: f64,
    pub mean_x: f64,
    pub mean_plus: f64,
    pub var_x: f64,
    pub var_plus: f64,
    pub cov: f64,
    /// Acquisition value on the standardized scale.
    pub acq_std: f64,
}

impl ModelSnapshot {
    /// `σ̃²` at the selected point (clamped at zero).
    pub fn sigma_tilde_sq(&self) -> f64 {
        (self.var_x + self.var_plus - 2.0 * self.cov).max(0.0)
    }

    pub fn preprocess(&self, bounds: &Bounds) -> PreprocessState {
        PreprocessState::new(bounds, self.output_mean, self.output_std)
            .expect("snapshot constants come from a fitted model")
    }
}

/// Incumbent as stored in a trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncumbentInfo {
    /// Index into the trace records.
    pub index: usize,
    pub x: Vec<f64>,
    /// Posterior mean at `x`, in objective units.
    pub mu: f64,
    /// Noiseless objective value at `x`, when a truth oracle was supplied.
    pub truth: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    /// 1-based evaluation count.
    pub t: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub noise_var: f64,
    /// Incumbent of the model that chose `x`; `None` for initial points.
    pub incumbent: Option<IncumbentInfo>,
    /// Maximized acquisition in original units; `None` for initial points.
    pub acq_value: Option<f64>,
    pub snapshot: Option<ModelSnapshot>,
    /// Noiseless value `f(x)`.
    pub truth: Option<f64>,
    /// Simple regret of this evaluation, `|f* − f(x)|` in the goal's sense.
    pub regret: Option<f64>,
}

impl IterRecord {
    pub fn is_init(&self) -> bool {
        self.incumbent.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    KappaReached,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub reason: TerminationReason,
    /// `t_κ`: evaluations performed when the run ended.
    pub at: usize,
    /// The sub-threshold acquisition value that triggered a stop.
    pub acq_value: Option<f64>,
    pub snapshot: Option<ModelSnapshot>,
    /// Where the rejected candidate was.
    pub x: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub config: RunConfig,
    pub records: Vec<IterRecord>,
    pub termination: Termination,
    /// Incumbent of the model fitted to all observations.
    pub final_incumbent: IncumbentInfo,
}

impl RunTrace {
    pub fn dataset(&self) -> Dataset {
        let mut d = Dataset::default();
        for r in &self.records {
            d.push(r.x.clone(), r.y, r.noise_var).expect("trace records are valid");
        }
        d
    }

    /// Records chosen by the acquisition (initial design excluded).
    pub fn acquired(&self) -> impl Iterator<Item = &IterRecord> {
        self.records.iter().filter(|r| !r.is_init())
    }

    /// Sum of simple regrets, when known.
    pub fn cumulative_regret(&self) -> Option<f64> {
        self.records.iter().map(|r| r.regret).sum()
    }
}

/// A run that stopped on an error, with everything recorded before it.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub partial: Vec<IterRecord>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} evaluations)", self.error, self.partial.len())
    }
}

impl std::error::Error for RunFailure {}

impl From<RunFailure> for Error {
    fn from(f: RunFailure) -> Self {
        f.error
    }
}

/// A fitted model of the maximized objective and its incumbent.
pub struct FittedModel {
    pub gp: GpPosterior,
    pub incumbent: Incumbent,
}

/// Fits the model the loop would use on `data`, which holds the
/// maximized objective (already sign-flipped for minimization).
pub fn fit_model(config: &RunConfig, data: &Dataset) -> Result<FittedModel> {
    let pre = if config.standardize_outputs {
        PreprocessState::standardizing(&config.bounds, data.outputs())
    } else {
        PreprocessState::unscaled(&config.bounds)
    };
    let kernel = match &config.hyperparameters {
        Hyperparameters::MaxLikelihood { grid } => {
            fit_hyperparameters(config.kernel_family, data, &pre, grid, config.jitter)?
        }
        Hyperparameters::Fixed { length_scale, amplitude } => {
            KernelSpec::new(config.kernel_family, *length_scale, *amplitude)?
        }
    };
    let gp = GpPosterior::fit_with(kernel, data, pre, config.jitter)?;
    let incumbent = select_incumbent(&gp, data.inputs())?;
    Ok(FittedModel { gp, incumbent })
}

/// Converts a standardized acquisition value to original output units.
pub fn report_units(kind: AcquisitionKind, value: f64, pre: &PreprocessState) -> f64 {
    match kind {
        AcquisitionKind::Ei | AcquisitionKind::CorrectedEi => value * pre.output_std(),
        AcquisitionKind::Pi | AcquisitionKind::CorrectedPi => value,
        AcquisitionKind::Ucb => pre.destandardize_output(value),
    }
}

struct Proposal {
    x: Vec<f64>,
    acq_report: f64,
    snapshot: ModelSnapshot,
    incumbent: IncumbentInfo,
}

fn propose(config: &RunConfig, model: &FittedModel, rng: &mut ChaCha8Rng, sign: f64) -> Result<Proposal> {
    let gp = &model.gp;
    let ctx = AcquisitionContext::new(config.acquisition, gp, &model.incumbent);
    let best = maximize(|u| ctx.value_unit(u), config.dim(), &config.acq_opt, rng)?;
    let x = config.bounds.from_unit(&best.unit);
    let b = ctx.breakdown(&x)?;
    let pre = gp.preprocess();
    let snapshot = ModelSnapshot {
        kernel: *gp.kernel(),
        output_mean: pre.output_mean(),
        output_std: pre.output_std(),
        mean_x: b.mean,
        mean_plus: model.incumbent.mu_plus,
        var_x: b.var,
        var_plus: model.incumbent.var_plus,
        cov: gp.covariance(&x, &model.incumbent.x_plus),
        acq_std: b.value,
    };
    Ok(Proposal {
        acq_report: report_units(config.acquisition.kind(), b.value, pre),
        incumbent: IncumbentInfo {
            index: model.incumbent.index,
            x: model.incumbent.x_plus.clone(),
            mu: sign * pre.destandardize_output(model.incumbent.mu_plus),
            truth: None,
        },
        x,
        snapshot,
    })
}

fn truth_at(truth: Option<&dyn Truth>, x: &[f64]) -> Result<Option<f64>> {
    truth.map(|t| t.value(x)).transpose()
}

/// Runs the loop. `truth` is only used to annotate records.
pub fn run_bo(
    config: &RunConfig,
    objective: &mut dyn Objective,
    truth: Option<&dyn Truth>,
) -> std::result::Result<RunTrace, RunFailure> {
    let mut records: Vec<IterRecord> = Vec::new();
    match run_inner(config, objective, truth, &mut records) {
        Ok((termination, final_incumbent)) => Ok(RunTrace {
            config: config.clone(),
            records,
            termination,
            final_incumbent,
        }),
        Err(error) => Err(RunFailure { error, partial: records }),
    }
}

fn run_inner(
    config: &RunConfig,
    objective: &mut dyn Objective,
    truth: Option<&dyn Truth>,
    records: &mut Vec<IterRecord>,
) -> Result<(Termination, IncumbentInfo)> {
    config.validate()?;
    let sign = config.goal.sign();
    let optimum = truth.and_then(|t| t.optimum());
    let dim = config.dim();
    let mut data = Dataset::default();

    let mut evaluate = |x: Vec<f64>,
                        proposal: Option<(IncumbentInfo, f64, ModelSnapshot)>,
                        data: &mut Dataset,
                        records: &mut Vec<IterRecord>|
     -> Result<()> {
        let obs = objective.observe(&x)?;
        if !obs.y.is_finite() || !(obs.noise_var.is_finite() && obs.noise_var >= 0.0) {
            return Err(Error::Objective(format!(
                "objective returned y = {}, noise variance = {} at {x:?}",
                obs.y, obs.noise_var
            )));
        }
        data.push(x.clone(), sign * obs.y, obs.noise_var)?;
        let f = truth_at(truth, &x)?;
        let regret = match (f, optimum) {
            (Some(f), Some(opt)) => Some(sign * (opt - f)),
            _ => None,
        };
        let (incumbent, acq_value, snapshot) = match proposal {
            Some((mut inc, a, s)) => {
                inc.truth = truth_at(truth, &inc.x)?;
                (Some(inc), Some(a), Some(s))
            }
            None => (None, None, None),
        };
        records.push(IterRecord {
            t: records.len() + 1,
            x,
            y: obs.y,
            noise_var: obs.noise_var,
            incumbent,
            acq_value,
            snapshot,
            truth: f,
            regret,
        });
        Ok(())
    };

    let init = sobol_init(dim, config.init_count, derive_seed(config.seed, &[STREAM_INIT]))?;
    for u in init {
        evaluate(config.bounds.from_unit(&u), None, &mut data, records)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        config.seed,
        &[STREAM_OPTIMIZER, kind_tag(config.acquisition.kind())],
    ));
    while data.len() < config.max_iters {
        let model = fit_model(config, &data)?;
        let p = propose(config, &model, &mut rng, sign)?;
        if config.kappa > 0.0 && p.acq_report < config.kappa {
            let mut inc = p.incumbent;
            inc.truth = truth_at(truth, &inc.x)?;
            let termination = Termination {
                reason: TerminationReason::KappaReached,
                at: data.len(),
                acq_value: Some(p.acq_report),
                snapshot: Some(p.snapshot),
                x: Some(p.x),
            };
            return Ok((termination, inc));
        }
        evaluate(p.x, Some((p.incumbent, p.acq_report, p.snapshot)), &mut data, records)?;
    }

    let model = fit_model(config, &data)?;
    let pre = model.gp.preprocess();
    let x = model.incumbent.x_plus.clone();
    let final_incumbent = IncumbentInfo {
        index: model.incumbent.index,
        truth: truth_at(truth, &x)?,
        mu: sign * pre.destandardize_output(model.incumbent.mu_plus),
        x,
    };
    let termination = Termination {
        reason: TerminationReason::BudgetExhausted,
        at: data.len(),
        acq_value: None,
        snapshot: None,
        x: None,
    };
    Ok((termination, final_incumbent))
}

//! Repeated benchmark runs driven by a TOML file: per-run CSV traces, a
//! JSON summary and profit tables.
//!
//! ```toml
//! schema_version = 1
//! benchmark = "hartmann3"
//! acquisitions = ["ei", "corrected_ei"]
//! iterations = 60
//! seeds = [1, 2, 3]
//! kappa_grid = [0.0, 0.01, 0.1]
//!
//! [noise]
//! kind = "range_fraction"
//! p = 0.1
//! ```
//!
//! Every run's seed is derived from `master_seed` and the seed value only,
//! so runs with different acquisitions but the same seed share their
//! initial design and the noise on it.

mod output;

pub use output::{
    atomic_write, bootstrap_mean_band, median, profit_table_csv, summarize, trace_csv, IterationStats, MetricSummary,
    ProfitRow, Summary,
};

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionKind, AcquisitionSpec};
use crate::benchmarks::{Benchmark, BenchmarkId, NoiseModel, NoisyBenchmark};
use crate::bo::{derive_seed, profit_at_threshold, run_bo, AcqOptConfig, Goal, Hyperparameters, RunConfig, RunTrace};
use crate::error::{Error, Result};
use crate::kernels::KernelFamily;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CEI_BO_OUT_DIR";

const STREAM_RUN: u64 = 0x5EED;
const STREAM_NOISE: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub benchmark: BenchmarkId,
    /// Seed of the sampled function when `benchmark = "gp_sampled"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gp_seed: Option<u64>,
    pub acquisitions: Vec<AcquisitionKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ucb_beta: Option<f64>,
    /// Evaluation budget `T`, initial design included.
    pub iterations: usize,
    /// Defaults to three points per input dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_count: Option<usize>,
    #[serde(default)]
    pub kappa: f64,
    /// Thresholds for the profit table.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kappa_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_kernel")]
    pub kernel: KernelFamily,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_resamples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub noise: NoiseModel,
    #[serde(default)]
    pub acq_opt: AcqOptConfig,
}

fn default_kernel() -> KernelFamily {
    KernelFamily::Matern52
}

fn default_bootstrap() -> usize {
    1000
}

impl ExperimentConfig {
    /// A config with defaults for everything optional.
    pub fn new(benchmark: BenchmarkId, acquisitions: Vec<AcquisitionKind>, iterations: usize, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            benchmark,
            gp_seed: None,
            acquisitions,
            ucb_beta: None,
            iterations,
            init_count: None,
            kappa: 0.0,
            kappa_grid: Vec::new(),
            seeds,
            master_seed: 0,
            kernel: default_kernel(),
            hyperparameters: Hyperparameters::default(),
            bootstrap_resamples: default_bootstrap(),
            output_dir: None,
            noise: NoiseModel::RangeFraction { p: 0.1 },
            acq_opt: AcqOptConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    /// The benchmark function described by the config.
    pub fn build_benchmark(&self) -> Result<Benchmark> {
        match self.benchmark {
            BenchmarkId::GpSampled => Benchmark::gp_sampled(self.gp_seed.unwrap_or(0)),
            id => Benchmark::analytic(id),
        }
    }

    /// Checks everything that can be checked before a run starts.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.acquisitions.is_empty() {
            return Err(Error::config("acquisitions: list at least one acquisition"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds: list at least one seed"));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(Error::config("seeds: values must be distinct"));
        }
        if self.gp_seed.is_some() && self.benchmark != BenchmarkId::GpSampled {
            return Err(Error::config("gp_seed: only meaningful with benchmark = \"gp_sampled\""));
        }
        if self.bootstrap_resamples == 0 {
            return Err(Error::config("bootstrap_resamples: must be at least 1"));
        }
        if let Some(k) = self.kappa_grid.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
            return Err(Error::config(format!("kappa_grid: {k} is not a nonnegative number")));
        }
        self.noise.validate().map_err(|e| Error::config(format!("noise: {e}")))?;
        let dim = match self.benchmark {
            BenchmarkId::GpSampled => 1,
            id => Benchmark::analytic(id)?.dim(),
        };
        let bounds = crate::bounds::Bounds::unit(dim);
        for &kind in &self.acquisitions {
            let spec = self.spec(kind)?;
            let rc = self.run_config_with(bounds.clone(), spec, 0);
            rc.validate()?;
        }
        Ok(())
    }

    fn spec(&self, kind: AcquisitionKind) -> Result<AcquisitionSpec> {
        let beta = if kind == AcquisitionKind::Ucb { self.ucb_beta } else { None };
        AcquisitionSpec::new(kind, beta).map_err(|e| Error::config(format!("acquisitions: {e}")))
    }

    fn run_config_with(&self, bounds: crate::bounds::Bounds, spec: AcquisitionSpec, seed: u64) -> RunConfig {
        let mut rc = RunConfig::new(bounds, Goal::Minimize, spec, derive_seed(self.master_seed, &[STREAM_RUN, seed]));
        rc.max_iters = self.iterations;
        if let Some(n) = self.init_count {
            rc.init_count = n;
        }
        rc.kappa = self.kappa;
        rc.kernel_family = self.kernel;
        rc.hyperparameters = self.hyperparameters.clone();
        rc.acq_opt = self.acq_opt;
        rc
    }

    /// Loop configuration for one (acquisition, seed) pair.
    pub fn run_config(&self, bench: &Benchmark, kind: AcquisitionKind, seed: u64) -> Result<RunConfig> {
        Ok(self.run_config_with(bench.bounds().clone(), self.spec(kind)?, seed))
    }

    /// The noisy objective for one seed; identical across acquisitions.
    pub fn objective(&self, bench: &Benchmark, seed: u64) -> Result<NoisyBenchmark> {
        let rs = derive_seed(self.master_seed, &[STREAM_RUN, seed]);
        NoisyBenchmark::new(bench.clone(), self.noise, derive_seed(rs, &[STREAM_NOISE]))
    }
}

/// One (acquisition, seed) run and its outcome.
pub struct RunOutcome {
    pub acquisition: AcquisitionKind,
    pub seed: u64,
    pub result: std::result::Result<RunTrace, crate::bo::RunFailure>,
}

/// Runs every (acquisition, seed) pair, `threads` at a time. Results come
/// back in config order whatever the scheduling.
pub fn run_all(cfg: &ExperimentConfig, bench: &Benchmark, kappa: f64, threads: usize) -> Result<Vec<RunOutcome>> {
    let jobs: Vec<(AcquisitionKind, u64)> = cfg
        .acquisitions
        .iter()
        .flat_map(|&a| cfg.seeds.iter().map(move |&s| (a, s)))
        .collect();
    // Build each configuration up front so errors surface before any run.
    let prepared: Vec<(AcquisitionKind, u64, RunConfig, NoisyBenchmark)> = jobs
        .into_iter()
        .map(|(a, s)| {
            let mut rc = cfg.run_config(bench, a, s)?;
            rc.kappa = kappa;
            rc.validate()?;
            Ok((a, s, rc, cfg.objective(bench, s)?))
        })
        .collect::<Result<_>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start {threads} workers: {e}")))?;
    Ok(pool.install(|| {
        prepared
            .into_par_iter()
            .map(|(acquisition, seed, rc, mut obj)| RunOutcome {
                acquisition,
                seed,
                result: run_bo(&rc, &mut obj, Some(bench)),
            })
            .collect()
    }))
}

/// File name of one run's trace.
pub fn trace_file_name(kind: AcquisitionKind, seed: u64) -> String {
    format!("{kind}_seed{seed}.csv")
}

/// Result of [`cmd_run`].
pub struct RunReport {
    pub traces: Vec<PathBuf>,
    pub summary: PathBuf,
    pub failures: Vec<String>,
}

/// Runs the experiment and writes `traces/*.csv`, `summary.json` and the
/// resolved `config.toml` under `out`. Failed runs leave a
/// `*.partial.csv` with the evaluations made before the failure, are listed
/// in the summary and make the call return an error after all outputs are
/// written.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path, threads: usize) -> Result<RunReport> {
    cfg.validate()?;
    let bench = cfg.build_benchmark()?;
    let outcomes = run_all(cfg, &bench, cfg.kappa, threads)?;
    let dir = out.join("traces");
    std::fs::create_dir_all(&dir)?;
    atomic_write(&out.join("config.toml"), cfg.to_toml()?.as_bytes())?;
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    let mut done = Vec::new();
    for o in &outcomes {
        let name = trace_file_name(o.acquisition, o.seed);
        match &o.result {
            Ok(t) => {
                let p = dir.join(&name);
                atomic_write(&p, &trace_csv(t, &bench)?)?;
                traces.push(p);
                done.push((o.acquisition, o.seed, t));
            }
            Err(f) => {
                let partial = RunTrace {
                    config: cfg.run_config(&bench, o.acquisition, o.seed)?,
                    records: f.partial.clone(),
                    termination: crate::bo::Termination {
                        reason: crate::bo::TerminationReason::BudgetExhausted,
                        at: f.partial.len(),
                        acq_value: None,
                        snapshot: None,
                        x: None,
                    },
                    final_incumbent: crate::bo::IncumbentInfo { index: 0, x: Vec::new(), mu: f64::NAN, truth: None },
                };
                let p = dir.join(name.replace(".csv", ".partial.csv"));
                atomic_write(&p, &output::records_csv(&partial, &bench, false)?)?;
                failures.push(format!("{} seed {}: {}", o.acquisition, o.seed, f));
            }
        }
    }
    let mut summary = summarize(cfg, &bench, &done)?;
    summary.failed_runs = failures.clone();
    let sp = out.join("summary.json");
    atomic_write(&sp, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    if let Some(first) = failures.first() {
        return Err(Error::Objective(format!(
            "{} of {} runs failed; first: {first}",
            failures.len(),
            outcomes.len()
        )));
    }
    Ok(RunReport { traces, summary: sp, failures })
}

/// Profit table over `kappa_grid`, each entry replayed from the same
/// unstopped runs. Writes `profit.csv` under `out`.
pub fn cmd_profit(cfg: &ExperimentConfig, kappa_grid: &[f64], out: &Path, threads: usize) -> Result<(PathBuf, Vec<ProfitRow>)> {
    cfg.validate()?;
    if kappa_grid.is_empty() {
        return Err(Error::config("kappa_grid: give at least one threshold"));
    }
    if let Some(k) = kappa_grid.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
        return Err(Error::config(format!("kappa_grid: {k} is not a nonnegative number")));
    }
    let bench = cfg.build_benchmark()?;
    let outcomes = run_all(cfg, &bench, 0.0, threads)?;
    let mut traces = Vec::new();
    for o in outcomes {
        traces.push((o.acquisition, o.result.map_err(Error::from)?));
    }
    let mut rows = Vec::new();
    for &kappa in kappa_grid {
        for &kind in &cfg.acquisitions {
            let mut profits = Vec::new();
            let mut t_sum = 0.0;
            for (_, t) in traces.iter().filter(|(k, _)| *k == kind) {
                let p = profit_at_threshold(t, kappa, Some(&bench))?;
                profits.push(p.profit);
                t_sum += p.t_kappa as f64;
            }
            let n = profits.len() as f64;
            let mean = profits.iter().sum::<f64>() / n;
            let std_err = if profits.len() > 1 {
                (profits.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            rows.push(ProfitRow {
                kappa,
                acquisition: kind,
                mean_profit: mean,
                std_err,
                mean_t_kappa: t_sum / n,
            });
        }
    }
    std::fs::create_dir_all(out)?;
    let p = out.join("profit.csv");
    atomic_write(&p, &profit_table_csv(&rows)?)?;
    Ok((p, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
schema_version = 1
benchmark = "sphere3"
acquisitions = ["ei", "corrected_ei"]
iterations = 12
seeds = [1, 2]
kappa_grid = [0.0, 0.5]

[noise]
kind = "range_fraction"
p = 0.1

[acq_opt]
n_raw = 128
"#;

    #[test]
    fn parse_and_round_trip() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.acquisitions, [AcquisitionKind::Ei, AcquisitionKind::CorrectedEi]);
        let once = c.to_toml().unwrap();
        let twice = ExperimentConfig::from_toml(&once).unwrap().to_toml().unwrap();
        assert_eq!(once, twice);
        assert_eq!(ExperimentConfig::from_toml(&once).unwrap(), c);
    }

    #[test]
    fn config_errors_name_the_field() {
        let bad = SAMPLE.replace("iterations = 12", "iterations = \"many\"");
        let e = ExperimentConfig::from_toml(&bad).unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("iterations") && m.contains("line")), "{e}");
        let unknown = format!("{SAMPLE}\nbogus = 1\n");
        assert!(matches!(ExperimentConfig::from_toml(&unknown), Err(Error::Config(_))));
        let short = SAMPLE.replace("iterations = 12", "iterations = 2");
        assert!(matches!(ExperimentConfig::from_toml(&short), Err(Error::Config(ref m)) if m.contains("init_count")));
        let ucb = SAMPLE.replace("\"ei\", ", "\"ucb\", ");
        assert!(matches!(ExperimentConfig::from_toml(&ucb), Err(Error::Config(_))));
    }

    #[test]
    fn init_shared_across_acquisitions() {
        let c = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let b = c.build_benchmark().unwrap();
        let out = run_all(&c, &b, 0.0, 1).unwrap();
        let ei = out[0].result.as_ref().unwrap();
        let cei = out[2].result.as_ref().unwrap();
        assert_eq!((out[0].seed, out[2].seed), (1, 1));
        assert_eq!(ei.records[..9], cei.records[..9]);
        let other = out[1].result.as_ref().unwrap();
        assert_ne!(ei.records[0], other.records[0]);
    }
}

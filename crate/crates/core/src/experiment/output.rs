//! File formats: trace CSVs, the JSON summary and the profit table.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::acquisition::AcquisitionKind;
use crate::benchmarks::Benchmark;
use crate::bo::{derive_seed, IncumbentInfo, RunTrace};
use crate::error::{Error, Result};

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::input(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.filter(|v| v.is_finite()).map(num).unwrap_or_default()
}

/// Incumbent after each record was observed: the one the next decision
/// used, or the final one for the last record.
fn incumbents_after(trace: &RunTrace, with_final: bool) -> Vec<Option<&IncumbentInfo>> {
    let n = trace.records.len();
    (0..n)
        .map(|i| {
            if i + 1 < n {
                trace.records[i + 1].incumbent.as_ref()
            } else if with_final {
                Some(&trace.final_incumbent)
            } else {
                None
            }
        })
        .collect()
}

struct RowMetrics {
    mu: Option<f64>,
    log_gap: Option<f64>,
    l2_gap: Option<f64>,
}

fn row_metrics(trace: &RunTrace, bench: &Benchmark, with_final: bool) -> Result<Vec<RowMetrics>> {
    incumbents_after(trace, with_final)
        .into_iter()
        .map(|inc| {
            Ok(match inc {
                Some(i) => RowMetrics {
                    mu: Some(i.mu),
                    log_gap: Some(bench.log_gap(&i.x)?),
                    l2_gap: Some(bench.l2_gap(&i.x)),
                },
                None => RowMetrics { mu: None, log_gap: None, l2_gap: None },
            })
        })
        .collect()
}

/// One row per evaluation: `iter, x0..x{d-1}, y, noise_var, incumbent_mu,
/// acq_value, log_gap, l2_gap`. `acq_value` is the maximized acquisition
/// that selected the row's point; the incumbent columns describe the model
/// fitted after the row's observation. Missing values are empty fields.
pub(crate) fn records_csv(trace: &RunTrace, bench: &Benchmark, with_final: bool) -> Result<Vec<u8>> {
    let d = trace.config.dim();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["iter".to_string()];
    header.extend((0..d).map(|i| format!("x{i}")));
    header.extend(["y", "noise_var", "incumbent_mu", "acq_value", "log_gap", "l2_gap"].map(String::from));
    w.write_record(&header)?;
    let metrics = row_metrics(trace, bench, with_final)?;
    for (r, m) in trace.records.iter().zip(metrics) {
        let mut row = vec![r.t.to_string()];
        row.extend(r.x.iter().map(|v| num(*v)));
        row.push(num(r.y));
        row.push(num(r.noise_var));
        row.push(opt(m.mu));
        row.push(opt(r.acq_value));
        row.push(opt(m.log_gap));
        row.push(opt(m.l2_gap));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// CSV trace of a finished run.
pub fn trace_csv(trace: &RunTrace, bench: &Benchmark) -> Result<Vec<u8>> {
    records_csv(trace, bench, true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iter: usize,
    /// Runs with a value at this iteration.
    pub n: usize,
    pub median: f64,
    pub mean: f64,
    /// 95% percentile-bootstrap band for the mean.
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub per_iteration: Vec<IterationStats>,
    /// Value at each run's last row, in seed order.
    pub final_values: Vec<f64>,
    pub final_median: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSummary {
    pub seeds: Vec<u64>,
    pub log_gap: MetricSummary,
    pub l2_gap: MetricSummary,
    pub mean_evaluations: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub benchmark: String,
    pub iterations: usize,
    pub acquisitions: BTreeMap<String, AcquisitionSummary>,
    pub failed_runs: Vec<String>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `(mean, lower, upper)` with a percentile bootstrap of the mean.
pub fn bootstrap_mean_band(values: &[f64], resamples: usize, seed: u64) -> (f64, f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 || resamples == 0 {
        return (mean, mean, mean);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((q * resamples as f64) as usize).min(resamples - 1)];
    (mean, at(0.025), at(0.975))
}

fn metric_summary(
    rows: &[Vec<Option<f64>>],
    resamples: usize,
    seed: u64,
) -> MetricSummary {
    let longest = rows.iter().map(Vec::len).max().unwrap_or(0);
    let per_iteration = (0..longest)
        .filter_map(|i| {
            let vals: Vec<f64> = rows.iter().filter_map(|r| r.get(i).copied().flatten()).collect();
            if vals.is_empty() {
                return None;
            }
            let (mean, lower, upper) = bootstrap_mean_band(&vals, resamples, derive_seed(seed, &[i as u64]));
            Some(IterationStats { iter: i + 1, n: vals.len(), median: median(&vals), mean, lower, upper })
        })
        .collect();
    let final_values: Vec<f64> = rows.iter().filter_map(|r| r.last().copied().flatten()).collect();
    MetricSummary {
        per_iteration,
        final_median: median(&final_values),
        final_values,
    }
}

/// Per-iteration statistics of the incumbent gaps for each acquisition.
pub fn summarize(
    cfg: &ExperimentConfig,
    bench: &Benchmark,
    runs: &[(AcquisitionKind, u64, &RunTrace)],
) -> Result<Summary> {
    let mut acquisitions = BTreeMap::new();
    for (ki, &kind) in cfg.acquisitions.iter().enumerate() {
        let mine: Vec<_> = runs.iter().filter(|(k, _, _)| *k == kind).collect();
        if mine.is_empty() {
            continue;
        }
        let mut logs = Vec::new();
        let mut l2s = Vec::new();
        for (_, _, t) in &mine {
            let m = row_metrics(t, bench, true)?;
            logs.push(m.iter().map(|r| r.log_gap).collect::<Vec<_>>());
            l2s.push(m.iter().map(|r| r.l2_gap).collect::<Vec<_>>());
        }
        let seed = derive_seed(cfg.master_seed, &[0xB007, ki as u64]);
        acquisitions.insert(
            kind.to_string(),
            AcquisitionSummary {
                seeds: mine.iter().map(|(_, s, _)| *s).collect(),
                log_gap: metric_summary(&logs, cfg.bootstrap_resamples, seed),
                l2_gap: metric_summary(&l2s, cfg.bootstrap_resamples, derive_seed(seed, &[1])),
                mean_evaluations: mine.iter().map(|(_, _, t)| t.records.len() as f64).sum::<f64>() / mine.len() as f64,
            },
        );
    }
    Ok(Summary {
        benchmark: bench.id().to_string(),
        iterations: cfg.iterations,
        acquisitions,
        failed_runs: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfitRow {
    pub kappa: f64,
    pub acquisition: AcquisitionKind,
    pub mean_profit: f64,
    pub std_err: f64,
    pub mean_t_kappa: f64,
}

pub fn profit_table_csv(rows: &[ProfitRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["kappa", "acquisition", "mean_profit", "std_err", "mean_t_kappa"])?;
    for r in rows {
        w.write_record([
            num(r.kappa),
            r.acquisition.to_string(),
            num(r.mean_profit),
            num(r.std_err),
            num(r.mean_t_kappa),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_band() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let v: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let (m, lo, hi) = bootstrap_mean_band(&v, 2000, 1);
        assert_eq!(m, 19.5);
        assert!(lo < m && m < hi);
        // Standard error is about 1.8; the band should be near ±3.6.
        assert!((hi - lo) > 5.0 && (hi - lo) < 9.0, "{lo} {hi}");
        assert_eq!(bootstrap_mean_band(&v, 2000, 1), (m, lo, hi));
        assert_eq!(bootstrap_mean_band(&[2.0], 100, 0), (2.0, 2.0, 2.0));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

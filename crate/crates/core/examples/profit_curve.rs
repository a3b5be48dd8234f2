//! Profit against the stopping threshold κ on Sphere3, for EI and corrected
//! EI, replayed from unstopped runs.

use corrected_ei::acquisition::AcquisitionKind;
use corrected_ei::benchmarks::{BenchmarkId, NoiseModel};
use corrected_ei::bo::profit_at_threshold;
use corrected_ei::experiment::{run_all, ExperimentConfig};

fn main() -> corrected_ei::Result<()> {
    let mut args = std::env::args().skip(1);
    let noise_std: Option<f64> = args.next().map(|s| s.parse().expect("noise std"));
    let kinds = vec![AcquisitionKind::Ei, AcquisitionKind::CorrectedEi];
    let mut cfg = ExperimentConfig::new(BenchmarkId::Sphere3, kinds.clone(), 60, (1..=15).collect());
    if let Some(s) = noise_std {
        cfg.noise = NoiseModel::FixedStd { std: s };
    }
    let bench = cfg.build_benchmark()?;
    let runs = run_all(&cfg, &bench, 0.0, 1)?;
    println!("{:>8} {:>12} {:>8} {:>12} {:>8}", "kappa", "EI profit", "EI t", "CEI profit", "CEI t");
    for kappa in [0.0, 0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0] {
        let mut cols = Vec::new();
        for &k in &kinds {
            let ps: Vec<_> = runs
                .iter()
                .filter(|r| r.acquisition == k)
                .map(|r| profit_at_threshold(r.result.as_ref().expect("run succeeded"), kappa, Some(&bench)))
                .collect::<corrected_ei::Result<_>>()?;
            let n = ps.len() as f64;
            cols.push((
                ps.iter().map(|p| p.profit).sum::<f64>() / n,
                ps.iter().map(|p| p.t_kappa as f64).sum::<f64>() / n,
            ));
        }
        println!(
            "{kappa:>8} {:>12.4} {:>8.1} {:>12.4} {:>8.1}",
            cols[0].0, cols[0].1, cols[1].0, cols[1].1
        );
    }
    Ok(())
}

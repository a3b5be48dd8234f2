//! Profit of stopping at threshold κ: the objective value at the incumbent
//! when the run stops, minus κ per evaluation spent. Values are in the
//! maximization convention, so a minimized objective contributes `−f`.

use serde::{Deserialize, Serialize};

use super::{RunTrace, TerminationReason};
use crate::error::{Error, Result};
use crate::objective::Truth;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profit {
    pub kappa: f64,
    /// Evaluations spent when the run stopped.
    pub t_kappa: usize,
    /// Noiseless objective value at the incumbent, in objective units.
    pub incumbent_value: f64,
    pub profit: f64,
    /// False when the budget ran out before the threshold was reached; then
    /// `t_kappa` is the budget.
    pub reached: bool,
}

/// Profit of a finished run at its own stopping point.
pub fn compute_profit(trace: &RunTrace, kappa: f64, truth: Option<&dyn Truth>) -> Result<Profit> {
    let truth = truth.ok_or_else(|| Error::input("profit needs the noiseless objective"))?;
    let f = truth.value(&trace.final_incumbent.x)?;
    let t = trace.termination.at;
    Ok(assemble(
        trace,
        kappa,
        t,
        f,
        trace.termination.reason == TerminationReason::KappaReached,
    ))
}

/// Profit the run would have achieved with threshold `kappa`, read off a
/// trace recorded without stopping. Stopping never changes the decisions
/// made before the stop, so the stop point is the first acquired record
/// whose acquisition value falls below `kappa`; the incumbent at that point
/// is the one stored with that record.
pub fn profit_at_threshold(trace: &RunTrace, kappa: f64, truth: Option<&dyn Truth>) -> Result<Profit> {
    if trace.config.kappa != 0.0 {
        return Err(Error::input("profit replay needs a trace recorded with kappa = 0"));
    }
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::input(format!("kappa must be nonnegative, got {kappa}")));
    }
    let truth = truth.ok_or_else(|| Error::input("profit needs the noiseless objective"))?;
    let stop = if kappa > 0.0 {
        trace
            .acquired()
            .find(|r| r.acq_value.is_some_and(|a| a < kappa))
    } else {
        None
    };
    match stop {
        Some(r) => {
            let inc = r.incumbent.as_ref().expect("acquired records carry an incumbent");
            let f = truth.value(&inc.x)?;
            Ok(assemble(trace, kappa, r.t - 1, f, true))
        }
        None => {
            let f = truth.value(&trace.final_incumbent.x)?;
            Ok(assemble(trace, kappa, trace.records.len(), f, false))
        }
    }
}

fn assemble(trace: &RunTrace, kappa: f64, t_kappa: usize, f: f64, reached: bool) -> Profit {
    Profit {
        kappa,
        t_kappa,
        incumbent_value: f,
        profit: trace.config.goal.sign() * f - kappa * t_kappa as f64,
        reached,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::AcquisitionSpec;
    use crate::bo::{run_bo, Goal, IncumbentInfo, RunConfig, Termination};
    use crate::bounds::Bounds;

    fn stub_trace(reason: TerminationReason, at: usize, x: f64) -> RunTrace {
        let mut config = RunConfig::new(Bounds::unit(1), Goal::Maximize, AcquisitionSpec::corrected_ei(), 0);
        config.init_count = 9;
        config.max_iters = 20;
        RunTrace {
            config,
            records: Vec::new(),
            termination: Termination { reason, at, acq_value: None, snapshot: None, x: None },
            final_incumbent: IncumbentInfo { index: 0, x: vec![x], mu: 0.0, truth: None },
        }
    }

    #[test]
    fn arithmetic() {
        let trace = stub_trace(TerminationReason::KappaReached, 9, 0.5);
        let five = |_: &[f64]| Ok(5.0);
        let p = compute_profit(&trace, 0.1, Some(&five)).unwrap();
        assert!((p.profit - 4.1).abs() < 1e-12);
        assert!(p.reached);

        let trace = stub_trace(TerminationReason::BudgetExhausted, 20, 0.5);
        let p = compute_profit(&trace, 0.0, Some(&five)).unwrap();
        assert_eq!(p.profit, 5.0);
        assert!(!p.reached);
    }

    #[test]
    fn missing_truth_is_an_input_error() {
        let trace = stub_trace(TerminationReason::BudgetExhausted, 20, 0.5);
        assert!(matches!(compute_profit(&trace, 0.1, None), Err(Error::Input(_))));
    }

    #[test]
    fn replay_matches_a_real_stopped_run() {
        use crate::objective::Observation;
        let f = |x: &[f64]| (6.0 * x[0]).sin() + 0.5 * x[1];
        let truth = move |x: &[f64]| Ok(f(x));
        let mut base = RunConfig::new(Bounds::unit(2), Goal::Maximize, AcquisitionSpec::corrected_ei(), 4);
        base.max_iters = 16;
        base.acq_opt.n_raw = Some(128);
        let mk = || {
            let mut k = 0u64;
            move |x: &[f64]| {
                k += 1;
                let noise = 0.05 * ((k as f64 * 1.7).sin());
                Ok(Observation { y: f(x) + noise, noise_var: 0.01 })
            }
        };
        let full = run_bo(&base, &mut mk(), Some(&truth)).unwrap();
        let acq: Vec<f64> = full.acquired().map(|r| r.acq_value.unwrap()).collect();
        // A threshold strictly between two recorded values triggers a stop.
        let mut sorted = acq.clone();
        sorted.sort_by(f64::total_cmp);
        let kappa = 0.5 * (sorted[1] + sorted[2]);
        let replay = profit_at_threshold(&full, kappa, Some(&truth)).unwrap();

        let mut cfg = base.clone();
        cfg.kappa = kappa;
        let stopped = run_bo(&cfg, &mut mk(), Some(&truth)).unwrap();
        let direct = compute_profit(&stopped, kappa, Some(&truth)).unwrap();
        assert_eq!(replay, direct);
        assert!(direct.reached);
        assert_eq!(stopped.records[..], full.records[..stopped.records.len()]);

        let zero = profit_at_threshold(&full, 0.0, Some(&truth)).unwrap();
        assert_eq!(zero.t_kappa, 16);
    }
}

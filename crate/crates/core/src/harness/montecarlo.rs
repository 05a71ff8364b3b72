use rayon::prelude::*;

use super::sdof::{test_cases, training_poles, training_systems};
use super::{fir_errors, kautz_errors, ErrorCurve, ExperimentConfig, FilterKind, Histogram};
use crate::error::{Error, Result};
use crate::systems::sdof_impulse_response;

#[derive(Debug, Clone)]
pub struct MonteCarloReport {
    pub trials: usize,
    /// Trials whose pole estimate or fit failed; they are excluded.
    pub failures: Vec<(usize, String)>,
    /// Kautz best, Kautz bad, FIR best, FIR bad.
    pub curves: Vec<ErrorCurve>,
    /// Kautz error distribution at the highest order, per test case.
    pub histograms: Vec<(String, Histogram)>,
    /// Per-trial Kautz errors, per test case, in trial order.
    pub trial_errors: Vec<(String, Vec<Vec<f64>>)>,
}

impl MonteCarloReport {
    pub fn curve(&self, kind: FilterKind, case: &str) -> Option<&ErrorCurve> {
        self.curves.iter().find(|c| c.kind == kind && c.case == case)
    }
}

/// Repeats the SDOF study over `monte_carlo_trials` random training sets.
///
/// Trial `t` uses seed `seed + t`, so results do not depend on thread count.
/// Failed trials are logged and dropped; the run fails if they reach 1% of
/// all trials.
pub fn run_monte_carlo(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    cfg.validate()?;
    let cases = test_cases(cfg)?;
    let truths = cases
        .iter()
        .map(|(_, p)| sdof_impulse_response(p, cfg.sample_rate_hz, cfg.response_length))
        .collect::<Result<Vec<_>>>()?;

    let outcomes: Vec<Result<Vec<Vec<f64>>>> = (0..cfg.monte_carlo_trials)
        .into_par_iter()
        .map(|t| {
            let seed = cfg.seed.wrapping_add(t as u64);
            let training = training_systems(cfg, seed)?;
            let poles = training_poles(cfg, &training)?;
            truths
                .iter()
                .map(|h| kautz_errors(&poles.poles, h, &cfg.kautz_orders, cfg.mode, seed))
                .collect()
        })
        .collect();

    let mut failures = Vec::new();
    let mut per_case: Vec<Vec<Vec<f64>>> = vec![Vec::new(); cases.len()];
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(errors) => {
                for (c, e) in errors.into_iter().enumerate() {
                    per_case[c].push(e);
                }
            }
            Err(e) => {
                log::warn!("trial {t} failed: {e}");
                failures.push((t, e.to_string()));
            }
        }
    }
    if failures.len() * 100 >= cfg.monte_carlo_trials {
        return Err(Error::SamplingExhausted(failures.len()));
    }

    let mut curves = Vec::new();
    let mut histograms = Vec::new();
    for ((case, _), trials) in cases.iter().zip(&per_case) {
        curves.push(ErrorCurve::aggregate(FilterKind::Kautz, case, &cfg.kautz_orders, trials));
        let last: Vec<f64> = trials.iter().map(|t| *t.last().expect("orders are non-empty")).collect();
        histograms.push((case.to_string(), Histogram::new(&last, cfg.histogram_bins)));
    }
    for ((case, _), h) in cases.iter().zip(&truths) {
        let e = fir_errors(h, &cfg.fir_orders, cfg.mode, cfg.seed)?;
        curves.push(ErrorCurve::single(FilterKind::Fir, case, &cfg.fir_orders, &e));
    }
    Ok(MonteCarloReport {
        trials: cfg.monte_carlo_trials,
        failures,
        curves,
        histograms,
        trial_errors: cases.iter().map(|(c, _)| c.to_string()).zip(per_case).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            monte_carlo_trials: 16,
            kautz_orders: vec![2, 6, 10],
            ..ExperimentConfig::monte_carlo()
        }
    }

    #[test]
    fn deterministic_and_ordered() {
        let a = run_monte_carlo(&small()).unwrap();
        let b = run_monte_carlo(&small()).unwrap();
        assert_eq!(a.curves, b.curves);
        assert_eq!(a.trial_errors, b.trial_errors);
        assert_eq!(a.trial_errors[0].1.len() + a.failures.len(), 16);
        assert_eq!(a.histograms[0].1.total(), a.trial_errors[0].1.len());
        let best = a.curve(FilterKind::Kautz, "best").unwrap();
        assert!(best.stats.iter().all(|s| s.min <= s.mean && s.mean <= s.max));
    }

    #[test]
    fn zero_spread_matches_single_run() {
        let cfg = ExperimentConfig { cov: 0.0, pole_pairs: Some(1), ..small() };
        let r = run_monte_carlo(&cfg).unwrap();
        let best = r.curve(FilterKind::Kautz, "best").unwrap();
        assert!(best.stats.iter().all(|s| (s.max - s.min).abs() < 1e-12));
    }
}

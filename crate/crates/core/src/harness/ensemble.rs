use std::path::PathBuf;

use itertools::Itertools;
use rayon::prelude::*;

use super::{fir_errors, kautz_errors, ErrorCurve, ExperimentConfig, FilterKind, Histogram};
use crate::error::{invalid, Result};
use crate::io::read_ensemble_dir;
use crate::prony::{estimate_poles, TrainingEnsemble};
use crate::systems::{mdof_proxy_ensemble, MdofProxySpec};

/// Where the response ensemble comes from.
#[derive(Debug, Clone)]
pub enum EnsembleSource {
    Proxy { spec: MdofProxySpec, seed: u64 },
    Dir(PathBuf),
    Given(TrainingEnsemble),
}

impl EnsembleSource {
    pub fn load(&self, cfg: &ExperimentConfig) -> Result<TrainingEnsemble> {
        match self {
            Self::Proxy { spec, seed } => {
                mdof_proxy_ensemble(spec, cfg.sample_rate_hz, cfg.response_length, *seed)
            }
            Self::Dir(dir) => Ok(read_ensemble_dir(dir)?.1),
            Self::Given(e) => Ok(e.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubsetResult {
    pub training: Vec<usize>,
    pub pole_order: usize,
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EnsembleReport {
    pub test_index: usize,
    pub subsets: Vec<SubsetResult>,
    /// Subsets whose pole estimate or fit failed.
    pub failures: Vec<(Vec<usize>, String)>,
    pub kautz: ErrorCurve,
    pub fir: ErrorCurve,
    /// Kautz error distribution over subsets at the highest order.
    pub histogram: Histogram,
}

/// Identifies the held-out response at `test_index` with Kautz models whose
/// poles come from every `training_count`-subset of the remaining responses.
pub fn run_ensemble_experiment(cfg: &ExperimentConfig, source: &EnsembleSource) -> Result<EnsembleReport> {
    cfg.validate()?;
    let ensemble = source.load(cfg)?;
    let n = ensemble.len();
    if cfg.test_index >= n {
        return invalid(format!("test index {} outside ensemble of {n}", cfg.test_index));
    }
    if cfg.training_count >= n {
        return invalid(format!("training count {} leaves no held-out response among {n}", cfg.training_count));
    }
    let test = &ensemble.responses()[cfg.test_index];
    let pairs = cfg.pole_pairs();
    let subsets: Vec<Vec<usize>> = (0..n)
        .filter(|i| *i != cfg.test_index)
        .combinations(cfg.training_count)
        .collect();
    log::info!("{} training subsets of size {}", subsets.len(), cfg.training_count);

    let outcomes: Vec<Result<SubsetResult>> = subsets
        .par_iter()
        .map(|idx| {
            let poles = estimate_poles(&ensemble.select(idx)?, pairs)?;
            let errors = kautz_errors(&poles.poles, test, &cfg.kautz_orders, cfg.mode, cfg.seed)?;
            Ok(SubsetResult {
                training: idx.clone(),
                pole_order: poles.order,
                errors,
            })
        })
        .collect();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (idx, o) in subsets.into_iter().zip(outcomes) {
        match o {
            Ok(r) => results.push(r),
            Err(e) => {
                log::warn!("subset {idx:?} failed: {e}");
                failures.push((idx, e.to_string()));
            }
        }
    }
    if results.is_empty() {
        return invalid("every training subset failed");
    }
    let trials: Vec<Vec<f64>> = results.iter().map(|r| r.errors.clone()).collect();
    let last: Vec<f64> = trials.iter().map(|t| *t.last().expect("orders are non-empty")).collect();
    let fir = fir_errors(test, &cfg.fir_orders, cfg.mode, cfg.seed)?;
    Ok(EnsembleReport {
        test_index: cfg.test_index,
        kautz: ErrorCurve::aggregate(FilterKind::Kautz, "test", &cfg.kautz_orders, &trials),
        fir: ErrorCurve::single(FilterKind::Fir, "test", &cfg.fir_orders, &fir),
        histogram: Histogram::new(&last, cfg.histogram_bins),
        subsets: results,
        failures,
    })
}

//! Experiment orchestration: SDOF study, Monte-Carlo sweeps over random
//! training sets, held-out ensemble identification and cost accounting.

pub mod config;
pub mod cost;
pub mod curves;
pub mod ensemble;
pub mod montecarlo;
pub mod report;
pub mod sdof;

pub use config::{ExperimentConfig, IdentificationMode, TrainingSource};
pub use cost::{cost_model, CostReport, FilterKind};
pub use curves::{ErrorCurve, Histogram, OrderStats};
pub use ensemble::{run_ensemble_experiment, EnsembleReport, EnsembleSource};
pub use montecarlo::{run_monte_carlo, MonteCarloReport};
pub use sdof::{run_sdof_experiment, Overlay, SdofReport};

use crate::adaptive::{fir_identify, lms_identify, nested_ls_errors, LmsConfig, Plant};
use crate::bank::{KautzBank, PoleSet};
use crate::error::{invalid, Result};
use crate::signal::{normalized_error, ImpulseResponse};

/// Normalized errors of Kautz models of each (even) order built from the
/// cyclic repetition of `poles`.
///
/// In LS mode all orders share one bank and one QR factorization, so the
/// errors are non-increasing in the order.
pub fn kautz_errors(
    poles: &PoleSet,
    target: &ImpulseResponse,
    orders: &[usize],
    mode: IdentificationMode,
    seed: u64,
) -> Result<Vec<f64>> {
    let Some(&max_order) = orders.iter().max() else {
        return Ok(Vec::new());
    };
    if orders.iter().any(|o| *o == 0 || o % 2 != 0) {
        return invalid("Kautz orders must be even and positive");
    }
    match mode {
        IdentificationMode::Ls => {
            let bank = KautzBank::new(poles.cyclic(max_order / 2))?;
            let basis = bank.basis_matrix(target.len());
            nested_ls_errors(&basis, target.samples(), orders)
        }
        IdentificationMode::Lms => orders
            .iter()
            .map(|&o| {
                let bank = KautzBank::new(poles.cyclic(o / 2))?;
                let run = lms_identify(&bank, &Plant::Impulse(target.clone()), &LmsConfig::with_seed(seed))?;
                let model = bank.model_impulse_response(&run.converged_weights, target.len(), target.sample_rate_hz())?;
                normalized_error(target, &model)
            })
            .collect(),
    }
}

/// Normalized errors of FIR models of each order (`order + 1` taps).
///
/// The LS fit of an FIR filter to an impulse response is its leading
/// `order + 1` samples, so the error is the remaining tail energy.
pub fn fir_errors(
    target: &ImpulseResponse,
    orders: &[usize],
    mode: IdentificationMode,
    seed: u64,
) -> Result<Vec<f64>> {
    let energy = target.energy();
    if energy <= 0.0 {
        return Err(crate::error::Error::ZeroEnergy);
    }
    match mode {
        IdentificationMode::Ls => {
            let s = target.samples();
            Ok(orders
                .iter()
                .map(|&o| {
                    let kept: f64 = s.iter().take(o + 1).map(|x| x * x).sum();
                    ((energy - kept) / energy).max(0.0)
                })
                .collect())
        }
        IdentificationMode::Lms => orders
            .iter()
            .map(|&o| {
                let run = fir_identify(&Plant::Impulse(target.clone()), o, &LmsConfig::with_seed(seed))?;
                normalized_error(target, &run.converged.impulse_response(target.sample_rate_hz())?)
            })
            .collect(),
    }
}

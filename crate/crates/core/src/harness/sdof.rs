use super::{fir_errors, kautz_errors, ErrorCurve, ExperimentConfig, FilterKind, IdentificationMode, TrainingSource};
use crate::adaptive::{lms_identify, ls_optimal_weights, LmsConfig, Plant};
use crate::bank::{KautzBank, WeightVector};
use crate::error::Result;
use crate::prony::{estimate_poles, ScreenedPoles, TrainingEnsemble};
use crate::signal::{normalized_error, FrequencyResponse, ImpulseResponse};
use crate::systems::{sample_systems, sdof_impulse_response, reference_training, SdofParams};

/// Truth and model responses of one test case at a fixed Kautz order.
#[derive(Debug, Clone)]
pub struct Overlay {
    pub case: String,
    pub order: usize,
    pub weights: WeightVector,
    pub truth: ImpulseResponse,
    pub model: ImpulseResponse,
    pub truth_frf: FrequencyResponse,
    pub model_frf: FrequencyResponse,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct SdofReport {
    pub training: Vec<SdofParams>,
    pub poles: ScreenedPoles,
    /// Kautz best, Kautz bad, FIR best, FIR bad.
    pub curves: Vec<ErrorCurve>,
    pub overlays: Vec<Overlay>,
}

impl SdofReport {
    pub fn curve(&self, kind: FilterKind, case: &str) -> Option<&ErrorCurve> {
        self.curves.iter().find(|c| c.kind == kind && c.case == case)
    }
}

/// Training systems for a run seeded with `seed`.
pub fn training_systems(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<SdofParams>> {
    match cfg.training {
        TrainingSource::Reference => {
            let mut t = reference_training();
            t.truncate(cfg.training_count);
            Ok(t)
        }
        TrainingSource::Random => sample_systems(&cfg.uncertainty(seed), cfg.training_count),
    }
}

/// Prony poles of the impulse responses of `training`.
pub fn training_poles(cfg: &ExperimentConfig, training: &[SdofParams]) -> Result<ScreenedPoles> {
    let responses = training
        .iter()
        .map(|p| sdof_impulse_response(p, cfg.sample_rate_hz, cfg.response_length))
        .collect::<Result<Vec<_>>>()?;
    estimate_poles(&TrainingEnsemble::new(responses)?, cfg.pole_pairs())
}

/// Best- and bad-case test systems.
pub fn test_cases(cfg: &ExperimentConfig) -> Result<Vec<(&'static str, SdofParams)>> {
    Ok(vec![
        ("best", SdofParams::new(cfg.best_case.0, cfg.best_case.1)?),
        ("bad", SdofParams::new(cfg.bad_case.0, cfg.bad_case.1)?),
    ])
}

/// Single SDOF study: poles from the training systems, error curves of Kautz
/// and FIR models for both test cases, and overlays at `overlay_order`.
pub fn run_sdof_experiment(cfg: &ExperimentConfig) -> Result<SdofReport> {
    cfg.validate()?;
    let training = training_systems(cfg, cfg.seed)?;
    let poles = training_poles(cfg, &training)?;
    log::info!(
        "estimated {} pole pairs at Prony order {} ({} retries)",
        poles.poles.len(),
        poles.order,
        poles.retries
    );
    let mut kautz = Vec::new();
    let mut fir = Vec::new();
    let mut overlays = Vec::new();
    for (case, params) in test_cases(cfg)? {
        let truth = sdof_impulse_response(&params, cfg.sample_rate_hz, cfg.response_length)?;
        let e = kautz_errors(&poles.poles, &truth, &cfg.kautz_orders, cfg.mode, cfg.seed)?;
        kautz.push(ErrorCurve::single(FilterKind::Kautz, case, &cfg.kautz_orders, &e));
        let e = fir_errors(&truth, &cfg.fir_orders, cfg.mode, cfg.seed)?;
        fir.push(ErrorCurve::single(FilterKind::Fir, case, &cfg.fir_orders, &e));
        overlays.push(overlay(cfg, &poles, case, &truth)?);
    }
    kautz.extend(fir);
    Ok(SdofReport {
        training,
        poles,
        curves: kautz,
        overlays,
    })
}

fn overlay(cfg: &ExperimentConfig, poles: &ScreenedPoles, case: &str, truth: &ImpulseResponse) -> Result<Overlay> {
    let bank = KautzBank::new(poles.poles.cyclic(cfg.overlay_order / 2))?;
    let fs = truth.sample_rate_hz();
    let weights = match cfg.mode {
        IdentificationMode::Ls => ls_optimal_weights(&bank.basis_impulse_responses(truth.len(), fs)?, truth)?,
        IdentificationMode::Lms => {
            lms_identify(&bank, &Plant::Impulse(truth.clone()), &LmsConfig::with_seed(cfg.seed))?.converged_weights
        }
    };
    let model = bank.model_impulse_response(&weights, truth.len(), fs)?;
    Ok(Overlay {
        case: case.to_string(),
        order: cfg.overlay_order,
        error: normalized_error(truth, &model)?,
        truth_frf: FrequencyResponse::from_impulse_response(truth)?,
        model_frf: FrequencyResponse::from_impulse_response(&model)?,
        weights,
        truth: truth.clone(),
        model,
    })
}

//! Identification of resonant systems with fixed-pole Kautz filter banks.
//!
//! The crate covers the full pipeline: pole estimation from training
//! impulse responses with a multi-channel Prony method, construction of the
//! orthonormal bank, adaptation of its output weights, and the experiment
//! harness comparing the banks against adaptive FIR filters.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod bank;
pub mod error;
pub mod harness;
pub mod io;
pub mod poly;
pub mod prony;
pub mod signal;
pub mod systems;

pub use adaptive::{
    fir_identify, lms_identify, ls_optimal_weights, nested_ls_errors, projection_weights,
    white_noise, FirModel, FirRun, IdentificationRun, LmsConfig, Plant,
};
pub use bank::{build_kautz_bank, KautzBank, PolePair, PoleSet, WeightVector};
pub use error::{Error, Result};
pub use prony::{
    estimate_poles, extend_poles_periodically, modified_prony, screen_poles, PronyResult, ScreenedPoles,
    TrainingEnsemble,
};
pub use signal::{
    frf_to_impulse_response, impulse_response_of, inner_product, normalized_error,
    normalized_error_over, FrequencyResponse, ImpulseResponse, RationalTransferFunction,
};
pub use systems::{
    mdof_proxy_ensemble, sample_systems, sdof_discrete_poles, sdof_impulse_response,
    MdofProxySpec, SdofParams, UncertaintySpec,
};

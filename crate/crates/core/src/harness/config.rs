use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::systems::{UncertaintySpec, BAD_CASE, BEST_CASE};

/// How the output weights of a model are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentificationMode {
    /// Least-squares fit of the impulse response (deterministic).
    Ls,
    /// LMS adaptation driven by white noise.
    Lms,
}

/// Where the SDOF training systems come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingSource {
    /// The five fixed systems of the reference study.
    Reference,
    /// Drawn from the uncertainty model.
    Random,
}

/// Parameters shared by all experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sample_rate_hz: f64,
    pub response_length: usize,
    pub kautz_orders: Vec<usize>,
    pub fir_orders: Vec<usize>,
    pub training_count: usize,
    pub monte_carlo_trials: usize,
    pub seed: u64,
    pub mean_f0_hz: f64,
    pub mean_theta: f64,
    pub cov: f64,
    pub best_case: (f64, f64),
    pub bad_case: (f64, f64),
    pub training: TrainingSource,
    /// Pole pairs kept after screening; `None` uses one pair per training system.
    pub pole_pairs: Option<usize>,
    /// Index of the held-out response in ensemble experiments (0-based).
    pub test_index: usize,
    pub data_dir: Option<PathBuf>,
    pub histogram_bins: usize,
    pub mode: IdentificationMode,
    /// Kautz order of the exported model overlays.
    pub overlay_order: usize,
    pub lowcut_hz: f64,
}

fn range(start: usize, end: usize, step: usize) -> Vec<usize> {
    (start..=end).step_by(step).collect()
}

impl ExperimentConfig {
    /// Single SDOF run on the fixed training systems.
    pub fn sdof() -> Self {
        Self {
            sample_rate_hz: 500.0,
            response_length: 500,
            kautz_orders: range(2, 40, 2),
            fir_orders: range(10, 400, 10),
            training_count: 5,
            monte_carlo_trials: 1000,
            seed: 0,
            mean_f0_hz: BEST_CASE.0,
            mean_theta: BEST_CASE.1,
            cov: 0.05,
            best_case: BEST_CASE,
            bad_case: BAD_CASE,
            training: TrainingSource::Reference,
            pole_pairs: None,
            test_index: 11,
            data_dir: None,
            histogram_bins: 20,
            mode: IdentificationMode::Ls,
            overlay_order: 10,
            lowcut_hz: 10.0,
        }
    }

    /// SDOF study repeated over random training sets.
    pub fn monte_carlo() -> Self {
        Self {
            training: TrainingSource::Random,
            ..Self::sdof()
        }
    }

    /// Held-out identification over all training subsets of a response ensemble.
    pub fn ensemble() -> Self {
        Self {
            response_length: 2048,
            kautz_orders: range(12, 80, 4),
            fir_orders: range(50, 800, 50),
            training_count: 4,
            pole_pairs: Some(6),
            overlay_order: 80,
            ..Self::sdof()
        }
    }

    pub fn uncertainty(&self, seed: u64) -> UncertaintySpec {
        UncertaintySpec {
            mean_f0_hz: self.mean_f0_hz,
            mean_theta: self.mean_theta,
            cov: self.cov,
            seed,
        }
    }

    pub fn pole_pairs(&self) -> usize {
        self.pole_pairs.unwrap_or(self.training_count)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.sample_rate_hz > 0.0) {
            return fail(format!("sample_rate_hz must be positive, got {}", self.sample_rate_hz));
        }
        if self.response_length == 0 {
            return fail("response_length must be at least 1".into());
        }
        if self.kautz_orders.is_empty() {
            return fail("kautz_orders must not be empty".into());
        }
        if let Some(o) = self.kautz_orders.iter().find(|o| **o == 0 || !o.is_multiple_of(2)) {
            return fail(format!("kautz order {o} must be even and positive"));
        }
        if self.overlay_order == 0 || !self.overlay_order.is_multiple_of(2) {
            return fail(format!("overlay_order {} must be even and positive", self.overlay_order));
        }
        if self.training_count == 0 || self.monte_carlo_trials == 0 || self.histogram_bins == 0 {
            return fail("training_count, monte_carlo_trials and histogram_bins must be at least 1".into());
        }
        if self.pole_pairs == Some(0) {
            return fail("pole_pairs must be at least 1".into());
        }
        if self.cov < 0.0 {
            return fail(format!("cov must be non-negative, got {}", self.cov));
        }
        Ok(())
    }

    /// Overrides fields from a flat `key = value` file (TOML syntax).
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.apply(self);
        self.validate()
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    sample_rate_hz: Option<f64>,
    response_length: Option<usize>,
    kautz_orders: Option<Vec<usize>>,
    fir_orders: Option<Vec<usize>>,
    training_count: Option<usize>,
    monte_carlo_trials: Option<usize>,
    seed: Option<u64>,
    mean_f0_hz: Option<f64>,
    mean_theta: Option<f64>,
    cov: Option<f64>,
    best_f0_hz: Option<f64>,
    best_theta: Option<f64>,
    bad_f0_hz: Option<f64>,
    bad_theta: Option<f64>,
    training: Option<TrainingSource>,
    pole_pairs: Option<usize>,
    test_index: Option<usize>,
    data_dir: Option<PathBuf>,
    histogram_bins: Option<usize>,
    mode: Option<IdentificationMode>,
    overlay_order: Option<usize>,
    lowcut_hz: Option<f64>,
}

impl ConfigFile {
    fn apply(self, c: &mut ExperimentConfig) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { c.$field = v; }
            )*};
        }
        set!(
            sample_rate_hz,
            response_length,
            kautz_orders,
            fir_orders,
            training_count,
            monte_carlo_trials,
            seed,
            mean_f0_hz,
            mean_theta,
            cov,
            training,
            test_index,
            histogram_bins,
            mode,
            overlay_order,
            lowcut_hz
        );
        if self.pole_pairs.is_some() {
            c.pole_pairs = self.pole_pairs;
        }
        if self.data_dir.is_some() {
            c.data_dir = self.data_dir;
        }
        if let Some(v) = self.best_f0_hz {
            c.best_case.0 = v;
        }
        if let Some(v) = self.best_theta {
            c.best_case.1 = v;
        }
        if let Some(v) = self.bad_f0_hz {
            c.bad_case.0 = v;
        }
        if let Some(v) = self.bad_theta {
            c.bad_case.1 = v;
        }
    }
}

//! Single degree-of-freedom test plants with uncertain parameters and a
//! synthetic multi-mode ensemble with mass-loading variants.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bank::PolePair;
use crate::error::{invalid, Error, Result};
use crate::prony::TrainingEnsemble;
use crate::signal::{ImpulseResponse, RationalTransferFunction};

/// Resonance frequency, damping ratio and mass of an SDOF oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdofParams {
    f0_hz: f64,
    theta: f64,
    mass_kg: f64,
}

impl SdofParams {
    pub fn new(f0_hz: f64, theta: f64) -> Result<Self> {
        Self::with_mass(f0_hz, theta, 1.0)
    }

    pub fn with_mass(f0_hz: f64, theta: f64, mass_kg: f64) -> Result<Self> {
        if !(f0_hz > 0.0 && f0_hz.is_finite()) {
            return invalid(format!("resonance frequency must be positive, got {f0_hz}"));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return invalid(format!("damping ratio must lie in (0, 1), got {theta}"));
        }
        if !(mass_kg > 0.0 && mass_kg.is_finite()) {
            return invalid(format!("mass must be positive, got {mass_kg}"));
        }
        Ok(Self {
            f0_hz,
            theta,
            mass_kg,
        })
    }

    pub fn f0_hz(&self) -> f64 {
        self.f0_hz
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mass_kg(&self) -> f64 {
        self.mass_kg
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.f0_hz
    }

    /// Damped natural frequency in rad/s.
    pub fn omega_d(&self) -> f64 {
        self.omega0() * (1.0 - self.theta * self.theta).sqrt()
    }

    pub fn stiffness(&self) -> f64 {
        self.mass_kg * self.omega0().powi(2)
    }

    fn check_rate(&self, sample_rate_hz: f64) -> Result<()> {
        if !(sample_rate_hz > 0.0) || self.f0_hz >= sample_rate_hz / 2.0 {
            return invalid(format!(
                "resonance {} Hz must lie below the Nyquist frequency of {} Hz",
                self.f0_hz, sample_rate_hz
            ));
        }
        Ok(())
    }
}

/// Training systems of the reference SDOF study: `(f0 [Hz], theta)`.
pub const REFERENCE_TRAINING: [(f64, f64); 5] = [
    (53.5, 0.031),
    (50.7, 0.031),
    (50.5, 0.030),
    (54.0, 0.030),
    (48.0, 0.028),
];
/// Test system matching the nominal parameters.
pub const BEST_CASE: (f64, f64) = (50.0, 0.030);
/// Test system 15% above the nominal resonance.
pub const BAD_CASE: (f64, f64) = (57.5, 0.030);

pub fn reference_training() -> Vec<SdofParams> {
    REFERENCE_TRAINING
        .iter()
        .map(|&(f, t)| SdofParams::new(f, t).expect("table values are valid"))
        .collect()
}

/// Impulse-invariant discrete pole `exp(s t_s)` with `s = w0 (-theta + j sqrt(1 - theta^2))`.
pub fn sdof_discrete_poles(params: &SdofParams, sample_rate_hz: f64) -> Result<PolePair> {
    params.check_rate(sample_rate_hz)?;
    let ts = 1.0 / sample_rate_hz;
    let w0 = params.omega0();
    let s = num_complex::Complex64::new(-params.theta * w0, params.omega_d());
    PolePair::new((s * ts).exp())
}

/// Samples of `t_s / (m w_d) exp(-theta w0 t) sin(w_d t)` at `t = k t_s`.
pub fn sdof_impulse_response(
    params: &SdofParams,
    sample_rate_hz: f64,
    length: usize,
) -> Result<ImpulseResponse> {
    params.check_rate(sample_rate_hz)?;
    if length == 0 {
        return invalid("length must be at least 1");
    }
    let ts = 1.0 / sample_rate_hz;
    let sigma = params.theta * params.omega0();
    let wd = params.omega_d();
    let gain = ts / (params.mass_kg * wd);
    let samples = (0..length)
        .map(|k| {
            let t = k as f64 * ts;
            gain * (-sigma * t).exp() * (wd * t).sin()
        })
        .collect();
    ImpulseResponse::new(samples, sample_rate_hz)
}

/// The rational transfer function whose impulse response is [`sdof_impulse_response`].
pub fn sdof_transfer_function(params: &SdofParams, sample_rate_hz: f64) -> Result<RationalTransferFunction> {
    let p = sdof_discrete_poles(params, sample_rate_hz)?.pole();
    let ts = 1.0 / sample_rate_hz;
    let gain = ts / (params.mass_kg * params.omega_d());
    let r = p.norm();
    let phi = params.omega_d() * ts;
    RationalTransferFunction::new_stable(
        vec![gain * r * phi.sin(), 0.0],
        vec![1.0, -2.0 * p.re, p.norm_sqr()],
    )
}

/// Normal uncertainty on resonance frequency and damping.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintySpec {
    pub mean_f0_hz: f64,
    pub mean_theta: f64,
    /// Coefficient of variation applied to both parameters.
    pub cov: f64,
    pub seed: u64,
}

impl Default for UncertaintySpec {
    fn default() -> Self {
        Self {
            mean_f0_hz: BEST_CASE.0,
            mean_theta: BEST_CASE.1,
            cov: 0.05,
            seed: 0,
        }
    }
}

const MAX_DRAW_ATTEMPTS: usize = 100;

/// Draws `count` systems with `f0 ~ N(mean, cov mean)` and `theta ~ N(mean, cov mean)`.
///
/// Draws violating the [`SdofParams`] invariants are repeated, up to 100 times each.
pub fn sample_systems(spec: &UncertaintySpec, count: usize) -> Result<Vec<SdofParams>> {
    if count == 0 {
        return invalid("count must be at least 1");
    }
    if !(spec.cov >= 0.0) {
        return invalid(format!("coefficient of variation must be non-negative, got {}", spec.cov));
    }
    // validates the means
    let mean = SdofParams::new(spec.mean_f0_hz, spec.mean_theta)?;
    if spec.cov == 0.0 {
        return Ok(vec![mean; count]);
    }
    let f_dist = Normal::new(spec.mean_f0_hz, spec.cov * spec.mean_f0_hz).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let t_dist = Normal::new(spec.mean_theta, spec.cov * spec.mean_theta).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..count)
        .map(|_| {
            for _ in 0..MAX_DRAW_ATTEMPTS {
                let f = f_dist.sample(&mut rng);
                let t = t_dist.sample(&mut rng);
                if let Ok(p) = SdofParams::new(f, t) {
                    return Ok(p);
                }
            }
            Err(Error::SamplingExhausted(MAX_DRAW_ATTEMPTS))
        })
        .collect()
}

/// Synthetic multi-mode structure standing in for a mass-loaded test rig.
///
/// Variant 0 is the unloaded baseline. Every further variant places an extra
/// mass at a random location, which adds a random fraction `q` in `[0, 1]`
/// of a per-mode maximum modal mass increase. A mode's frequency then drops
/// by `1 / sqrt(1 + q kappa)` and its residue by `1 / (1 + q kappa)`, with
/// `kappa` chosen so that `q = 1` gives exactly the configured maximum shift.
#[derive(Debug, Clone, PartialEq)]
pub struct MdofProxySpec {
    pub modal_frequencies_hz: Vec<f64>,
    pub damping_ratios: Vec<f64>,
    /// Largest relative downward frequency shift per mode.
    pub max_frequency_shifts: Vec<f64>,
    pub variant_count: usize,
}

impl Default for MdofProxySpec {
    fn default() -> Self {
        Self {
            modal_frequencies_hz: vec![16.1, 37.4, 61.8, 94.6, 128.9, 162.3],
            damping_ratios: vec![0.02, 0.015, 0.012, 0.01, 0.01, 0.008],
            max_frequency_shifts: vec![0.14, 0.023, 0.023, 0.023, 0.023, 0.023],
            variant_count: 14,
        }
    }
}

impl MdofProxySpec {
    fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        let n = self.modal_frequencies_hz.len();
        if n == 0 {
            return invalid("at least one mode is required");
        }
        if self.damping_ratios.len() != n || self.max_frequency_shifts.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: self.damping_ratios.len().min(self.max_frequency_shifts.len()),
            });
        }
        if self.modal_frequencies_hz.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("modal frequencies must be strictly increasing");
        }
        if self.modal_frequencies_hz.iter().any(|f| !(*f > 0.0 && *f < sample_rate_hz / 2.0)) {
            return invalid("modal frequencies must lie in (0, Nyquist)");
        }
        if self.damping_ratios.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return invalid("damping ratios must lie in (0, 1)");
        }
        if self.max_frequency_shifts.iter().any(|s| !(*s >= 0.0 && *s < 1.0)) {
            return invalid("frequency shifts must lie in [0, 1)");
        }
        if self.variant_count == 0 {
            return invalid("variant count must be at least 1");
        }
        Ok(())
    }
}

/// Modal parameters of one proxy variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyVariant {
    pub frequencies_hz: Vec<f64>,
    pub damping_ratios: Vec<f64>,
    pub residues: Vec<f64>,
}

impl ProxyVariant {
    pub fn impulse_response(&self, sample_rate_hz: f64, length: usize) -> Result<ImpulseResponse> {
        let ts = 1.0 / sample_rate_hz;
        let mut h = vec![0.0; length];
        for ((&f, &theta), &a) in self
            .frequencies_hz
            .iter()
            .zip(&self.damping_ratios)
            .zip(&self.residues)
        {
            let w0 = 2.0 * PI * f;
            let wd = w0 * (1.0 - theta * theta).sqrt();
            for (k, hk) in h.iter_mut().enumerate() {
                let t = k as f64 * ts;
                *hk += a * (-theta * w0 * t).exp() * (wd * t).sin();
            }
        }
        ImpulseResponse::new(h, sample_rate_hz)
    }
}

/// Modal parameters of all variants, deterministically from `seed`.
pub fn mdof_proxy_variants(
    spec: &MdofProxySpec,
    sample_rate_hz: f64,
    seed: u64,
) -> Result<Vec<ProxyVariant>> {
    spec.validate(sample_rate_hz)?;
    let modes = spec.modal_frequencies_hz.len();
    let mut base_rng = ChaCha8Rng::seed_from_u64(seed);
    let residues: Vec<f64> = (0..modes)
        .map(|_| {
            let sign = if base_rng.random_bool(0.5) { 1.0 } else { -1.0 };
            sign * base_rng.random_range(0.5..1.5)
        })
        .collect();
    let kappa: Vec<f64> = spec
        .max_frequency_shifts
        .iter()
        .map(|s| (1.0 - s).powi(-2) - 1.0)
        .collect();

    let mut variants = vec![ProxyVariant {
        frequencies_hz: spec.modal_frequencies_hz.clone(),
        damping_ratios: spec.damping_ratios.clone(),
        residues: residues.clone(),
    }];
    for v in 1..spec.variant_count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(v as u64);
        let mut accepted = None;
        for _ in 0..MAX_DRAW_ATTEMPTS {
            let q: Vec<f64> = (0..modes).map(|_| rng.random_range(0.0..=1.0)).collect();
            let freqs: Vec<f64> = spec
                .modal_frequencies_hz
                .iter()
                .zip(&kappa)
                .zip(&q)
                .map(|((f, k), q)| f / (1.0 + q * k).sqrt())
                .collect();
            let collides = freqs.windows(2).any(|w| (w[1] - w[0]).abs() < 0.01 * w[1]);
            if !collides {
                accepted = Some((q, freqs));
                break;
            }
        }
        let (q, freqs) = accepted.ok_or(Error::SamplingExhausted(MAX_DRAW_ATTEMPTS))?;
        variants.push(ProxyVariant {
            frequencies_hz: freqs,
            damping_ratios: spec.damping_ratios.clone(),
            residues: residues
                .iter()
                .zip(&kappa)
                .zip(&q)
                .map(|((a, k), q)| a / (1.0 + q * k))
                .collect(),
        });
    }
    Ok(variants)
}

/// Impulse responses of all proxy variants.
pub fn mdof_proxy_ensemble(
    spec: &MdofProxySpec,
    sample_rate_hz: f64,
    length: usize,
    seed: u64,
) -> Result<TrainingEnsemble> {
    if length == 0 {
        return invalid("length must be at least 1");
    }
    let responses = mdof_proxy_variants(spec, sample_rate_hz, seed)?
        .iter()
        .map(|v| v.impulse_response(sample_rate_hz, length))
        .collect::<Result<Vec<_>>>()?;
    TrainingEnsemble::new(responses)
}

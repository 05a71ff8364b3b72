//! Adaptive linear combiner over the Kautz bank outputs, an adaptive FIR
//! baseline and least-squares references for the converged weights.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bank::{KautzBank, WeightVector};
use crate::error::{invalid, Error, Result};
use crate::signal::{ImpulseResponse, RationalFilter, RationalTransferFunction};

/// Normalized step size `mu * input_power * taps` used when none is given.
pub const DEFAULT_NORMALIZED_STEP: f64 = 0.01;
pub const MAX_DEFAULT_STEPS: usize = 1_000_000;
/// Running error power above this multiple of the input power aborts a run.
pub const DIVERGENCE_RATIO: f64 = 1e6;

/// Reproducible zero-mean Gaussian white noise.
pub fn white_noise(seed: u64, n: usize, variance: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return invalid("noise length must be at least 1");
    }
    let mut source = NoiseSource::new(seed, variance)?;
    Ok((0..n).map(|_| source.next()).collect())
}

struct NoiseSource {
    rng: ChaCha8Rng,
    dist: Normal<f64>,
}

impl NoiseSource {
    fn new(seed: u64, variance: f64) -> Result<Self> {
        Self::with_stream(seed, 0, variance)
    }

    fn with_stream(seed: u64, stream: u64, variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return invalid(format!("noise variance must be positive, got {variance}"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(Self {
            rng,
            dist: Normal::new(0.0, variance.sqrt()).expect("positive std"),
        })
    }

    fn next(&mut self) -> f64 {
        self.dist.sample(&mut self.rng)
    }
}

/// The system being identified.
#[derive(Debug, Clone)]
pub enum Plant {
    Rational(RationalTransferFunction),
    Impulse(ImpulseResponse),
}

impl Plant {
    /// Impulse response of the plant; rational plants are simulated for `length` samples.
    pub fn impulse_response(&self, length: usize, sample_rate_hz: f64) -> Result<ImpulseResponse> {
        match self {
            Plant::Rational(tf) => crate::signal::impulse_response_of(tf, length, sample_rate_hz),
            Plant::Impulse(ir) => ir.resized(length),
        }
    }

    fn simulator(&self) -> Result<PlantSim> {
        Ok(match self {
            Plant::Rational(tf) => {
                tf.check_stable()?;
                PlantSim::Rational(RationalFilter::new(tf))
            }
            Plant::Impulse(ir) => PlantSim::Convolution {
                taps: ir.samples().to_vec(),
                history: vec![0.0; ir.len()],
                head: 0,
            },
        })
    }
}

enum PlantSim {
    Rational(RationalFilter),
    Convolution {
        taps: Vec<f64>,
        history: Vec<f64>,
        head: usize,
    },
}

impl PlantSim {
    fn step(&mut self, u: f64) -> f64 {
        match self {
            PlantSim::Rational(f) => f.step(u),
            PlantSim::Convolution {
                taps,
                history,
                head,
            } => {
                let n = taps.len();
                *head = (*head + n - 1) % n;
                history[*head] = u;
                // history[head..] holds u(k), u(k-1), ...; history[..head] continues after the wrap.
                let (wrapped, recent) = history.split_at(*head);
                let mut acc = 0.0;
                for (t, x) in taps.iter().zip(recent.iter().chain(wrapped.iter())) {
                    acc += t * x;
                }
                acc
            }
        }
    }
}

/// Settings for an LMS run. `None` fields take the documented defaults.
#[derive(Debug, Clone)]
pub struct LmsConfig {
    /// Step size; defaults to `0.01 / (variance * taps)`.
    pub mu: Option<f64>,
    /// Number of adaptation steps; defaults to `200 * taps / 0.01`, capped at one million.
    pub steps: Option<usize>,
    pub seed: u64,
    /// Excitation variance.
    pub variance: f64,
    /// Standard deviation of additive white noise on the desired signal.
    pub measurement_noise_std: f64,
}

impl Default for LmsConfig {
    fn default() -> Self {
        Self {
            mu: None,
            steps: None,
            seed: 0,
            variance: 1.0,
            measurement_noise_std: 0.0,
        }
    }
}

impl LmsConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn resolve(&self, taps: usize) -> Result<(f64, usize)> {
        let normalized = match self.mu {
            Some(mu) => {
                if !(mu > 0.0 && mu.is_finite()) {
                    return invalid(format!("step size must be positive, got {mu}"));
                }
                mu * self.variance * taps as f64
            }
            None => DEFAULT_NORMALIZED_STEP,
        };
        let mu = normalized / (self.variance * taps as f64);
        let steps = match self.steps {
            Some(0) => return invalid("at least one adaptation step is required"),
            Some(s) => s,
            None => ((200.0 * taps as f64 / normalized) as usize).min(MAX_DEFAULT_STEPS),
        };
        Ok((mu, steps))
    }
}

/// Result of adapting a Kautz combiner.
#[derive(Debug, Clone)]
pub struct IdentificationRun {
    pub mu: f64,
    pub steps: usize,
    pub seed: u64,
    pub variance: f64,
    /// Weights after the last step.
    pub weights: WeightVector,
    /// Weights averaged over the final 10% of steps.
    pub converged_weights: WeightVector,
    /// `e(k) = d(k) - y(k)` for every step.
    pub error_history: Vec<f64>,
    /// Relative weight change over the last 10% of steps stayed below 0.1%.
    pub converged: bool,
}

impl IdentificationRun {
    /// Mean squared error over the second half of the run.
    pub fn late_error_power(&self) -> f64 {
        let tail = &self.error_history[self.error_history.len() / 2..];
        tail.iter().map(|e| e * e).sum::<f64>() / tail.len() as f64
    }
}

struct LmsOutcome {
    mu: f64,
    steps: usize,
    weights: Vec<f64>,
    averaged: Vec<f64>,
    history: Vec<f64>,
    converged: bool,
}

/// Runs the combined LMS loop shared by the Kautz and FIR identifiers.
///
/// `regress` advances the regressor generator by one input sample and writes
/// the regressor vector.
fn run_lms(
    taps: usize,
    plant: &Plant,
    config: &LmsConfig,
    mut regress: impl FnMut(f64, &mut [f64]),
) -> Result<LmsOutcome> {
    let (mu, steps) = config.resolve(taps)?;
    let mut excitation = NoiseSource::new(config.seed, config.variance)?;
    let mut noise = if config.measurement_noise_std > 0.0 {
        Some(NoiseSource::with_stream(
            config.seed,
            1,
            config.measurement_noise_std.powi(2),
        )?)
    } else {
        None
    };
    let mut sim = plant.simulator()?;
    let mut w = vec![0.0; taps];
    let mut x = vec![0.0; taps];
    let mut history = Vec::with_capacity(steps);
    let tail_start = steps - (steps / 10).max(1);
    let mut tail_sum = vec![0.0; taps];
    let mut w_at_tail = vec![0.0; taps];
    let mut err_power = 0.0;
    let smoothing = 1.0 / 1000.0;

    for k in 0..steps {
        let u = excitation.next();
        regress(u, &mut x);
        let mut d = sim.step(u);
        if let Some(n) = noise.as_mut() {
            d += n.next();
        }
        let y: f64 = w.iter().zip(&x).map(|(w, x)| w * x).sum();
        let e = d - y;
        for (wi, xi) in w.iter_mut().zip(&x) {
            *wi += mu * xi * e;
        }
        err_power += smoothing * (e * e - err_power);
        if !err_power.is_finite() || err_power > DIVERGENCE_RATIO * config.variance {
            return Err(Error::Diverged {
                step: k,
                error_power: err_power,
                input_power: config.variance,
            });
        }
        history.push(e);
        if k == tail_start {
            w_at_tail.copy_from_slice(&w);
        }
        if k >= tail_start {
            for (s, wi) in tail_sum.iter_mut().zip(&w) {
                *s += wi;
            }
        }
    }
    let count = (steps - tail_start) as f64;
    let averaged: Vec<f64> = tail_sum.iter().map(|s| s / count).collect();
    let change: f64 = w
        .iter()
        .zip(&w_at_tail)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = w.iter().map(|a| a * a).sum::<f64>().sqrt();
    let converged = change <= 1e-3 * norm || norm == 0.0;
    Ok(LmsOutcome {
        mu,
        steps,
        weights: w,
        averaged,
        history,
        converged,
    })
}

/// Identifies `plant` by adapting the output weights of `bank` with LMS.
///
/// The bank is cloned and reset, so the caller's instance is untouched.
pub fn lms_identify(bank: &KautzBank, plant: &Plant, config: &LmsConfig) -> Result<IdentificationRun> {
    let mut bank = bank.clone();
    bank.reset();
    let taps = bank.order();
    let out = run_lms(taps, plant, config, |u, x| {
        let y = bank.step(u).expect("finite excitation");
        x.copy_from_slice(y);
    })?;
    Ok(IdentificationRun {
        mu: out.mu,
        steps: out.steps,
        seed: config.seed,
        variance: config.variance,
        weights: WeightVector::new(out.weights)?,
        converged_weights: WeightVector::new(out.averaged)?,
        error_history: out.history,
        converged: out.converged,
    })
}

/// Transversal filter coefficients; order `n` means `n + 1` taps.
#[derive(Debug, Clone, PartialEq)]
pub struct FirModel {
    coefficients: Vec<f64>,
}

impl FirModel {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return invalid("FIR model needs at least one tap");
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return invalid("FIR coefficients must be finite");
        }
        Ok(Self { coefficients })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn impulse_response(&self, sample_rate_hz: f64) -> Result<ImpulseResponse> {
        ImpulseResponse::new(self.coefficients.clone(), sample_rate_hz)
    }
}

/// Result of adapting a transversal filter.
#[derive(Debug, Clone)]
pub struct FirRun {
    /// Taps after the last step.
    pub model: FirModel,
    /// Taps averaged over the final 10% of steps.
    pub converged: FirModel,
    pub error_history: Vec<f64>,
}

/// LMS-adapted FIR filter of the given order driven by white noise.
pub fn fir_identify(plant: &Plant, order: usize, config: &LmsConfig) -> Result<FirRun> {
    let taps = order + 1;
    let mut line = vec![0.0; taps];
    let out = run_lms(taps, plant, config, |u, x| {
        line.rotate_right(1);
        line[0] = u;
        x.copy_from_slice(&line);
    })?;
    Ok(FirRun {
        model: FirModel::new(out.weights)?,
        converged: FirModel::new(out.averaged)?,
        error_history: out.history,
    })
}

fn check_common_length(basis: &[ImpulseResponse], target: &ImpulseResponse) -> Result<()> {
    if basis.is_empty() {
        return invalid("basis is empty");
    }
    for b in basis {
        if b.len() != target.len() {
            return Err(Error::LengthMismatch {
                expected: target.len(),
                actual: b.len(),
            });
        }
    }
    Ok(())
}

/// Orthogonal projection coefficients `w_n = <psi_n, h>`.
pub fn projection_weights(basis: &[ImpulseResponse], target: &ImpulseResponse) -> Result<WeightVector> {
    check_common_length(basis, target)?;
    let w = basis
        .iter()
        .map(|b| crate::signal::inner_product(b, target))
        .collect::<Result<Vec<_>>>()?;
    WeightVector::new(w)
}

/// Least-squares weights minimizing `|h - sum w_n psi_n|^2` over the common length.
///
/// For an orthonormal basis this coincides with [`projection_weights`]; the
/// SVD solve keeps it correct when truncation makes the columns slightly
/// non-orthogonal.
pub fn ls_optimal_weights(basis: &[ImpulseResponse], target: &ImpulseResponse) -> Result<WeightVector> {
    check_common_length(basis, target)?;
    let k = target.len();
    let a = DMatrix::from_fn(k, basis.len(), |i, j| basis[j].samples()[i]);
    let h = DVector::from_column_slice(target.samples());
    let svd = a.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    let w = svd.solve(&h, eps).map_err(|e| Error::InvalidInput(e.to_string()))?;
    WeightVector::new(w.iter().copied().collect())
}

/// Normalized LS errors of `target` against nested column prefixes of `basis`.
///
/// `prefixes` lists column counts; each must not exceed the number of
/// columns. One Householder QR serves all prefixes, so the errors are
/// non-increasing in the prefix length by construction.
pub fn nested_ls_errors(basis: &DMatrix<f64>, target: &[f64], prefixes: &[usize]) -> Result<Vec<f64>> {
    if basis.nrows() != target.len() {
        return Err(Error::LengthMismatch {
            expected: basis.nrows(),
            actual: target.len(),
        });
    }
    let cols = basis.ncols();
    if let Some(&p) = prefixes.iter().find(|&&p| p > cols) {
        return invalid(format!("prefix {p} exceeds {cols} basis columns"));
    }
    let energy: f64 = target.iter().map(|x| x * x).sum();
    if energy <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let usable = cols.min(basis.nrows());
    let qr = basis.columns(0, usable).into_owned().qr();
    let mut coeffs = DVector::from_column_slice(target);
    qr.q_tr_mul(&mut coeffs);
    let mut captured = vec![0.0; usable + 1];
    for i in 0..usable {
        captured[i + 1] = captured[i] + coeffs[i] * coeffs[i];
    }
    Ok(prefixes
        .iter()
        .map(|&p| ((energy - captured[p.min(usable)]) / energy).max(0.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn bank() -> KautzBank {
        KautzBank::from_poles(&[Complex64::new(0.7, 0.5), Complex64::new(-0.2, 0.8)]).unwrap()
    }

    #[test]
    fn white_noise_is_reproducible() {
        let a = white_noise(42, 1000, 2.0).unwrap();
        let b = white_noise(42, 1000, 2.0).unwrap();
        assert_eq!(a, b);
        assert!(white_noise(1, 0, 1.0).is_err());
        assert!(white_noise(1, 10, 0.0).is_err());
    }

    #[test]
    fn white_noise_variance() {
        let x = white_noise(3, 1_000_000, 2.5).unwrap();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
        assert!((var / 2.5 - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn different_seeds_are_uncorrelated() {
        let a = white_noise(1, 100_000, 1.0).unwrap();
        let b = white_noise(2, 100_000, 1.0).unwrap();
        let c = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / 100_000.0;
        assert!(c.abs() < 0.01, "correlation {c}");
    }

    #[test]
    fn zero_plant_keeps_zero_weights() {
        let plant = Plant::Impulse(ImpulseResponse::new(vec![0.0; 10], 500.0).unwrap());
        let cfg = LmsConfig {
            steps: Some(5000),
            ..LmsConfig::with_seed(1)
        };
        let run = lms_identify(&bank(), &plant, &cfg).unwrap();
        assert!(run.weights.as_slice().iter().all(|w| *w == 0.0));
        assert_eq!(run.error_history.len(), 5000);
        assert!(run.converged);
    }

    #[test]
    fn recovers_weights_of_plant_in_span() {
        let bank = bank();
        let w_star = WeightVector::new(vec![0.8, -0.3, 0.5, 1.1]).unwrap();
        let len = bank.settle_length().unwrap();
        let plant = Plant::Impulse(bank.model_impulse_response(&w_star, len, 500.0).unwrap());
        let run = lms_identify(&bank, &plant, &LmsConfig::with_seed(5)).unwrap();
        assert!(run.weights.relative_distance(&w_star) < 0.01);
        assert!(run.converged);
    }

    #[test]
    fn divergence_is_reported() {
        let plant = Plant::Impulse(ImpulseResponse::new(vec![1.0, 0.5], 500.0).unwrap());
        let cfg = LmsConfig {
            mu: Some(5.0),
            steps: Some(10_000),
            ..LmsConfig::with_seed(1)
        };
        assert!(matches!(
            lms_identify(&bank(), &plant, &cfg),
            Err(Error::Diverged { .. })
        ));
        let bad_mu = LmsConfig {
            mu: Some(-1.0),
            ..LmsConfig::default()
        };
        assert!(lms_identify(&bank(), &plant, &bad_mu).is_err());
    }

    #[test]
    fn fir_learns_pure_delay() {
        // z^-3
        let tf = RationalTransferFunction::new(vec![1.0], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let run = fir_identify(&Plant::Rational(tf), 5, &LmsConfig::with_seed(9)).unwrap();
        for (i, c) in run.model.coefficients().iter().enumerate() {
            let expect = if i == 3 { 1.0 } else { 0.0 };
            assert!((c - expect).abs() < 1e-3, "tap {i} = {c}");
        }
    }

    #[test]
    fn fir_order_zero_learns_gain() {
        let tf = RationalTransferFunction::new(vec![-2.5], vec![1.0]).unwrap();
        let run = fir_identify(&Plant::Rational(tf), 0, &LmsConfig::with_seed(2)).unwrap();
        assert_eq!(run.model.order(), 0);
        assert!((run.model.coefficients()[0] + 2.5).abs() < 1e-3);
    }

    #[test]
    fn convolution_plant_matches_rational() {
        let tf = RationalTransferFunction::new(vec![0.4, 0.1], vec![1.0, -1.2, 0.5]).unwrap();
        let ir = crate::signal::impulse_response_of(&tf, 400, 1.0).unwrap();
        let mut a = Plant::Rational(tf).simulator().unwrap();
        let mut b = Plant::Impulse(ir).simulator().unwrap();
        for u in white_noise(4, 300, 1.0).unwrap() {
            assert!((a.step(u) - b.step(u)).abs() < 1e-9);
        }
    }

    #[test]
    fn ls_weights_examples() {
        let bank = bank();
        let len = bank.settle_length().unwrap();
        let basis = bank.basis_impulse_responses(len, 500.0).unwrap();
        let w = ls_optimal_weights(&basis, &basis[0]).unwrap();
        assert!(w.relative_distance(&WeightVector::unit(4, 0)) < 1e-9);

        // residual of an arbitrary signal after removing its projection is orthogonal to the span
        let noise = ImpulseResponse::new(white_noise(8, len, 1.0).unwrap(), 500.0).unwrap();
        let proj = projection_weights(&basis, &noise).unwrap();
        let fitted = bank.model_impulse_response(&proj, len, 500.0).unwrap();
        let residual = ImpulseResponse::new(
            noise.samples().iter().zip(fitted.samples()).map(|(a, b)| a - b).collect(),
            500.0,
        )
        .unwrap();
        let w = ls_optimal_weights(&basis, &residual).unwrap();
        assert!(w.as_slice().iter().all(|x| x.abs() < 1e-9));
        let p = projection_weights(&basis, &residual).unwrap();
        assert!(p.as_slice().iter().all(|x| x.abs() < 1e-9));

        let short = ImpulseResponse::new(vec![1.0; 3], 500.0).unwrap();
        assert!(matches!(
            ls_optimal_weights(&basis, &short),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn nested_errors_match_direct_ls() {
        let poles = [
            Complex64::new(0.7, 0.5),
            Complex64::new(-0.2, 0.8),
            Complex64::new(0.3, 0.3),
        ];
        let bank = KautzBank::from_poles(&poles).unwrap();
        let target = white_noise(12, 60, 1.0).unwrap();
        let m = bank.basis_matrix(60);
        let errs = nested_ls_errors(&m, &target, &[0, 2, 4, 6]).unwrap();
        assert!((errs[0] - 1.0).abs() < 1e-12);
        let h = ImpulseResponse::new(target.clone(), 1.0).unwrap();
        for (i, &p) in [2usize, 4, 6].iter().enumerate() {
            let sub = KautzBank::from_poles(&poles[..p / 2]).unwrap();
            let basis = sub.basis_impulse_responses(60, 1.0).unwrap();
            let w = ls_optimal_weights(&basis, &h).unwrap();
            let fit = sub.model_impulse_response(&w, 60, 1.0).unwrap();
            let direct = crate::signal::normalized_error(&h, &fit).unwrap();
            assert!((direct - errs[i + 1]).abs() < 1e-10);
        }
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!(nested_ls_errors(&m, &target, &[7]).is_err());
    }
}

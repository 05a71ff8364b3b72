//! Sampled signal types, inner products, the normalized approximation error and
//! frequency-response to impulse-response conversion.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::poly;

const RATE_TOLERANCE: f64 = 1e-9;

/// A finite, real-valued impulse response with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl ImpulseResponse {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return invalid(format!("sample rate must be positive, got {sample_rate_hz}"));
        }
        if samples.is_empty() {
            return invalid("impulse response must have at least one sample");
        }
        if let Some(k) = samples.iter().position(|s| !s.is_finite()) {
            return invalid(format!("sample {k} is not finite"));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    /// Truncates or zero-pads to `len` samples.
    pub fn resized(&self, len: usize) -> Result<Self> {
        let mut samples = self.samples.clone();
        samples.resize(len, 0.0);
        Self::new(samples, self.sample_rate_hz)
    }

    pub fn scaled(&self, gain: f64) -> Result<Self> {
        Self::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate_hz,
        )
    }
}

fn check_rates(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > RATE_TOLERANCE * a.max(b) {
        return Err(Error::SampleRateMismatch(a, b));
    }
    Ok(())
}

/// `sum_k a(k) b(k)` over the shorter of the two signals.
pub fn inner_product(a: &ImpulseResponse, b: &ImpulseResponse) -> Result<f64> {
    check_rates(a.sample_rate_hz, b.sample_rate_hz)?;
    Ok(a.samples.iter().zip(&b.samples).map(|(x, y)| x * y).sum())
}

/// Normalized approximation error `sum (h - h_hat)^2 / sum h^2`.
///
/// Both signals are compared over the longer of the two lengths, the shorter
/// one being zero-padded. Use [`normalized_error_over`] to fix the window.
pub fn normalized_error(h: &ImpulseResponse, h_hat: &ImpulseResponse) -> Result<f64> {
    normalized_error_over(h, h_hat, h.len().max(h_hat.len()))
}

/// Normalized approximation error over the first `window` samples.
pub fn normalized_error_over(
    h: &ImpulseResponse,
    h_hat: &ImpulseResponse,
    window: usize,
) -> Result<f64> {
    check_rates(h.sample_rate_hz, h_hat.sample_rate_hz)?;
    if window == 0 {
        return invalid("error window must be at least one sample");
    }
    let at = |s: &[f64], k: usize| s.get(k).copied().unwrap_or(0.0);
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..window {
        let x = at(&h.samples, k);
        let d = x - at(&h_hat.samples, k);
        num += d * d;
        den += x * x;
    }
    if den <= 0.0 {
        return Err(Error::ZeroEnergy);
    }
    Ok(num / den)
}

/// A sampled complex frequency response on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    frequencies_hz: Vec<f64>,
    values: Vec<Complex64>,
}

impl FrequencyResponse {
    pub fn new(frequencies_hz: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if frequencies_hz.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: frequencies_hz.len(),
                actual: values.len(),
            });
        }
        if frequencies_hz.len() < 2 {
            return invalid("frequency response needs at least two lines");
        }
        if frequencies_hz[0] < 0.0 || !frequencies_hz[0].is_finite() {
            return invalid("frequencies must start at or above 0 Hz");
        }
        if frequencies_hz.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("frequencies must be strictly increasing");
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return invalid("frequency response values must be finite");
        }
        Ok(Self {
            frequencies_hz,
            values,
        })
    }

    pub fn frequencies_hz(&self) -> &[f64] {
        &self.frequencies_hz
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_frequency_hz(&self) -> f64 {
        *self.frequencies_hz.last().expect("non-empty")
    }

    /// True when the grid is `i * df` for `i = 0..n`.
    pub fn is_uniform_from_zero(&self) -> bool {
        let n = self.frequencies_hz.len();
        let df = self.max_frequency_hz() / (n - 1) as f64;
        self.frequencies_hz
            .iter()
            .enumerate()
            .all(|(i, f)| (f - i as f64 * df).abs() <= 1e-6 * df)
    }

    /// Linear interpolation of real and imaginary parts onto `n` lines over `0..=max`.
    /// Lines below the first measured frequency are set to zero.
    pub fn resampled_uniform(&self, n: usize) -> Result<Self> {
        if n < 2 {
            return invalid("resampled grid needs at least two lines");
        }
        let fmax = self.max_frequency_hz();
        let df = fmax / (n - 1) as f64;
        let freqs: Vec<f64> = (0..n).map(|i| i as f64 * df).collect();
        let mut values = Vec::with_capacity(n);
        let mut j = 0;
        for &f in &freqs {
            if f < self.frequencies_hz[0] {
                values.push(Complex64::new(0.0, 0.0));
                continue;
            }
            while j + 2 < self.frequencies_hz.len() && self.frequencies_hz[j + 1] < f {
                j += 1;
            }
            let (f0, f1) = (self.frequencies_hz[j], self.frequencies_hz[j + 1]);
            let t = ((f - f0) / (f1 - f0)).clamp(0.0, 1.0);
            values.push(self.values[j] * (1.0 - t) + self.values[j + 1] * t);
        }
        Self::new(freqs, values)
    }

    /// One-sided spectrum of an impulse response: `len / 2 + 1` lines from 0 Hz to Nyquist.
    pub fn from_impulse_response(ir: &ImpulseResponse) -> Result<Self> {
        let n = ir.len();
        if n < 2 {
            return invalid("need at least two samples for a spectrum");
        }
        let mut buf: Vec<Complex64> = ir
            .samples()
            .iter()
            .map(|&s| Complex64::new(s, 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let lines = n / 2 + 1;
        let df = ir.sample_rate_hz() / n as f64;
        Self::new(
            (0..lines).map(|i| i as f64 * df).collect(),
            buf[..lines].to_vec(),
        )
    }
}

/// Converts a one-sided FRF into an impulse response.
///
/// Lines strictly below `lowcut_hz` are zeroed, the conjugate-symmetric
/// spectrum is assembled (DC and Nyquist lines contribute their real parts
/// only) and a real inverse FFT of length `2 (n - 1)` is taken. The sample
/// rate of the result is twice the highest frequency.
///
/// Non-uniform grids are rejected unless `resample` is set, in which case the
/// FRF is first interpolated onto a uniform grid with the same line count.
pub fn frf_to_impulse_response(
    frf: &FrequencyResponse,
    lowcut_hz: f64,
    resample: bool,
) -> Result<ImpulseResponse> {
    let fmax = frf.max_frequency_hz();
    if !(lowcut_hz >= 0.0 && lowcut_hz < fmax) {
        return invalid(format!(
            "low-cut {lowcut_hz} Hz must lie in [0, {fmax}) Hz"
        ));
    }
    let uniform;
    let frf = if frf.is_uniform_from_zero() {
        frf
    } else if resample {
        uniform = frf.resampled_uniform(frf.len())?;
        &uniform
    } else {
        return Err(Error::NonUniformGrid);
    };

    let lines = frf.len();
    let n = 2 * (lines - 1);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    for (i, (&f, &v)) in frf.frequencies_hz.iter().zip(&frf.values).enumerate() {
        if f < lowcut_hz {
            continue;
        }
        if i == 0 || i == lines - 1 {
            spectrum[i] = Complex64::new(v.re, 0.0);
        } else {
            spectrum[i] = v;
            spectrum[n - i] = v.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    let scale = 1.0 / n as f64;
    ImpulseResponse::new(
        spectrum.iter().map(|c| c.re * scale).collect(),
        2.0 * fmax,
    )
}

/// `B(z) / A(z)` with coefficients in descending powers of `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTransferFunction {
    numerator: Vec<f64>,
    denominator: Vec<f64>,
}

impl RationalTransferFunction {
    pub fn new(numerator: Vec<f64>, denominator: Vec<f64>) -> Result<Self> {
        let numerator = strip_leading_zeros(numerator);
        let denominator = strip_leading_zeros(denominator);
        if denominator.is_empty() {
            return invalid("denominator must have a nonzero coefficient");
        }
        if numerator.len() > denominator.len() {
            return invalid("transfer function is not causal (numerator degree exceeds denominator)");
        }
        if numerator
            .iter()
            .chain(&denominator)
            .any(|c| !c.is_finite())
        {
            return invalid("coefficients must be finite");
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    /// Builds the transfer function and rejects it unless every pole is strictly inside the unit circle.
    pub fn new_stable(numerator: Vec<f64>, denominator: Vec<f64>) -> Result<Self> {
        let tf = Self::new(numerator, denominator)?;
        tf.check_stable()?;
        Ok(tf)
    }

    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }

    pub fn poles(&self) -> Vec<Complex64> {
        poly::roots(&self.denominator)
    }

    pub fn check_stable(&self) -> Result<()> {
        match self.poles().into_iter().find(|p| p.norm() >= 1.0) {
            Some(p) => Err(Error::UnstableSystem(p)),
            None => Ok(()),
        }
    }

    /// Coefficients in ascending powers of `z^-1`: `(b, a)` with `a[0] != 0`.
    pub fn delay_form(&self) -> (Vec<f64>, Vec<f64>) {
        let delay = self.denominator.len() - self.numerator.len();
        let mut b = vec![0.0; delay];
        b.extend_from_slice(&self.numerator);
        (b, self.denominator.clone())
    }

    /// Evaluates `H(e^{j 2 pi f / fs})` at each frequency.
    pub fn frequency_response(
        &self,
        frequencies_hz: &[f64],
        sample_rate_hz: f64,
    ) -> Result<FrequencyResponse> {
        let eval = |c: &[f64], z: Complex64| c.iter().fold(Complex64::new(0.0, 0.0), |acc, &x| acc * z + x);
        let values = frequencies_hz
            .iter()
            .map(|f| {
                let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f / sample_rate_hz);
                eval(&self.numerator, z) / eval(&self.denominator, z)
            })
            .collect();
        FrequencyResponse::new(frequencies_hz.to_vec(), values)
    }
}

fn strip_leading_zeros(c: Vec<f64>) -> Vec<f64> {
    let start = c.iter().position(|x| *x != 0.0).unwrap_or(c.len());
    c[start..].to_vec()
}

/// Streaming direct-form recursion of a rational transfer function.
#[derive(Debug, Clone)]
pub struct RationalFilter {
    b: Vec<f64>,
    a: Vec<f64>,
    x_hist: Vec<f64>,
    y_hist: Vec<f64>,
}

impl RationalFilter {
    pub fn new(tf: &RationalTransferFunction) -> Self {
        let (b, a) = tf.delay_form();
        let a0 = a[0];
        Self {
            x_hist: vec![0.0; b.len()],
            y_hist: vec![0.0; a.len()],
            b: b.iter().map(|c| c / a0).collect(),
            a: a.iter().map(|c| c / a0).collect(),
        }
    }

    pub fn step(&mut self, x: f64) -> f64 {
        self.x_hist.rotate_right(1);
        self.x_hist[0] = x;
        let mut y: f64 = self.b.iter().zip(&self.x_hist).map(|(b, x)| b * x).sum();
        for i in 1..self.a.len() {
            y -= self.a[i] * self.y_hist[i - 1];
        }
        if !self.y_hist.is_empty() {
            self.y_hist.rotate_right(1);
            self.y_hist[0] = y;
        }
        y
    }
}

/// First `length` samples of the unit-impulse response of a stable rational system.
pub fn impulse_response_of(
    sys: &RationalTransferFunction,
    length: usize,
    sample_rate_hz: f64,
) -> Result<ImpulseResponse> {
    if length == 0 {
        return invalid("length must be at least 1");
    }
    sys.check_stable()?;
    let mut filter = RationalFilter::new(sys);
    let samples = (0..length)
        .map(|k| filter.step(if k == 0 { 1.0 } else { 0.0 }))
        .collect();
    ImpulseResponse::new(samples, sample_rate_hz)
}

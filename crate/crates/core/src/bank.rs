//! Kautz orthonormal filter bank.
//!
//! Stage `n` of the cascade applies
//!
//! ```text
//! H_1(z) = z^2 / ((z - p_1)(z - p_1*))
//! H_n(z) = (1 - p_{n-1} z)(1 - p_{n-1}* z) / ((z - p_n)(z - p_n*))
//! ```
//!
//! and two taps `V_1 = (1 - z)/z` and `V_2 = (1 + z)/z` on the stage output,
//! scaled by `c = sqrt((1 +- p)(1 +- p*)(1 - |p|^2) / 2)`. The resulting
//! `2N` impulse responses are orthonormal in `l2`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::signal::ImpulseResponse;

/// Imaginary parts below this magnitude are treated as real poles.
pub const REAL_POLE_THRESHOLD: f64 = 1e-6;

/// A complex-conjugate pole pair `{p, p*}` strictly inside the unit circle.
///
/// Stored with a positive imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolePair {
    pole: Complex64,
}

impl PolePair {
    pub fn new(pole: Complex64) -> Result<Self> {
        Self::checked(0, pole)
    }

    fn checked(index: usize, pole: Complex64) -> Result<Self> {
        if !(pole.norm() < 1.0) {
            return Err(Error::UnstablePole { index, pole });
        }
        if pole.im.abs() < REAL_POLE_THRESHOLD {
            return Err(Error::RealPole { index, pole });
        }
        let pole = if pole.im < 0.0 { pole.conj() } else { pole };
        Ok(Self { pole })
    }

    pub fn from_polar(radius: f64, angle: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(radius, angle))
    }

    /// The member of the pair with positive imaginary part.
    pub fn pole(&self) -> Complex64 {
        self.pole
    }

    pub fn radius(&self) -> f64 {
        self.pole.norm()
    }

    /// Normalized angular frequency in radians per sample.
    pub fn angle(&self) -> f64 {
        self.pole.arg()
    }

    /// Denominator `(a1, a2)` of `1 + a1 z^-1 + a2 z^-2`.
    fn denominator(&self) -> (f64, f64) {
        (-2.0 * self.pole.re, self.pole.norm_sqr())
    }
}

/// Ordered pole pairs; the order is the cascade order of the bank.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoleSet {
    pairs: Vec<PolePair>,
}

impl PoleSet {
    pub fn new(pairs: Vec<PolePair>) -> Self {
        Self { pairs }
    }

    /// Validates each pole, reporting the index of the first offending one.
    pub fn from_poles(poles: &[Complex64]) -> Result<Self> {
        let pairs = poles
            .iter()
            .enumerate()
            .map(|(i, &p)| PolePair::checked(i, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[PolePair] {
        &self.pairs
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.pairs.iter().map(PolePair::pole).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        self.pairs.iter().map(PolePair::radius).fold(0.0, f64::max)
    }

    /// First `n` pairs of the cyclic repetition of this set.
    pub fn cyclic(&self, n: usize) -> Self {
        Self {
            pairs: self.pairs.iter().copied().cycle().take(n).collect(),
        }
    }
}

/// Adaptive combiner weights ordered `(w_1^(1), w_1^(2), ..., w_N^(1), w_N^(2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return invalid(format!("weight {i} is not finite"));
        }
        Ok(Self(weights))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// Unit vector selecting output `index`.
    pub fn unit(len: usize, index: usize) -> Self {
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// `|self - other| / |other|`.
    pub fn relative_distance(&self, other: &WeightVector) -> f64 {
        let d: f64 = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        d / other.norm()
    }
}

/// One direct-form-II second order section plus the previous output needed by the taps.
#[derive(Debug, Clone, Copy, Serialize)]
struct Section {
    b: [f64; 3],
    a: [f64; 2],
    #[serde(skip)]
    w1: f64,
    #[serde(skip)]
    w2: f64,
    #[serde(skip)]
    prev: f64,
}

impl Section {
    #[inline]
    fn step(&mut self, x: f64) -> f64 {
        let w = x - self.a[0] * self.w1 - self.a[1] * self.w2;
        let y = self.b[0] * w + self.b[1] * self.w1 + self.b[2] * self.w2;
        self.w2 = self.w1;
        self.w1 = w;
        y
    }

    fn reset(&mut self) {
        self.w1 = 0.0;
        self.w2 = 0.0;
        self.prev = 0.0;
    }
}

/// Upper bound on the length used to check normalization numerically.
const MAX_SETTLE_LENGTH: usize = 1 << 18;
const NORM_TOLERANCE: f64 = 1e-6;

/// A Kautz filter bank with its running state.
#[derive(Debug, Clone)]
pub struct KautzBank {
    poles: PoleSet,
    sections: Vec<Section>,
    scaling: Vec<[f64; 2]>,
    correction: Vec<[f64; 2]>,
    settle_length: Option<usize>,
    outputs: Vec<f64>,
}

#[derive(Serialize)]
struct BankDump<'a> {
    poles: Vec<[f64; 2]>,
    sections: &'a [Section],
    scaling: &'a [[f64; 2]],
    correction: &'a [[f64; 2]],
    settle_length: Option<usize>,
}

impl KautzBank {
    /// Builds the bank, then checks the analytic scaling against numerically
    /// computed norms and renormalizes any output that is off by more than 1e-6.
    pub fn new(poles: PoleSet) -> Result<Self> {
        if poles.is_empty() {
            return Err(Error::EmptyPoleSet);
        }
        let mut sections = Vec::with_capacity(poles.len());
        let mut scaling = Vec::with_capacity(poles.len());
        for (n, pair) in poles.pairs().iter().enumerate() {
            let (a1, a2) = pair.denominator();
            let b = if n == 0 {
                [1.0, 0.0, 0.0]
            } else {
                let (pa1, pa2) = poles.pairs()[n - 1].denominator();
                [pa2, pa1, 1.0]
            };
            sections.push(Section {
                b,
                a: [a1, a2],
                w1: 0.0,
                w2: 0.0,
                prev: 0.0,
            });
            let p = pair.pole();
            let r = 1.0 - p.norm_sqr();
            scaling.push([
                ((1.0 + p).norm_sqr() * r / 2.0).sqrt(),
                ((1.0 - p).norm_sqr() * r / 2.0).sqrt(),
            ]);
        }
        let mut bank = Self {
            outputs: vec![0.0; 2 * poles.len()],
            correction: vec![[1.0, 1.0]; poles.len()],
            poles,
            sections,
            scaling,
            settle_length: None,
        };
        bank.verify_normalization();
        Ok(bank)
    }

    /// Validating constructor from raw poles.
    pub fn from_poles(poles: &[Complex64]) -> Result<Self> {
        Self::new(PoleSet::from_poles(poles)?)
    }

    fn verify_normalization(&mut self) {
        let Some((length, energies)) = self.settle() else {
            log::debug!("bank did not settle within {MAX_SETTLE_LENGTH} samples, normalization unchecked");
            return;
        };
        self.settle_length = Some(length);
        for (n, corr) in self.correction.iter_mut().enumerate() {
            for j in 0..2 {
                let norm = energies[2 * n + j].sqrt();
                if (norm - 1.0).abs() > NORM_TOLERANCE {
                    log::warn!("stage {n} output {j}: analytic norm {norm}, renormalizing");
                    corr[j] = 1.0 / norm;
                }
            }
        }
    }

    /// Runs an impulse through a copy of the bank until every output's energy has settled.
    fn settle(&self) -> Option<(usize, Vec<f64>)> {
        let r = self.poles.max_radius();
        let block = ((1e-3f64).ln() / r.ln()).ceil().max(64.0) as usize;
        let mut probe = self.clone();
        probe.reset();
        let outs = self.outputs.len();
        let mut total = vec![0.0; outs];
        let mut k = 0;
        while k < MAX_SETTLE_LENGTH {
            let mut chunk = vec![0.0; outs];
            for _ in 0..block {
                probe.advance(if k == 0 { 1.0 } else { 0.0 });
                for (c, y) in chunk.iter_mut().zip(&probe.outputs) {
                    *c += y * y;
                }
                k += 1;
            }
            let settled = chunk
                .iter()
                .zip(&total)
                .all(|(c, t)| *c <= 1e-16 * (t + c));
            for (t, c) in total.iter_mut().zip(&chunk) {
                *t += c;
            }
            if settled {
                return Some((k, total));
            }
        }
        None
    }

    pub fn poles(&self) -> &PoleSet {
        &self.poles
    }

    /// Number of pole pairs `N`.
    pub fn pairs(&self) -> usize {
        self.poles.len()
    }

    /// Number of basis outputs, `2N`.
    pub fn order(&self) -> usize {
        self.outputs.len()
    }

    /// Effective per-output scaling (analytic constant times any numerical correction).
    pub fn scaling(&self) -> Vec<[f64; 2]> {
        self.scaling
            .iter()
            .zip(&self.correction)
            .map(|(s, c)| [s[0] * c[0], s[1] * c[1]])
            .collect()
    }

    /// Numerical correction factors applied on top of the analytic scaling (1.0 when none).
    pub fn corrections(&self) -> &[[f64; 2]] {
        &self.correction
    }

    /// Length after which every basis response carries less than 1e-16 of its
    /// energy per block, or `None` if that was not reached within the probe limit.
    pub fn settle_length(&self) -> Option<usize> {
        self.settle_length
    }

    pub fn reset(&mut self) {
        self.sections.iter_mut().for_each(Section::reset);
        self.outputs.iter_mut().for_each(|o| *o = 0.0);
    }

    #[inline]
    fn advance(&mut self, u: f64) {
        let mut x = u;
        for (n, s) in self.sections.iter_mut().enumerate() {
            let y = s.step(x);
            let c = self.scaling[n];
            let k = self.correction[n];
            self.outputs[2 * n] = c[0] * k[0] * (s.prev - y);
            self.outputs[2 * n + 1] = c[1] * k[1] * (y + s.prev);
            s.prev = y;
            x = y;
        }
    }

    /// Advances the bank by one input sample and returns the `2N` basis outputs.
    pub fn step(&mut self, u: f64) -> Result<&[f64]> {
        if !u.is_finite() {
            return invalid(format!("bank input {u} is not finite"));
        }
        self.advance(u);
        Ok(&self.outputs)
    }

    /// Outputs of the most recent step.
    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// `length x 2N` matrix whose column `i` is basis response `i`, computed from zero state.
    pub fn basis_matrix(&self, length: usize) -> DMatrix<f64> {
        let mut probe = self.clone();
        probe.reset();
        let mut m = DMatrix::<f64>::zeros(length, self.order());
        for k in 0..length {
            probe.advance(if k == 0 { 1.0 } else { 0.0 });
            for (i, y) in probe.outputs.iter().enumerate() {
                m[(k, i)] = *y;
            }
        }
        m
    }

    /// The `2N` truncated basis impulse responses.
    pub fn basis_impulse_responses(
        &self,
        length: usize,
        sample_rate_hz: f64,
    ) -> Result<Vec<ImpulseResponse>> {
        if length == 0 {
            return invalid("length must be at least 1");
        }
        let m = self.basis_matrix(length);
        m.column_iter()
            .map(|c| ImpulseResponse::new(c.iter().copied().collect(), sample_rate_hz))
            .collect()
    }

    /// `h_hat(k) = sum_n w_n^(1) psi_n^(1)(k) + w_n^(2) psi_n^(2)(k)`.
    pub fn model_impulse_response(
        &self,
        weights: &WeightVector,
        length: usize,
        sample_rate_hz: f64,
    ) -> Result<ImpulseResponse> {
        if weights.len() != self.order() {
            return Err(Error::LengthMismatch {
                expected: self.order(),
                actual: weights.len(),
            });
        }
        if length == 0 {
            return invalid("length must be at least 1");
        }
        let mut probe = self.clone();
        probe.reset();
        let samples = (0..length)
            .map(|k| {
                probe.advance(if k == 0 { 1.0 } else { 0.0 });
                probe
                    .outputs
                    .iter()
                    .zip(weights.as_slice())
                    .map(|(y, w)| y * w)
                    .sum()
            })
            .collect();
        ImpulseResponse::new(samples, sample_rate_hz)
    }

    /// JSON description of the realization for debugging.
    pub fn describe(&self) -> String {
        let dump = BankDump {
            poles: self.poles.poles().iter().map(|p| [p.re, p.im]).collect(),
            sections: &self.sections,
            scaling: &self.scaling,
            correction: &self.correction,
            settle_length: self.settle_length,
        };
        serde_json::to_string_pretty(&dump).expect("bank dump serializes")
    }
}

/// Builds a Kautz bank from an ordered pole set.
pub fn build_kautz_bank(poles: &PoleSet) -> Result<KautzBank> {
    KautzBank::new(poles.clone())
}

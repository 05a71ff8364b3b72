//! Pole estimation from an ensemble of training impulse responses with a
//! multi-channel (stacked) Prony method, followed by screening of poles that
//! cannot be used in a Kautz bank.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bank::{PolePair, PoleSet, REAL_POLE_THRESHOLD};
use crate::error::{invalid, Error, Result};
use crate::poly;
use crate::signal::ImpulseResponse;

/// Relative singular value below which the stacked system counts as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;
/// Tolerance for matching a root with the conjugate of another.
const CONJUGATE_TOLERANCE: f64 = 1e-8;
pub const ORDER_STEP: usize = 2;
pub const MAX_RETRIES: usize = 10;

/// `M` impulse responses sharing a sample rate.
#[derive(Debug, Clone)]
pub struct TrainingEnsemble {
    responses: Vec<ImpulseResponse>,
}

impl TrainingEnsemble {
    pub fn new(responses: Vec<ImpulseResponse>) -> Result<Self> {
        let Some(first) = responses.first() else {
            return invalid("training ensemble needs at least one response");
        };
        let fs = first.sample_rate_hz();
        if let Some(r) = responses
            .iter()
            .find(|r| (r.sample_rate_hz() - fs).abs() > 1e-9 * fs)
        {
            return Err(Error::SampleRateMismatch(fs, r.sample_rate_hz()));
        }
        Ok(Self { responses })
    }

    pub fn responses(&self) -> &[ImpulseResponse] {
        &self.responses
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.responses[0].sample_rate_hz()
    }

    pub fn shortest(&self) -> usize {
        self.responses.iter().map(ImpulseResponse::len).min().unwrap_or(0)
    }

    /// Sub-ensemble with the responses at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let picked = indices
            .iter()
            .map(|&i| {
                self.responses
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput(format!("response index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(picked)
    }
}

/// Linear-prediction coefficients and the roots of their characteristic polynomial.
#[derive(Debug, Clone)]
pub struct PronyResult {
    pub order: usize,
    /// Coefficients of `z^N + alpha_1 z^(N-1) + ... + alpha_N`.
    pub alpha: Vec<f64>,
    pub raw_roots: Vec<Complex64>,
    /// Euclidean norm of the stacked least-squares residual.
    pub residual: f64,
    /// The stacked system was rank deficient and solved in the minimum-norm sense.
    pub rank_deficient: bool,
}

impl PronyResult {
    /// Monic characteristic polynomial in descending powers.
    pub fn polynomial(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.order + 1);
        c.push(1.0);
        c.extend_from_slice(&self.alpha);
        c
    }
}

/// Stacked multi-channel Prony estimate of order `order`.
///
/// Every response contributes the rows `h(k) = -sum_i alpha_i h(k - i)` for
/// `k = order .. len - 1`; the rows of all channels form one overdetermined
/// system solved by SVD least squares.
pub fn modified_prony(ensemble: &TrainingEnsemble, order: usize) -> Result<PronyResult> {
    if order == 0 {
        return invalid("prony order must be at least 1");
    }
    let shortest = ensemble.shortest();
    if order >= shortest {
        return Err(Error::OrderTooHigh { order, shortest });
    }
    let rows: usize = ensemble.responses().iter().map(|r| r.len() - order).sum();
    let mut a = DMatrix::<f64>::zeros(rows, order);
    let mut b = DVector::<f64>::zeros(rows);
    let mut row = 0;
    for r in ensemble.responses() {
        let h = r.samples();
        for k in order..h.len() {
            for i in 0..order {
                a[(row, i)] = h[k - 1 - i];
            }
            b[row] = h[k];
            row += 1;
        }
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return invalid("training responses are identically zero");
    }
    let tol = RANK_TOLERANCE * smax;
    let rank_deficient = svd.singular_values.iter().any(|s| *s <= tol);
    let beta = svd
        .solve(&b, tol)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let residual = (&a * &beta - &b).norm();
    let alpha: Vec<f64> = beta.iter().map(|x| -x).collect();
    let mut coeffs = vec![1.0];
    coeffs.extend_from_slice(&alpha);
    let raw_roots = poly::roots(&coeffs);
    Ok(PronyResult {
        order,
        alpha,
        raw_roots,
        residual,
        rank_deficient,
    })
}

/// Screened pole set together with the Prony run that produced it.
#[derive(Debug, Clone)]
pub struct ScreenedPoles {
    pub poles: PoleSet,
    /// Prony order of the accepted run.
    pub order: usize,
    pub retries: usize,
    pub residual: f64,
}

/// Stable, complex roots reduced to one representative (positive imaginary
/// part) per conjugate pair, ordered by decreasing radius.
pub fn admissible_pairs(roots: &[Complex64]) -> Vec<PolePair> {
    let candidates: Vec<Complex64> = roots
        .iter()
        .copied()
        .filter(|z| z.norm() < 1.0 && z.im.abs() >= REAL_POLE_THRESHOLD)
        .collect();
    let mut used = vec![false; candidates.len()];
    let mut pairs = Vec::new();
    for i in 0..candidates.len() {
        if used[i] || candidates[i].im < 0.0 {
            continue;
        }
        let z = candidates[i];
        let partner = (0..candidates.len()).find(|&j| {
            !used[j] && j != i && candidates[j].im < 0.0 && (candidates[j] - z.conj()).norm() <= CONJUGATE_TOLERANCE * z.norm().max(1.0)
        });
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
                pairs.push(PolePair::new(z).expect("screened pole is admissible"));
            }
            None => log::warn!("discarding root {z} without a conjugate partner"),
        }
    }
    for (z, u) in candidates.iter().zip(&used) {
        if !u && z.im < 0.0 {
            log::warn!("discarding root {z} without a conjugate partner");
        }
    }
    pairs.sort_by(|a, b| b.radius().total_cmp(&a.radius()));
    pairs
}

/// Keeps `wanted_pairs` admissible pole pairs, re-running the Prony estimate
/// at increasing order (by 2, at most 10 times) while too few remain.
///
/// Roots on or outside the unit circle and real roots are discarded. When more
/// pairs than wanted survive, the least damped ones are kept.
pub fn screen_poles(
    result: &PronyResult,
    wanted_pairs: usize,
    ensemble: &TrainingEnsemble,
) -> Result<ScreenedPoles> {
    if wanted_pairs == 0 {
        return invalid("at least one pole pair must be requested");
    }
    let mut current = result.clone();
    let mut retries = 0;
    loop {
        let mut pairs = admissible_pairs(&current.raw_roots);
        if pairs.len() >= wanted_pairs {
            pairs.truncate(wanted_pairs);
            return Ok(ScreenedPoles {
                poles: PoleSet::new(pairs),
                order: current.order,
                retries,
                residual: current.residual,
            });
        }
        let next = current.order + ORDER_STEP;
        if retries == MAX_RETRIES || next >= ensemble.shortest() {
            return Err(Error::NotEnoughPoles {
                found: pairs.len(),
                wanted: wanted_pairs,
                retries,
            });
        }
        retries += 1;
        current = modified_prony(ensemble, next)?;
    }
}

/// Prony estimate at order `2 * pairs` followed by screening for `pairs` pairs.
pub fn estimate_poles(ensemble: &TrainingEnsemble, pairs: usize) -> Result<ScreenedPoles> {
    let result = modified_prony(ensemble, 2 * pairs)?;
    screen_poles(&result, pairs, ensemble)
}

/// Cyclic repetition of `poles` up to `target_pairs` pairs.
pub fn extend_poles_periodically(poles: &PoleSet, target_pairs: usize) -> Result<PoleSet> {
    if poles.is_empty() {
        return Err(Error::EmptyPoleSet);
    }
    if target_pairs < poles.len() {
        return invalid(format!(
            "target of {target_pairs} pairs is smaller than the {} available",
            poles.len()
        ));
    }
    Ok(poles.cyclic(target_pairs))
}

//! Real polynomial helpers shared by the system and pole-estimation code.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

/// Roots of `c[0] z^n + c[1] z^(n-1) + ... + c[n]` from the companion matrix eigenvalues.
///
/// Leading zero coefficients are stripped. A constant polynomial has no roots.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let start = coeffs.iter().position(|c| *c != 0.0).unwrap_or(coeffs.len());
    let end = coeffs.iter().rposition(|c| *c != 0.0).map_or(start, |i| i + 1);
    // trailing zeros are roots at the origin; the QR iteration stalls on them
    let mut out = vec![Complex64::new(0.0, 0.0); coeffs.len() - end.max(start)];
    let c = &coeffs[start..end.max(start)];
    if c.len() < 2 {
        return if c.is_empty() { Vec::new() } else { out };
    }
    let n = c.len() - 1;
    let lead = c[0];
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -c[j + 1] / lead;
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    let schur = Schur::try_new(companion.clone(), f64::EPSILON, 1000 * n)
        .or_else(|| Schur::try_new(companion.transpose(), f64::EPSILON, 1000 * n))
        .expect("companion eigenvalue iteration converges");
    out.extend(schur.complex_eigenvalues().iter().copied());
    out
}

/// Monic coefficients (descending powers) of `prod (z - r)`; imaginary residue is dropped.
pub fn from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (i, a) in acc.iter().enumerate() {
            next[i] += *a;
            next[i + 1] -= *a * r;
        }
        acc = next;
    }
    acc.into_iter().map(|c| c.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_quadratic() {
        // z^2 - 1.6 z + 0.73 has roots 0.8 +- 0.3j
        let mut r = roots(&[1.0, -1.6, 0.73]);
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((r[0] - Complex64::new(0.8, -0.3)).norm() < 1e-12);
        assert!((r[1] - Complex64::new(0.8, 0.3)).norm() < 1e-12);
    }

    #[test]
    fn leading_zeros_and_constants() {
        assert!(roots(&[3.0]).is_empty());
        assert!(roots(&[0.0, 0.0, 2.0]).is_empty());
        assert!(roots(&[0.0, 0.0]).is_empty());
        assert_eq!(roots(&[1.0, 0.0, 0.0, 0.0]), vec![Complex64::new(0.0, 0.0); 3]);
        let mut r = roots(&[1.0, -0.5, 0.0]);
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert_eq!(r[0], Complex64::new(0.0, 0.0));
        assert!((r[1].re - 0.5).abs() < 1e-14);
        let r = roots(&[0.0, 2.0, -1.0]);
        assert_eq!(r.len(), 1);
        assert!((r[0].re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn expansion_round_trip() {
        let rs = [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.2, 0.7),
            Complex64::new(0.2, -0.7),
        ];
        let c = from_roots(&rs);
        let back = from_roots(&roots(&c));
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

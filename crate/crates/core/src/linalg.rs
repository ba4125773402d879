//! Dense complex matrix helpers.
//!
//! Every matrix in this crate is small (antenna counts of 1..8), so plain heap-backed
//! `nalgebra::DMatrix<Complex64>` is used throughout. Hermitian inputs are always
//! re-symmetrized before they are factorized.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix. Channel realizations, precoder factors, linear-assignment
/// matrices and every derived quantity use this type.
pub type ComplexMatrix = DMatrix<C64>;

/// Absolute tolerance for conjugate symmetry of validated Hermitian inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Most negative eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;
/// Determinants below this value are reported as numerical failures instead of `-inf`.
pub const DET_FLOOR: f64 = 1e-300;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(n: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(n, n)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Build a matrix from row-major `(re, im)` pairs.
pub fn from_rows(rows: &[&[(f64, f64)]]) -> ComplexMatrix {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    ComplexMatrix::from_fn(nr, nc, |i, j| c(rows[i][j].0, rows[i][j].1))
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { C64::default() })
}

pub fn scaled_identity(n: usize, s: f64) -> ComplexMatrix {
    identity(n) * c(s, 0.0)
}

/// `(M + M^H) / 2`
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn trace_re(m: &ComplexMatrix) -> f64 {
    m.trace().re
}

/// Squared Frobenius norm.
pub fn frob2(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frob(m: &ComplexMatrix) -> f64 {
    frob2(m).sqrt()
}

/// Real inner product `Re tr(A^H B)`, the metric under which complex gradients live.
pub fn re_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest deviation from conjugate symmetry.
pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn eigh(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> f64 {
    eigh(m).0.first().copied().unwrap_or(0.0)
}

/// Rebuild `V diag(f(λ)) V^H`.
pub fn spectral_map(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let (values, vectors) = eigh(m);
    let mapped: Vec<f64> = values.into_iter().map(f).collect();
    &vectors * diag(&mapped) * vectors.adjoint()
}

/// Principal Hermitian square root; eigenvalues are clamped at zero first.
pub fn psd_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    spectral_map(m, |x| x.max(0.0).sqrt())
}

pub fn inverse(m: &ComplexMatrix, context: &str) -> Result<ComplexMatrix> {
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::numerical(format!("{context}: singular matrix")))?;
    if !is_finite(&inv) {
        return Err(Error::numerical(format!("{context}: non-finite inverse")));
    }
    Ok(inv)
}

/// Inverse of a Hermitian positive definite matrix via Cholesky.
pub fn inverse_hpd(m: &ComplexMatrix, context: &str) -> Result<ComplexMatrix> {
    let chol = hermitian_part(m)
        .cholesky()
        .ok_or_else(|| Error::numerical(format!("{context}: not positive definite")))?;
    Ok(hermitian_part(&chol.inverse()))
}

/// Natural log-determinant of a Hermitian positive definite matrix (Cholesky of the
/// symmetrized matrix).
pub fn ln_det_hpd(m: &ComplexMatrix, context: &str) -> Result<f64> {
    ln_det_inverse_hpd_impl(m, context, false).map(|(d, _)| d)
}

/// `(ln det M, M^{-1})` from a single Cholesky factorization of the Hermitian part.
pub fn ln_det_inverse_hpd(m: &ComplexMatrix, context: &str) -> Result<(f64, ComplexMatrix)> {
    ln_det_inverse_hpd_impl(m, context, true).map(|(d, inv)| (d, inv.expect("inverse requested")))
}

fn ln_det_inverse_hpd_impl(m: &ComplexMatrix, context: &str, want_inverse: bool) -> Result<(f64, Option<ComplexMatrix>)> {
    let chol = hermitian_part(m)
        .cholesky()
        .ok_or_else(|| Error::numerical(format!("{context}: not positive definite")))?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        acc += l[(i, i)].re.ln();
    }
    let value = 2.0 * acc;
    if !value.is_finite() || value < DET_FLOOR.ln() {
        return Err(Error::numerical(format!("{context}: determinant underflow")));
    }
    let inv = want_inverse.then(|| hermitian_part(&chol.inverse()));
    Ok((value, inv))
}

/// Natural log-determinant of `N0·I + K X` for Hermitian PSD `K`, `X`.
///
/// The determinant equals that of `N0·I + X^{1/2} K X^{1/2}` and is therefore real and
/// positive; an LU factorization is used and the (round-off) imaginary part dropped.
pub fn ln_det_shifted_product(k: &ComplexMatrix, x: &ComplexMatrix, n0: f64, context: &str) -> Result<f64> {
    let n = k.nrows();
    let mut m = k * x;
    for i in 0..n {
        m[(i, i)] += c(n0, 0.0);
    }
    let det = m.lu().determinant();
    if !(det.re > DET_FLOOR) || !det.re.is_finite() {
        return Err(Error::numerical(format!("{context}: non-positive determinant")));
    }
    Ok(det.re.ln())
}

/// `P P^H`, symmetrized.
pub fn gram_outer(p: &ComplexMatrix) -> ComplexMatrix {
    hermitian_part(&(p * p.adjoint()))
}

/// `H^H H`, symmetrized.
pub fn gram_inner(h: &ComplexMatrix) -> ComplexMatrix {
    hermitian_part(&(h.adjoint() * h))
}

/// Validated Hermitian positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianPsd(ComplexMatrix);

impl HermitianPsd {
    /// Accepts `m` when it is square, finite, conjugate-symmetric to [`HERMITIAN_TOL`] and has
    /// minimum eigenvalue at least `-PSD_TOL`. The stored matrix is exactly Hermitian.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Validation(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !is_finite(&m) {
            return Err(Error::Validation("matrix has non-finite entries".into()));
        }
        let defect = hermitian_defect(&m);
        if defect > HERMITIAN_TOL {
            return Err(Error::Validation(format!("matrix is not Hermitian (defect {defect:.3e})")));
        }
        Self::from_hermitian(hermitian_part(&m))
    }

    /// Like [`HermitianPsd::new`] but first removes any asymmetry (rounded config values).
    pub fn symmetrized(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() || !is_finite(&m) {
            return Err(Error::Validation("expected a finite square matrix".into()));
        }
        Self::from_hermitian(hermitian_part(&m))
    }

    fn from_hermitian(m: ComplexMatrix) -> Result<Self> {
        let lowest = min_eigenvalue(&m);
        if lowest < -PSD_TOL {
            return Err(Error::Validation(format!(
                "matrix is not positive semidefinite (min eigenvalue {lowest:.3e})"
            )));
        }
        Ok(HermitianPsd(m))
    }

    pub fn identity(n: usize) -> Self {
        HermitianPsd(identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.0)
    }

    pub fn sqrt(&self) -> ComplexMatrix {
        psd_sqrt(&self.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        HermitianPsd(&self.0 * c(s, 0.0))
    }

    pub fn is_positive_definite(&self) -> bool {
        hermitian_part(&self.0).cholesky().is_some() && min_eigenvalue(&self.0) > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_hpd() -> ComplexMatrix {
        from_rows(&[&[(2.0, 0.0), (0.3, -0.4)], &[(0.3, 0.4), (1.0, 0.0)]])
    }

    #[test]
    fn sqrt_squares_back() {
        let m = sample_hpd();
        let r = psd_sqrt(&m);
        assert!(frob(&(&r * &r - &m)) < 1e-12);
        assert!(hermitian_defect(&r) < 1e-12);
    }

    #[test]
    fn sqrt_clamps_tiny_negative_eigenvalues() {
        let m = diag(&[1.0, -1e-12]);
        let r = psd_sqrt(&m);
        assert!(is_finite(&r));
        assert!((r[(0, 0)].re - 1.0).abs() < 1e-14);
        assert_eq!(r[(1, 1)].re, 0.0);
    }

    #[test]
    fn ln_det_matches_lu() {
        let m = sample_hpd();
        let expected = m.clone().lu().determinant().re.ln();
        assert!((ln_det_hpd(&m, "t").unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn ln_det_rejects_singular() {
        let m = diag(&[1.0, 0.0]);
        assert!(matches!(ln_det_hpd(&m, "t"), Err(Error::Numerical { .. })));
    }

    #[test]
    fn shifted_product_det_is_sylvester_consistent() {
        let k = sample_hpd();
        let x = from_rows(&[&[(1.0, 0.0), (0.1, 0.2)], &[(0.1, -0.2), (0.5, 0.0)]]);
        let s = psd_sqrt(&x);
        let sym = &s * &k * &s + scaled_identity(2, 0.7);
        let a = ln_det_shifted_product(&k, &x, 0.7, "t").unwrap();
        let b = ln_det_hpd(&sym, "t").unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn psd_validation() {
        assert!(HermitianPsd::new(sample_hpd()).is_ok());
        let not_herm = from_rows(&[&[(1.0, 0.0), (0.5, 0.0)], &[(0.4, 0.0), (1.0, 0.0)]]);
        assert!(HermitianPsd::new(not_herm.clone()).is_err());
        assert!(HermitianPsd::symmetrized(not_herm).is_ok());
        let indefinite = diag(&[1.0, -0.1]);
        assert!(HermitianPsd::new(indefinite).is_err());
    }
}

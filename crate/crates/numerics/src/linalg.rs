//! Symmetric eigendecomposition helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::NumericsError;

/// Spectral decomposition `A = V diag(values) Vᵀ` with eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenResult {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// PSD classification of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdStatus {
    pub psd: bool,
    pub min_eig: f64,
}

fn check_square_finite(a: &DMatrix<f64>) -> Result<(), NumericsError> {
    if a.nrows() != a.ncols() {
        return Err(NumericsError::Dimension(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues sorted ascending.
///
/// The input is symmetrized as `(A + Aᵀ)/2` before factorization.
pub fn eigen_sym(a: &DMatrix<f64>) -> Result<EigenResult, NumericsError> {
    check_square_finite(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(EigenResult {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok(EigenResult { values, vectors })
}

/// Largest absolute eigenvalue (the spectral norm of a symmetric matrix).
pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64, NumericsError> {
    let eig = eigen_sym(a)?;
    Ok(eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// `psd` is true iff `min_eig >= -tol * (1 + ‖A‖₂)`.
pub fn psd_status(a: &DMatrix<f64>, tol: f64) -> Result<PsdStatus, NumericsError> {
    if !(tol >= 0.0) {
        return Err(NumericsError::InvalidArgument(format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }
    let eig = eigen_sym(a)?;
    if eig.values.is_empty() {
        return Ok(PsdStatus {
            psd: true,
            min_eig: 0.0,
        });
    }
    let norm = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min_eig = eig.min();
    Ok(PsdStatus {
        psd: min_eig >= -tol * (1.0 + norm),
        min_eig,
    })
}

/// Largest step `alpha` with `x + alpha * dx` positive semidefinite, given the
/// lower Cholesky factor `l` of `x`. Returns `f64::INFINITY` when unbounded.
pub(crate) fn max_psd_step(l: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    // eigenvalues of L⁻¹ dX L⁻ᵀ
    let tri = l.clone();
    let Some(tmp) = tri.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(inner) = tri.solve_lower_triangular(&tmp.transpose()) else {
        return 0.0;
    };
    let sym = (&inner + inner.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_by_two_by_hand() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 4.0, 0.0]);
        let eig = eigen_sym(&a).unwrap();
        assert_abs_diff_eq!(eig.values[0], -4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.values[1], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_and_zero() {
        let eig = eigen_sym(&DMatrix::identity(3, 3)).unwrap();
        for v in eig.values.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
        let eig = eigen_sym(&DMatrix::zeros(5, 5)).unwrap();
        assert!(eig.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = DMatrix::identity(2, 2);
        a[(0, 1)] = f64::NAN;
        assert_eq!(eigen_sym(&a).unwrap_err(), NumericsError::NonFinite);
    }

    #[test]
    fn psd_examples() {
        let gram = DMatrix::from_row_slice(2, 2, &[4.0, 4.0, 4.0, 4.0]);
        let st = psd_status(&gram, 1e-9).unwrap();
        assert!(st.psd);
        assert_abs_diff_eq!(st.min_eig, 0.0, epsilon = 1e-12);

        let indefinite = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        let st = psd_status(&indefinite, 1e-9).unwrap();
        assert!(!st.psd);
        assert_abs_diff_eq!(st.min_eig, -2.0, epsilon = 1e-12);

        let neg = -DMatrix::<f64>::identity(3, 3);
        assert!(!psd_status(&neg, 1e-9).unwrap().psd);
        assert!(psd_status(&neg, -1.0).is_err());
    }

    #[test]
    fn step_to_boundary() {
        let x = DMatrix::<f64>::identity(2, 2);
        let dx = DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, 1.0]);
        let l = x.clone().cholesky().unwrap().l();
        assert_abs_diff_eq!(max_psd_step(&l, &dx), 0.5, epsilon = 1e-12);
        assert!(max_psd_step(&l, &DMatrix::identity(2, 2)).is_infinite());
    }
}

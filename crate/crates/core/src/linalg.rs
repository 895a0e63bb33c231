//! Small dense linear-algebra helpers shared across the crate.

use nalgebra::{DMatrix, DVector};

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Singular values of `m`, descending. Never fails: the Golub-Kahan iteration
/// is run without an iteration cap.
pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = nalgebra::SVD::try_new(m.clone(), false, false, f64::EPSILON, 0)
        .expect("SVD with uncapped iterations cannot fail");
    svd.singular_values
}

/// Numerical rank: the count of singular values above
/// `tol * sigma_max * max(rows, cols)`. The zero matrix has rank 0.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let sv = singular_values(m);
    if sv.is_empty() {
        return 0;
    }
    let sigma_max = sv[0];
    if sigma_max == 0.0 {
        return 0;
    }
    let threshold = tol * sigma_max * m.nrows().max(m.ncols()) as f64;
    sv.iter().filter(|&&s| s > threshold).count()
}

/// Eigenvalues of a symmetric matrix, descending.
pub fn sym_eigenvalues(w: &DMatrix<f64>) -> DVector<f64> {
    let mut ev = w.clone().symmetric_eigen().eigenvalues;
    ev.as_mut_slice()
        .sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    ev
}

/// Largest eigenvalue of a symmetric matrix.
pub fn sym_lambda_max(w: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(w)[0]
}

/// Inverse of the shifted matrix `w + eps * I` for symmetric PSD `w`.
///
/// Cholesky first; if that fails (eps at round-off scale against slightly
/// indefinite input), rebuild from the eigendecomposition with eigenvalues
/// clamped at zero.
pub fn shifted_inverse(w: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let n = w.nrows();
    let shifted = w + DMatrix::identity(n, n) * eps;
    if let Some(chol) = nalgebra::Cholesky::new(shifted) {
        return chol.inverse();
    }
    let eig = w.clone().symmetric_eigen();
    let inv_vals =
        DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| 1.0 / (l.max(0.0) + eps)));
    &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose()
}

/// `trace(w^-1)` for symmetric `w`, provided `w` has full numerical rank at
/// `tol`; `None` otherwise. Computed as the sum of reciprocal eigenvalues.
pub fn trace_inverse_if_full_rank(w: &DMatrix<f64>, tol: f64) -> Option<f64> {
    let n = w.nrows();
    if numerical_rank(w, tol) < n {
        return None;
    }
    let ev = sym_eigenvalues(w);
    Some(ev.iter().map(|&l| 1.0 / l).sum())
}

/// Relative Frobenius distance `|a - b|_F / max(|a|_F, tiny)`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = a.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

/// True when every entry is finite.
pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

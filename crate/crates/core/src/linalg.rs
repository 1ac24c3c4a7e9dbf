//! Small dense eigenvalue helpers.

use nalgebra::{Complex, DMatrix};

/// Smallest eigenvalue of a real symmetric matrix (`+∞` when empty).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues of a complex Hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex<f64>>) -> Vec<f64> {
    m.clone().symmetric_eigenvalues().iter().copied().collect()
}

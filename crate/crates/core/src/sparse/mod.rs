//! Sparse matrix storage and kernels.

mod cholesky;
mod csr;
pub mod mmio;

pub use cholesky::{minimum_degree, CholeskyFactor, PIVOT_REL_TOL, SYMMETRY_TOL};
pub use csr::CsrMatrix;

/// Euclidean inner product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

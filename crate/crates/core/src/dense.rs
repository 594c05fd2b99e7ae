//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative eigenvalue threshold below which a symmetric positive
/// semidefinite matrix is treated as singular.
pub(crate) const NULL_REL_TOL: f64 = 1e-10;

/// Moore–Penrose inverse of a symmetric positive semidefinite matrix,
/// together with the dimension of its (numerical) null space.
pub(crate) fn psd_pseudo_inverse(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let n = m.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), 0);
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cut = NULL_REL_TOL * lmax.max(f64::MIN_POSITIVE);
    let mut nullity = 0;
    let inv = DVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&l| {
            if l > cut {
                1.0 / l
            } else {
                nullity += 1;
                0.0
            }
        }),
    );
    let q = &eig.eigenvectors;
    let pinv = q * DMatrix::from_diagonal(&inv) * q.transpose();
    (pinv, nullity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudo_inverse_of_rank_one() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (p, nul) = psd_pseudo_inverse(&m);
        assert_eq!(nul, 1);
        let expect = DMatrix::from_row_slice(2, 2, &[0.25, 0.25, 0.25, 0.25]);
        assert!((p - expect).amax() < 1e-14);
    }

    #[test]
    fn spd_pseudo_inverse_is_inverse() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let (p, nul) = psd_pseudo_inverse(&m);
        assert_eq!(nul, 0);
        assert!((p * m - DMatrix::identity(2, 2)).amax() < 1e-14);
    }
}

//! OSS-l1 relaxation: a symmetrized multiplicative Schwarz sweep over
//! nodal edge patches followed by one l1-Jacobi step.
//!
//! The forward form (patch sweep in order, then in reverse order, then
//! Jacobi) is used for pre-smoothing and its A-adjoint (Jacobi, then the
//! two sweeps) for post-smoothing, so a V-cycle built from them is
//! symmetric.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
    Symmetric,
}

/// l1-Jacobi weights `d_i = Σ_j |a_ij|`.
#[derive(Debug, Clone)]
pub struct L1Jacobi {
    d: Vec<f64>,
}

impl L1Jacobi {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let d = a.abs_row_sums();
        if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "row {i} of the operator is empty"
            )));
        }
        Ok(Self { d })
    }

    pub fn weights(&self) -> &[f64] {
        &self.d
    }

    /// `x += D⁻¹ (b − A x)`.
    pub fn apply(&self, a: &CsrMatrix, x: &mut [f64], b: &[f64]) {
        let r = a.residual(b, x);
        for ((xi, ri), di) in x.iter_mut().zip(&r).zip(&self.d) {
            *xi += ri / di;
        }
    }
}

/// `diag(Σ_j |a_ij|)` as a matrix.
pub fn l1_jacobi_matrix(a: &CsrMatrix) -> CsrMatrix {
    CsrMatrix::from_diagonal(&a.abs_row_sums())
}

/// Overlapping edge patches with factored diagonal blocks.
#[derive(Debug, Clone)]
pub struct PatchSet {
    patches: Vec<Vec<usize>>,
    factors: Vec<Cholesky<f64, Dyn>>,
}

impl PatchSet {
    pub fn patches(&self) -> &[Vec<usize>] {
        &self.patches
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    fn solve_patch(&self, a: &CsrMatrix, p: usize, x: &mut [f64], b: &[f64]) {
        let idx = &self.patches[p];
        let mut r = DVector::zeros(idx.len());
        for (l, &i) in idx.iter().enumerate() {
            let (cols, vals) = a.row(i);
            let ax: f64 = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
            r[l] = b[i] - ax;
        }
        let delta = self.factors[p].solve(&r);
        for (l, &i) in idx.iter().enumerate() {
            x[i] += delta[l];
        }
    }

    /// One multiplicative sweep in patch order.
    pub fn sweep_forward(&self, a: &CsrMatrix, x: &mut [f64], b: &[f64]) {
        for p in 0..self.patches.len() {
            self.solve_patch(a, p, x, b);
        }
    }

    /// One multiplicative sweep in reverse patch order.
    pub fn sweep_backward(&self, a: &CsrMatrix, x: &mut [f64], b: &[f64]) {
        for p in (0..self.patches.len()).rev() {
            self.solve_patch(a, p, x, b);
        }
    }
}

/// Patch per nodal column `v` of `g`: the rows with `g[e, v] != 0`. Rows
/// not covered by any column become singleton patches.
pub fn build_patches(a: &CsrMatrix, g: &CsrMatrix) -> Result<PatchSet> {
    if a.nrows() != g.nrows() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "patches: A {}x{}, G {}x{}",
            a.nrows(),
            a.ncols(),
            g.nrows(),
            g.ncols()
        )));
    }
    let gt = g.transpose();
    let mut covered = vec![false; a.nrows()];
    let mut patches: Vec<Vec<usize>> = Vec::with_capacity(g.ncols());
    for v in 0..gt.nrows() {
        let rows = gt.row(v).0;
        if rows.is_empty() {
            continue;
        }
        for &e in rows {
            covered[e] = true;
        }
        patches.push(rows.to_vec());
    }
    for (e, c) in covered.iter().enumerate() {
        if !c {
            patches.push(vec![e]);
        }
    }
    let factors: Result<Vec<_>> = patches
        .par_iter()
        .enumerate()
        .map(|(p, idx)| {
            let m = idx.len();
            let mut block = DMatrix::zeros(m, m);
            for (l, &i) in idx.iter().enumerate() {
                for (q, &j) in idx.iter().enumerate() {
                    block[(l, q)] = a.get(i, j);
                }
            }
            Cholesky::new(block).ok_or(Error::SingularPatch(p))
        })
        .collect();
    Ok(PatchSet {
        patches,
        factors: factors?,
    })
}

/// Patch set plus l1-Jacobi weights for one level.
#[derive(Debug, Clone)]
pub struct OssL1 {
    pub patches: PatchSet,
    pub jacobi: L1Jacobi,
}

impl OssL1 {
    pub fn new(a: &CsrMatrix, g: &CsrMatrix) -> Result<Self> {
        Ok(Self {
            patches: build_patches(a, g)?,
            jacobi: L1Jacobi::new(a)?,
        })
    }

    pub fn smooth(&self, a: &CsrMatrix, x: &mut [f64], b: &[f64], direction: Direction) {
        smooth(a, &self.patches, &self.jacobi, x, b, direction);
    }
}

/// One application of the OSS-l1 relaxation to `A x = b`. `Forward` is
/// the symmetric Schwarz sweep followed by Jacobi, `Backward` its
/// A-adjoint and `Symmetric` the two in sequence.
pub fn smooth(
    a: &CsrMatrix,
    patches: &PatchSet,
    l1: &L1Jacobi,
    x: &mut [f64],
    b: &[f64],
    direction: Direction,
) {
    match direction {
        Direction::Forward => {
            patches.sweep_forward(a, x, b);
            patches.sweep_backward(a, x, b);
            l1.apply(a, x, b);
        }
        Direction::Backward => {
            l1.apply(a, x, b);
            patches.sweep_forward(a, x, b);
            patches.sweep_backward(a, x, b);
        }
        Direction::Symmetric => {
            smooth(a, patches, l1, x, b, Direction::Forward);
            smooth(a, patches, l1, x, b, Direction::Backward);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lap(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn l1_weights() {
        let a = lap(2);
        assert_eq!(L1Jacobi::new(&a).unwrap().weights(), &[3.0, 3.0]);
        let d = CsrMatrix::from_diagonal(&[2.0, 5.0]);
        assert_eq!(l1_jacobi_matrix(&d), d);
    }

    #[test]
    fn single_patch_solves_exactly() {
        let a = lap(4);
        let g =
            CsrMatrix::from_triplets(4, 1, &[(0, 0, 1.0), (1, 0, 1.0), (2, 0, 1.0), (3, 0, 1.0)])
                .unwrap();
        let s = OssL1::new(&a, &g).unwrap();
        assert_eq!(s.patches.len(), 1);
        let b = vec![1.0, 0.0, 0.0, 1.0];
        let mut x = vec![0.0; 4];
        s.smooth(&a, &mut x, &b, Direction::Forward);
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn uncovered_rows_become_singletons() {
        let a = lap(3);
        let g = CsrMatrix::from_triplets(3, 1, &[(0, 0, 1.0)]).unwrap();
        let p = build_patches(&a, &g).unwrap();
        assert_eq!(p.patches(), &[vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn singular_patch_reported() {
        let a =
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)])
                .unwrap();
        let g = CsrMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, -1.0)]).unwrap();
        assert!(matches!(
            build_patches(&a, &g),
            Err(Error::SingularPatch(0))
        ));
    }
}

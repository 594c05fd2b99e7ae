//! Sparse Cholesky factorization `P A Pᵀ = L Lᵀ` with a minimum-degree
//! fill-reducing ordering and an up-looking numeric phase.

use std::collections::{BTreeSet, HashSet};

use super::CsrMatrix;
use crate::error::{Error, Result};

/// Symmetry tolerance accepted by [`CholeskyFactor::factor`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Pivots below this fraction of the original diagonal are treated as
/// breakdown (the matrix is singular or indefinite to working precision).
pub const PIVOT_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// Lower-triangular factor in compressed-column form; the diagonal is
    /// the first entry of every column.
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CholeskyFactor {
    /// Factors a symmetric positive definite matrix.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "cholesky of non-square {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let asym = a.asymmetry();
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let perm = minimum_degree(a);
        Self::factor_with_ordering(a, perm)
    }

    pub fn factor_with_ordering(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        // Upper triangle of C = P A Pᵀ stored by columns: column k holds
        // entries C(i,k), i <= k.
        let mut upper: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in a.iter() {
            let (pi, pj) = (inv[i], inv[j]);
            if pi <= pj {
                upper[pj].push((pi, v));
            }
        }
        let parent = etree(&upper);

        // Symbolic pass: column counts of L from the row patterns.
        let mut counts = vec![1usize; n];
        let mut mark = vec![usize::MAX; n];
        let mut stack = Vec::new();
        for k in 0..n {
            for i in ereach(&upper[k], k, &parent, &mut mark, &mut stack) {
                counts[i] += 1;
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + counts[k];
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        let mut fill = col_ptr.clone();

        let mut x = vec![0.0; n];
        mark.iter_mut().for_each(|m| *m = usize::MAX);
        for k in 0..n {
            let pattern = ereach(&upper[k], k, &parent, &mut mark, &mut stack);
            let mut diag_orig = 0.0;
            for &(i, v) in &upper[k] {
                x[i] += v;
                if i == k {
                    diag_orig += v;
                }
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &pattern {
                let lki = x[i] / vals[col_ptr[i]];
                x[i] = 0.0;
                for p in col_ptr[i] + 1..fill[i] {
                    x[row_idx[p]] -= vals[p] * lki;
                }
                d -= lki * lki;
                let p = fill[i];
                row_idx[p] = k;
                vals[p] = lki;
                fill[i] += 1;
            }
            if !(d > PIVOT_REL_TOL * diag_orig.abs()) || d <= 0.0 {
                return Err(Error::NotPositiveDefinite {
                    index: perm[k],
                    value: d,
                });
            }
            let p = fill[k];
            row_idx[p] = k;
            vals[p] = d.sqrt();
            fill[k] += 1;
        }
        Ok(Self {
            perm,
            col_ptr,
            row_idx,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn ordering(&self) -> &[usize] {
        &self.perm
    }

    /// The lower-triangular factor `L` of `P A Pᵀ` as a CSR matrix.
    pub fn factor_matrix(&self) -> CsrMatrix {
        let mut trip = Vec::with_capacity(self.vals.len());
        for j in 0..self.dim() {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                trip.push((self.row_idx[p], j, self.vals[p]));
            }
        }
        CsrMatrix::from_triplets(self.dim(), self.dim(), &trip).expect("factor indices in range")
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cholesky solve: factor {} vs rhs {}",
                self.dim(),
                b.len()
            )));
        }
        let mut y = vec![0.0; b.len()];
        self.solve_into(b, &mut y);
        Ok(y)
    }

    /// Solve without the length check; `out` receives the solution.
    pub fn solve_into(&self, b: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for j in 0..n {
            let p0 = self.col_ptr[j];
            y[j] /= self.vals[p0];
            let yj = y[j];
            for p in p0 + 1..self.col_ptr[j + 1] {
                y[self.row_idx[p]] -= self.vals[p] * yj;
            }
        }
        for j in (0..n).rev() {
            let p0 = self.col_ptr[j];
            let mut s = y[j];
            for p in p0 + 1..self.col_ptr[j + 1] {
                s -= self.vals[p] * y[self.row_idx[p]];
            }
            y[j] = s / self.vals[p0];
        }
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = y[new];
        }
    }

    /// Column-by-column solve for several right-hand sides.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rhs.iter().map(|b| self.solve(b)).collect()
    }
}

/// Elimination tree of the matrix whose upper triangle is given by columns.
fn etree(upper: &[Vec<(usize, f64)>]) -> Vec<usize> {
    let n = upper.len();
    let mut parent = vec![usize::MAX; n];
    let mut ancestor = vec![usize::MAX; n];
    for k in 0..n {
        for &(i0, _) in &upper[k] {
            let mut i = i0;
            while i != usize::MAX && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == usize::MAX {
                    parent[i] = k;
                    break;
                }
                i = next;
            }
        }
    }
    parent
}

/// Nonzero pattern of row `k` of `L` (excluding the diagonal), in
/// ascending order. Parents in the elimination tree have larger indices,
/// so ascending order is topological.
fn ereach(
    col: &[(usize, f64)],
    k: usize,
    parent: &[usize],
    mark: &mut [usize],
    stack: &mut Vec<usize>,
) -> Vec<usize> {
    mark[k] = k;
    stack.clear();
    for &(i0, _) in col {
        let mut i = i0;
        while i < k && mark[i] != k {
            stack.push(i);
            mark[i] = k;
            i = parent[i];
        }
    }
    let mut out = stack.clone();
    out.sort_unstable();
    out
}

/// Greedy minimum-degree ordering on the explicit elimination graph
/// (ties broken by lowest index).
pub fn minimum_degree(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    for (i, j, _) in a.iter() {
        if i != j {
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (adj[i].len(), i)).collect();
    let mut eliminated = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    while let Some((_, v)) = queue.pop_first() {
        eliminated[v] = true;
        perm.push(v);
        let nbrs: Vec<usize> = adj[v].drain().collect();
        for &u in &nbrs {
            queue.remove(&(adj[u].len(), u));
            adj[u].remove(&v);
        }
        for (ia, &u) in nbrs.iter().enumerate() {
            for &w in &nbrs[ia + 1..] {
                if adj[u].insert(w) {
                    adj[w].insert(u);
                }
            }
        }
        for &u in &nbrs {
            debug_assert!(!eliminated[u]);
            queue.insert((adj[u].len(), u));
        }
    }
    perm
}

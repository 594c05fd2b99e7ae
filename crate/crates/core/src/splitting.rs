//! Interior/exterior splittings of the edge DoFs.
//!
//! A splitting pairs some edge DoFs along gradient paths `i -> k -> j`
//! (the exterior pairs) and leaves the rest as interior DoFs. From it we
//! read the coarse restriction `R` (one row per pair, the signed average of
//! the two DoFs), the exterior fine basis `S_E` (the signed difference) and
//! the interior Euclidean basis `S_I`.
//!
//! Two constructions are provided: one following a uniform mesh refinement
//! and one built only from `(A, G)` by coarsening an augmented nodal dual
//! operator and matching length-two paths between coarse nodes.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mesh::{Mesh2D, RefinementMap};
use crate::sparse::CsrMatrix;

/// Default strength threshold for the nodal C/F splitting.
pub const DEFAULT_THETA: f64 = 0.25;

/// Entries of the nodal dual operator below this fraction of the geometric
/// mean of the two diagonals are cancellation residue, not graph edges.
pub const GHOST_REL_TOL: f64 = 1e-10;

/// One coarse variable: DoFs `dof1` (joining `tail` and `mid`) and `dof2`
/// (joining `mid` and `head`), with the signs that orient both along the
/// traversal `tail -> mid -> head`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExteriorPair {
    pub dof1: usize,
    pub dof2: usize,
    pub sign1: f64,
    pub sign2: f64,
    pub tail: usize,
    pub mid: usize,
    pub head: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    pairs: Vec<ExteriorPair>,
    interior: Vec<usize>,
    n: usize,
}

impl Splitting {
    /// Checks that pairs and interior DoFs partition `0..n` and that every
    /// sign is `±1`.
    pub fn new(n: usize, pairs: Vec<ExteriorPair>, interior: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut mark = |d: usize| -> Result<()> {
            if d >= n {
                return Err(Error::IndexOutOfRange { index: d, bound: n });
            }
            if std::mem::replace(&mut seen[d], true) {
                return Err(Error::DuplicateIndex(d));
            }
            Ok(())
        };
        for p in &pairs {
            mark(p.dof1)?;
            mark(p.dof2)?;
            if p.sign1.abs() != 1.0 || p.sign2.abs() != 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "pair signs must be ±1, got ({}, {})",
                    p.sign1, p.sign2
                )));
            }
        }
        for &d in &interior {
            mark(d)?;
        }
        if let Some(miss) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "dof {miss} is neither paired nor interior"
            )));
        }
        Ok(Self { pairs, interior, n })
    }

    pub fn pairs(&self) -> &[ExteriorPair] {
        &self.pairs
    }

    pub fn interior_dofs(&self) -> &[usize] {
        &self.interior
    }

    /// Paired DoFs in pair order: `dof1, dof2` of pair 0, then pair 1, ...
    pub fn exterior_dofs(&self) -> Vec<usize> {
        self.pairs.iter().flat_map(|p| [p.dof1, p.dof2]).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_coarse(&self) -> usize {
        self.pairs.len()
    }

    /// Unordered DoF pairs, normalized so the smaller index comes first.
    pub fn pair_set(&self) -> BTreeSet<(usize, usize)> {
        self.pairs
            .iter()
            .map(|p| (p.dof1.min(p.dof2), p.dof1.max(p.dof2)))
            .collect()
    }

    /// `R` (pairs x n), `S_I` (n x interior) and `S_E` (n x pairs).
    pub fn realize(&self) -> (CsrMatrix, CsrMatrix, CsrMatrix) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut rt = Vec::with_capacity(2 * self.pairs.len());
        let mut et = Vec::with_capacity(2 * self.pairs.len());
        for (c, p) in self.pairs.iter().enumerate() {
            rt.push((c, p.dof1, p.sign1 * h));
            rt.push((c, p.dof2, p.sign2 * h));
            et.push((p.dof1, c, p.sign1 * h));
            et.push((p.dof2, c, -p.sign2 * h));
        }
        let it: Vec<_> = self
            .interior
            .iter()
            .enumerate()
            .map(|(c, &d)| (d, c, 1.0))
            .collect();
        let r =
            CsrMatrix::from_triplets(self.pairs.len(), self.n, &rt).expect("pair dofs in range");
        let si = CsrMatrix::from_triplets(self.n, self.interior.len(), &it)
            .expect("interior dofs in range");
        let se =
            CsrMatrix::from_triplets(self.n, self.pairs.len(), &et).expect("pair dofs in range");
        (r, si, se)
    }

    /// One line per pair: `i k j dof1 sign1 dof2 sign2`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for p in &self.pairs {
            let _ = writeln!(
                s,
                "{} {} {} {} {} {} {}",
                p.tail, p.mid, p.head, p.dof1, p.sign1 as i64, p.dof2, p.sign2 as i64
            );
        }
        s
    }
}

/// Gradient with one extra column per boundary-touching row.
#[derive(Debug, Clone)]
pub struct AugmentedGradient {
    pub gtilde: CsrMatrix,
    /// Appended columns `m..m+k` (the artificial boundary nodes).
    pub boundary_cols: Vec<usize>,
    /// Row that created each appended column.
    pub boundary_rows: Vec<usize>,
    /// Column count of the original gradient.
    pub original_cols: usize,
}

impl AugmentedGradient {
    pub fn is_boundary(&self, col: usize) -> bool {
        col >= self.original_cols
    }
}

/// Appends, for every row holding a single nonzero `δ`, a new column with
/// `-δ` in that row, so the row becomes a signed incidence of two nodes.
/// Rows without nonzeros (edges joining two eliminated vertices) are left
/// as they are; they do not take part in any path.
pub fn augment_gradient(g: &CsrMatrix) -> Result<AugmentedGradient> {
    let m = g.ncols();
    let mut trip: Vec<(usize, usize, f64)> = g.iter().collect();
    let mut boundary_rows = Vec::new();
    for i in 0..g.nrows() {
        let (_, vals) = g.row(i);
        match vals.len() {
            0 | 2 => {}
            1 => {
                trip.push((i, m + boundary_rows.len(), -vals[0]));
                boundary_rows.push(i);
            }
            k => {
                return Err(Error::InvalidArgument(format!(
                    "gradient row {i} has {k} nonzeros"
                )))
            }
        }
    }
    let k = boundary_rows.len();
    let gtilde = CsrMatrix::from_triplets(g.nrows(), m + k, &trip)?;
    Ok(AugmentedGradient {
        gtilde,
        boundary_cols: (m..m + k).collect(),
        boundary_rows,
        original_cols: m,
    })
}

/// `G̃ᵀ A G̃`.
pub fn nodal_dual(a: &CsrMatrix, gtilde: &CsrMatrix) -> Result<CsrMatrix> {
    CsrMatrix::galerkin_product(gtilde, a)
}

/// Adjacency of a symmetric matrix with cancellation residue removed
/// (see [`GHOST_REL_TOL`]); neighbor lists are sorted and exclude `i`.
pub fn matrix_graph(a: &CsrMatrix) -> Vec<Vec<(usize, f64)>> {
    let d = a.diagonal();
    (0..a.nrows())
        .map(|i| {
            let (cols, vals) = a.row(i);
            cols.iter()
                .zip(vals)
                .filter(|&(&j, &v)| j != i && v.abs() > GHOST_REL_TOL * (d[i] * d[j]).abs().sqrt())
                .map(|(&j, &v)| (j, v))
                .collect()
        })
        .collect()
}

/// Coarse/fine classification of nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodalSplit {
    pub coarse: Vec<usize>,
    pub fine: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mark {
    Unassigned,
    Coarse,
    Fine,
}

/// First-pass Ruge–Stüben coloring. `j` strongly influences `i` when
/// `|a_ij| >= theta * max_{k != i} |a_ik|`. The measure of an unassigned
/// node counts the unassigned nodes it strongly influences plus twice the
/// fine ones; the largest measure (lowest index on ties) becomes coarse
/// and every graph neighbor of it that is still unassigned becomes fine.
pub fn classical_cf(
    a: &CsrMatrix,
    c_init: &[usize],
    f_init: &[usize],
    theta: f64,
) -> Result<NodalSplit> {
    let n = a.nrows();
    let graph = matrix_graph(a);
    let mut mark = vec![Mark::Unassigned; n];
    for &c in c_init {
        if c >= n {
            return Err(Error::IndexOutOfRange { index: c, bound: n });
        }
        mark[c] = Mark::Coarse;
    }
    for &f in f_init {
        if f >= n {
            return Err(Error::IndexOutOfRange { index: f, bound: n });
        }
        if mark[f] == Mark::Coarse {
            return Err(Error::InvalidArgument(format!(
                "node {f} prescribed both coarse and fine"
            )));
        }
        mark[f] = Mark::Fine;
    }

    // influences[j] = nodes i that j strongly influences
    let mut influences: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, nbrs) in graph.iter().enumerate() {
        let rowmax = nbrs.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
        for &(j, v) in nbrs {
            if v.abs() >= theta * rowmax {
                influences[j].push(i);
            }
        }
    }
    let measure = |i: usize, mark: &[Mark]| -> usize {
        influences[i]
            .iter()
            .map(|&j| match mark[j] {
                Mark::Unassigned => 1,
                Mark::Fine => 2,
                Mark::Coarse => 0,
            })
            .sum()
    };
    let mut lambda = vec![0usize; n];
    let mut queue: BTreeSet<(std::cmp::Reverse<usize>, usize)> = BTreeSet::new();
    for i in 0..n {
        if mark[i] == Mark::Unassigned {
            lambda[i] = measure(i, &mark);
            queue.insert((std::cmp::Reverse(lambda[i]), i));
        }
    }
    // nodes whose measure depends on the status of x: those influencing x
    let mut influenced_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, infl) in influences.iter().enumerate() {
        for &i in infl {
            influenced_by[i].push(j);
        }
    }
    while let Some((_, c)) = queue.pop_first() {
        mark[c] = Mark::Coarse;
        let mut changed = vec![c];
        for &(f, _) in &graph[c] {
            if mark[f] == Mark::Unassigned {
                queue.remove(&(std::cmp::Reverse(lambda[f]), f));
                mark[f] = Mark::Fine;
                changed.push(f);
            }
        }
        let mut touched: Vec<usize> = changed
            .iter()
            .flat_map(|&x| influenced_by[x].iter().copied())
            .filter(|&i| mark[i] == Mark::Unassigned)
            .collect();
        touched.sort_unstable();
        touched.dedup();
        for i in touched {
            queue.remove(&(std::cmp::Reverse(lambda[i]), i));
            lambda[i] = measure(i, &mark);
            queue.insert((std::cmp::Reverse(lambda[i]), i));
        }
    }
    let coarse = (0..n).filter(|&i| mark[i] == Mark::Coarse).collect();
    let fine = (0..n).filter(|&i| mark[i] == Mark::Fine).collect();
    Ok(NodalSplit { coarse, fine })
}

/// C/F splitting of the augmented nodal dual with the artificial boundary
/// nodes prescribed coarse and their neighbors prescribed fine. The
/// returned coarse set excludes the boundary nodes.
pub fn nodal_cf(anodal: &CsrMatrix, aug: &AugmentedGradient, theta: f64) -> Result<NodalSplit> {
    let graph = matrix_graph(anodal);
    let mut f_init: BTreeSet<usize> = BTreeSet::new();
    for &b in &aug.boundary_cols {
        for &(j, _) in &graph[b] {
            if !aug.is_boundary(j) {
                f_init.insert(j);
            }
        }
    }
    let f_init: Vec<usize> = f_init.into_iter().collect();
    let mut split = classical_cf(anodal, &aug.boundary_cols, &f_init, theta)?;
    split.coarse.retain(|&c| !aug.is_boundary(c));
    Ok(split)
}

/// Result of the algebraic construction with its intermediate products.
#[derive(Debug, Clone)]
pub struct AlgebraicSplitting {
    pub splitting: Splitting,
    pub augmented: AugmentedGradient,
    pub nodal: NodalSplit,
    /// Intermediate nodes used by the pairs.
    pub used_mid: Vec<usize>,
}

/// Builds a splitting from `(A, G)` alone: augment `G`, coarsen the nodal
/// dual, then for coarse pairs `i < j` (boundary nodes included, but not
/// both) sharing a neighbor `k`, pair the edge DoFs `i-k` and `k-j`. Every
/// intermediate node and every DoF is used at most once; unpaired DoFs are
/// interior.
pub fn build_algebraic_splitting(
    a: &CsrMatrix,
    g: &CsrMatrix,
    theta: f64,
) -> Result<AlgebraicSplitting> {
    if a.nrows() != g.nrows() || a.ncols() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "A {}x{} vs G {}x{}",
            a.nrows(),
            a.ncols(),
            g.nrows(),
            g.ncols()
        )));
    }
    let aug = augment_gradient(g)?;
    let gt = &aug.gtilde;
    let anodal = nodal_dual(a, gt)?;
    let nodal = nodal_cf(&anodal, &aug, theta)?;
    let graph = matrix_graph(&anodal);
    let nn = gt.ncols();

    // node pair -> connecting edge DoF
    let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
    for r in 0..gt.nrows() {
        let (cols, _) = gt.row(r);
        if cols.len() == 2 {
            edge_of.entry((cols[0], cols[1])).or_insert(r);
        }
    }
    let edge = |u: usize, v: usize| edge_of.get(&(u.min(v), u.max(v))).copied();

    let mut is_coarse = vec![false; nn];
    for &c in nodal.coarse.iter().chain(&aug.boundary_cols) {
        is_coarse[c] = true;
    }
    let mut dof_free = vec![true; a.nrows()];
    let mut pairs = Vec::new();
    let mut used_mid = Vec::new();
    let mut neighbor_of = vec![usize::MAX; nn];
    let mut used_k = vec![false; nn];
    for i in (0..nn).filter(|&i| is_coarse[i]) {
        for &(k, _) in &graph[i] {
            neighbor_of[k] = i;
        }
        // coarse nodes at distance two, ascending
        let mut cands: BTreeSet<usize> = BTreeSet::new();
        for &(k, _) in &graph[i] {
            for &(j, _) in &graph[k] {
                if j > i && is_coarse[j] && !(aug.is_boundary(i) && aug.is_boundary(j)) {
                    cands.insert(j);
                }
            }
        }
        for j in cands {
            let found = graph[j].iter().find_map(|&(k, _)| {
                if neighbor_of[k] != i || used_k[k] {
                    return None;
                }
                let d1 = edge(i, k)?;
                let d2 = edge(k, j)?;
                (dof_free[d1] && dof_free[d2]).then_some((k, d1, d2))
            });
            if let Some((k, d1, d2)) = found {
                dof_free[d1] = false;
                dof_free[d2] = false;
                used_k[k] = true;
                used_mid.push(k);
                pairs.push(ExteriorPair {
                    dof1: d1,
                    dof2: d2,
                    sign1: gt.get(d1, k).signum(),
                    sign2: -gt.get(d2, k).signum(),
                    tail: i,
                    mid: k,
                    head: j,
                });
            }
        }
    }
    let interior = (0..a.nrows()).filter(|&d| dof_free[d]).collect();
    Ok(AlgebraicSplitting {
        splitting: Splitting::new(a.nrows(), pairs, interior)?,
        augmented: aug,
        nodal,
        used_mid,
    })
}

/// Splitting that follows a uniform refinement: every coarse edge whose two
/// children are both system DoFs becomes a pair traversed coarse tail ->
/// midpoint -> coarse head. Pair order is coarse edge order, so the coarse
/// variables are numbered like the coarse mesh's surviving edges. Node
/// indices in the pairs are fine-mesh vertices.
pub fn build_refinement_splitting(
    coarse: &Mesh2D,
    fine: &Mesh2D,
    map: &RefinementMap,
    fine_free_edges: &[Option<usize>],
    n: usize,
) -> Result<Splitting> {
    if map.coarse_edge_children.len() != coarse.num_edges()
        || fine_free_edges.len() != fine.num_edges()
    {
        return Err(Error::DimensionMismatch(
            "refinement map does not match the meshes".into(),
        ));
    }
    let mut paired = vec![false; n];
    let mut pairs = Vec::new();
    for (e, &[c1, c2]) in map.coarse_edge_children.iter().enumerate() {
        let (Some(d1), Some(d2)) = (fine_free_edges[c1], fine_free_edges[c2]) else {
            continue;
        };
        let k = map.coarse_edge_midpoint[e];
        let [tail, head] = coarse.edges()[e];
        // child1 runs tail..k: it agrees with the traversal when k is its head
        let sign1 = if fine.edges()[c1][1] == k { 1.0 } else { -1.0 };
        // child2 runs k..head: it agrees when k is its tail
        let sign2 = if fine.edges()[c2][0] == k { 1.0 } else { -1.0 };
        paired[d1] = true;
        paired[d2] = true;
        pairs.push(ExteriorPair {
            dof1: d1,
            dof2: d2,
            sign1,
            sign2,
            tail,
            mid: k,
            head,
        });
    }
    let interior = (0..n).filter(|&d| !paired[d]).collect();
    Splitting::new(n, pairs, interior)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> CsrMatrix {
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
    fn path_of_five_alternates() {
        let s = classical_cf(&path_laplacian(5), &[], &[], DEFAULT_THETA).unwrap();
        assert_eq!(s.coarse, vec![1, 3]);
        assert_eq!(s.fine, vec![0, 2, 4]);
    }

    #[test]
    fn all_prescribed_coarse() {
        let s = classical_cf(&path_laplacian(4), &[0, 1, 2, 3], &[], DEFAULT_THETA).unwrap();
        assert!(s.fine.is_empty());
        assert!(classical_cf(&path_laplacian(3), &[0], &[0], DEFAULT_THETA).is_err());
    }

    #[test]
    fn augment_single_row() {
        let g = CsrMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]).unwrap();
        let aug = augment_gradient(&g).unwrap();
        assert_eq!(aug.boundary_cols, vec![1]);
        assert_eq!(aug.gtilde.get(0, 1), -1.0);
        let g2 = CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, -1.0)]).unwrap();
        let aug2 = augment_gradient(&g2).unwrap();
        assert!(aug2.boundary_cols.is_empty());
        assert_eq!(aug2.gtilde, g2);
        let g3 = CsrMatrix::from_triplets(1, 3, &[(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0)]).unwrap();
        assert!(augment_gradient(&g3).is_err());
    }

    #[test]
    fn realize_without_pairs() {
        let s = Splitting::new(3, vec![], vec![0, 1, 2]).unwrap();
        let (r, si, se) = s.realize();
        assert_eq!(r.nrows(), 0);
        assert_eq!(si, CsrMatrix::identity(3));
        assert_eq!(se.ncols(), 0);
    }

    #[test]
    fn splitting_rejects_overlap_and_gaps() {
        let p = ExteriorPair {
            dof1: 0,
            dof2: 1,
            sign1: 1.0,
            sign2: -1.0,
            tail: 0,
            mid: 1,
            head: 2,
        };
        assert!(Splitting::new(3, vec![p], vec![1, 2]).is_err());
        assert!(Splitting::new(3, vec![p], vec![]).is_err());
        let bad = ExteriorPair { sign1: 0.5, ..p };
        assert!(Splitting::new(3, vec![bad], vec![2]).is_err());
        let s = Splitting::new(3, vec![p], vec![2]).unwrap();
        assert_eq!(s.dump(), "0 1 2 0 1 1 -1\n");
    }
}

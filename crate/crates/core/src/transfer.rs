//! Interpolation operators: the sparse approximate ideal interpolation
//! (interior harmonic extension of the coarse variables), the dense ideal
//! interpolation used as a reference, the canonical geometric edge-element
//! interpolation, and the coarse gradient.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dense::psd_pseudo_inverse;
use crate::error::{Error, Result};
use crate::fem::{barycentric_gradients, quad_map, quad_reference_basis};
use crate::mesh::{CellKind, Mesh2D, RefinementMap, VertexParent};
use crate::sparse::{CholeskyFactor, CsrMatrix};
use crate::splitting::Splitting;

/// Default size limit for dense computations.
pub const DENSE_CAP: usize = 2000;

/// What to do when an interior block is only positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularBlocks {
    /// Report the breakdown as an error.
    #[default]
    Fail,
    /// Use the pseudo-inverse of the offending component (dense, so the
    /// component must be at most [`DENSE_CAP`] large). For a positive
    /// semidefinite operator the resulting extension and Schur complement
    /// do not depend on the choice of generalized inverse.
    PseudoInverse,
}

/// Which nodal columns survive into the coarse gradient.
#[derive(Debug, Clone, Copy)]
pub enum CoarseNodes<'a> {
    /// Every nonzero column of `R G`.
    NonzeroColumns,
    /// The given columns (dropping any that are zero in `R G`).
    Selected(&'a [usize]),
}

#[derive(Debug, Clone)]
pub struct TransferSet {
    pub p: CsrMatrix,
    pub r: CsrMatrix,
    pub gc: CsrMatrix,
    /// Fine nodal columns kept in `gc`.
    pub coarse_nodes: Vec<usize>,
    /// Total null-space dimension of interior blocks that needed a
    /// pseudo-inverse (0 when every block was definite).
    pub interior_nullity: usize,
    /// Largest relative residual `‖A_II x − b‖ / ‖b‖` over pseudo-inverse
    /// solves; nonzero values mean the right-hand side left the range.
    pub range_defect: f64,
}

/// Connected components of the graph of a square matrix, each sorted.
pub fn connected_components(a: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        comp[s] = id;
        stack.push(s);
        while let Some(i) = stack.pop() {
            for &j in a.row(i).0 {
                if comp[j] == usize::MAX {
                    comp[j] = id;
                    members.push(j);
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

struct ComponentSolve {
    entries: Vec<(usize, usize, f64)>,
    nullity: usize,
    defect: f64,
}

/// `P = Rᵀ − S_I A_II⁻¹ S_Iᵀ A Rᵀ`, with `A_II` inverted independently on
/// each connected component of its graph.
pub fn sparse_ideal_interp(
    a: &CsrMatrix,
    g: &CsrMatrix,
    split: &Splitting,
    nodes: CoarseNodes<'_>,
    singular: SingularBlocks,
) -> Result<TransferSet> {
    if a.nrows() != split.n() || a.ncols() != split.n() || g.nrows() != split.n() {
        return Err(Error::DimensionMismatch(format!(
            "A {}x{}, G {} rows, splitting of {}",
            a.nrows(),
            a.ncols(),
            g.nrows(),
            split.n()
        )));
    }
    let (r, _, _) = split.realize();
    let rt = r.transpose();
    let interior = split.interior_dofs();
    let all: Vec<usize> = (0..a.ncols()).collect();
    let a_ii = a.extract_submatrix(interior, interior)?;
    let b = a.extract_submatrix(interior, &all)?.matmat(&rt)?;
    let comps = connected_components(&a_ii);
    let mut local = vec![0usize; interior.len()];
    for c in &comps {
        for (l, &i) in c.iter().enumerate() {
            local[i] = l;
        }
    }

    let solves: Vec<Result<ComponentSolve>> = comps
        .par_iter()
        .map(|comp| {
            let m = comp.len();
            let mut kt = Vec::new();
            let mut cols: Vec<usize> = Vec::new();
            for (li, &i) in comp.iter().enumerate() {
                let (cs, vs) = a_ii.row(i);
                for (&j, &v) in cs.iter().zip(vs) {
                    kt.push((li, local[j], v));
                }
                cols.extend_from_slice(b.row(i).0);
            }
            cols.sort_unstable();
            cols.dedup();
            if cols.is_empty() {
                return Ok(ComponentSolve {
                    entries: vec![],
                    nullity: 0,
                    defect: 0.0,
                });
            }
            let block = CsrMatrix::from_triplets(m, m, &kt)?;
            let mut rhs = vec![vec![0.0; m]; cols.len()];
            for (li, &i) in comp.iter().enumerate() {
                let (cs, vs) = b.row(i);
                for (&c, &v) in cs.iter().zip(vs) {
                    let k = cols.binary_search(&c).expect("column collected above");
                    rhs[k][li] = v;
                }
            }
            let (sol, nullity, defect) = match CholeskyFactor::factor(&block) {
                Ok(f) => (f.solve_many(&rhs)?, 0, 0.0),
                Err(e @ Error::NotPositiveDefinite { .. }) => {
                    if singular == SingularBlocks::Fail {
                        return Err(e);
                    }
                    if m > DENSE_CAP {
                        return Err(Error::DenseCapExceeded {
                            size: m,
                            cap: DENSE_CAP,
                        });
                    }
                    let dense = block.to_dense();
                    let (pinv, nullity) = psd_pseudo_inverse(&dense);
                    let mut defect = 0.0f64;
                    let sol: Vec<Vec<f64>> = rhs
                        .iter()
                        .map(|bv| {
                            let bb = nalgebra::DVector::from_column_slice(bv);
                            let x = &pinv * &bb;
                            let res = (&dense * &x - &bb).norm() / bb.norm().max(f64::MIN_POSITIVE);
                            defect = defect.max(res);
                            x.as_slice().to_vec()
                        })
                        .collect();
                    (sol, nullity, defect)
                }
                Err(e) => return Err(e),
            };
            let mut entries = Vec::new();
            for (k, &c) in cols.iter().enumerate() {
                for (li, &i) in comp.iter().enumerate() {
                    entries.push((interior[i], c, -sol[k][li]));
                }
            }
            Ok(ComponentSolve {
                entries,
                nullity,
                defect,
            })
        })
        .collect();

    let mut trip: Vec<(usize, usize, f64)> = rt.iter().collect();
    let mut nullity = 0;
    let mut defect = 0.0f64;
    for s in solves {
        let s = s?;
        trip.extend(s.entries);
        nullity += s.nullity;
        defect = defect.max(s.defect);
    }
    let p = CsrMatrix::from_triplets(a.nrows(), r.nrows(), &trip)?;
    let (gc, coarse_nodes) = coarse_gradient(&r, g, nodes)?;
    Ok(TransferSet {
        p,
        r,
        gc,
        coarse_nodes,
        interior_nullity: nullity,
        range_defect: defect,
    })
}

/// `G_c = R G I_C` with `I_C` selecting the coarse nodal columns.
pub fn coarse_gradient(
    r: &CsrMatrix,
    g: &CsrMatrix,
    nodes: CoarseNodes<'_>,
) -> Result<(CsrMatrix, Vec<usize>)> {
    let rg = r.matmat(g)?;
    let nonzero = rg.nonzero_columns();
    let cols = match nodes {
        CoarseNodes::NonzeroColumns => nonzero,
        CoarseNodes::Selected(sel) => {
            let mut keep = vec![false; rg.ncols()];
            for &c in &nonzero {
                keep[c] = true;
            }
            let mut s: Vec<usize> = sel
                .iter()
                .copied()
                .filter(|&c| c < keep.len() && keep[c])
                .collect();
            s.sort_unstable();
            s.dedup();
            s
        }
    };
    Ok((rg.select_columns(&cols)?, cols))
}

/// Dense ideal interpolation `(I − S (SᵀAS)⁺ SᵀA) Rᵀ`.
pub fn ideal_interp_dense(a: &CsrMatrix, r: &CsrMatrix, s: &CsrMatrix) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n > DENSE_CAP {
        return Err(Error::DenseCapExceeded {
            size: n,
            cap: DENSE_CAP,
        });
    }
    if r.ncols() != n || s.nrows() != n {
        return Err(Error::DimensionMismatch(
            "ideal interpolation shapes".into(),
        ));
    }
    let ad = a.to_dense();
    let rt = r.to_dense().transpose();
    let sd = s.to_dense();
    if sd.ncols() == 0 {
        return Ok(rt);
    }
    let sas = sd.transpose() * &ad * &sd;
    let (pinv, _) = psd_pseudo_inverse(&sas);
    Ok(&rt - &sd * (pinv * (sd.transpose() * (&ad * &rt))))
}

/// Reference coordinates of a point inside a quadrilateral (Newton on the
/// bilinear map).
fn quad_inverse_map(p: &[[f64; 2]], x: [f64; 2]) -> [f64; 2] {
    let mut r = [0.5, 0.5];
    for _ in 0..50 {
        let (y, j) = quad_map(p, r[0], r[1]);
        let f = [y[0] - x[0], y[1] - x[1]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let dx = (j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let dy = (-j[1][0] * f[0] + j[0][0] * f[1]) / det;
        r[0] -= dx;
        r[1] -= dy;
        if dx.abs() + dy.abs() < 1e-15 {
            break;
        }
    }
    r
}

const GAUSS2: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];

/// Quadrature roundoff below this is snapped to an exact zero.
const SNAP: f64 = 1e-13;

/// Line integrals over the segment `x0 -> x1` of the local
/// (counterclockwise) basis functions of cell `c`.
fn local_line_integrals(mesh: &Mesh2D, c: usize, x0: [f64; 2], x1: [f64; 2]) -> Vec<f64> {
    let pts = mesh.cell_points(c);
    match mesh.kind() {
        CellKind::Triangle => {
            let (g, _) = barycentric_gradients(&pts);
            let t = [x1[0] - x0[0], x1[1] - x0[1]];
            let bary = |x: [f64; 2]| -> [f64; 3] {
                let mut l = [0.0; 3];
                for i in 0..3 {
                    let j = (i + 1) % 3;
                    // λ_i vanishes on the opposite edge and grows along ∇λ_i
                    l[i] = g[i][0] * (x[0] - pts[j][0]) + g[i][1] * (x[1] - pts[j][1]);
                }
                l
            };
            (0..3)
                .map(|l| {
                    let (a, b) = (l, (l + 1) % 3);
                    GAUSS2
                        .iter()
                        .map(|&(s, w)| {
                            let x = [x0[0] + s * t[0], x0[1] + s * t[1]];
                            let lam = bary(x);
                            let phi = [
                                lam[a] * g[b][0] - lam[b] * g[a][0],
                                lam[a] * g[b][1] - lam[b] * g[a][1],
                            ];
                            w * (phi[0] * t[0] + phi[1] * t[1])
                        })
                        .sum()
                })
                .collect()
        }
        CellKind::Quadrilateral => {
            // covariant pull-back: integrate the reference basis along the
            // reference preimage of the segment
            let r0 = quad_inverse_map(&pts, x0);
            let r1 = quad_inverse_map(&pts, x1);
            let t = [r1[0] - r0[0], r1[1] - r0[1]];
            (0..4)
                .map(|l| {
                    GAUSS2
                        .iter()
                        .map(|&(s, w)| {
                            let phi = quad_reference_basis(r0[0] + s * t[0], r0[1] + s * t[1])[l];
                            w * (phi[0] * t[0] + phi[1] * t[1])
                        })
                        .sum()
                })
                .collect()
        }
    }
}

/// Canonical edge-element interpolation between nested meshes: entry
/// `(e, E)` is the tangential integral over fine edge `e` of the coarse
/// basis function of `E`. Children of a coarse edge get `±1/2` exactly.
pub fn geometric_interp(
    coarse: &Mesh2D,
    fine: &Mesh2D,
    map: &RefinementMap,
    coarse_free: &[Option<usize>],
    n_coarse: usize,
    fine_free: &[Option<usize>],
    n_fine: usize,
) -> Result<CsrMatrix> {
    if map.fine_edge_cell.len() != fine.num_edges()
        || map.coarse_edge_children.len() != coarse.num_edges()
    {
        return Err(Error::InvalidMesh(
            "meshes are not nested by this refinement map".into(),
        ));
    }
    let mut trip = Vec::new();
    for e in 0..fine.num_edges() {
        let Some(row) = fine_free[e] else { continue };
        let [t, h] = fine.edges()[e];
        if let Some(ce) = map.fine_edge_parent[e] {
            if let Some(col) = coarse_free[ce] {
                let [ct, ch] = coarse.edges()[ce];
                let dc = [
                    coarse.vertices()[ch][0] - coarse.vertices()[ct][0],
                    coarse.vertices()[ch][1] - coarse.vertices()[ct][1],
                ];
                let df = [
                    fine.vertices()[h][0] - fine.vertices()[t][0],
                    fine.vertices()[h][1] - fine.vertices()[t][1],
                ];
                let agree = dc[0] * df[0] + dc[1] * df[1] > 0.0;
                trip.push((row, col, if agree { 0.5 } else { -0.5 }));
            }
            continue;
        }
        let c = map.fine_edge_cell[e];
        let vals = local_line_integrals(coarse, c, fine.vertices()[t], fine.vertices()[h]);
        for (l, &(ce, sign)) in coarse.cell_edges()[c].iter().enumerate() {
            if let Some(col) = coarse_free[ce] {
                let v = sign * vals[l];
                if v.abs() > SNAP {
                    trip.push((row, col, v));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n_fine, n_coarse, &trip)
}

/// Nodal (bi)linear interpolation between nested meshes restricted to the
/// kept vertices.
pub fn nodal_interp(
    coarse: &Mesh2D,
    map: &RefinementMap,
    coarse_nodes: &[Option<usize>],
    n_coarse: usize,
    fine_nodes: &[Option<usize>],
    n_fine: usize,
) -> Result<CsrMatrix> {
    let mut trip = Vec::new();
    for (v, parent) in map.vertex_parent.iter().enumerate() {
        let Some(row) = fine_nodes[v] else { continue };
        let (verts, w): (Vec<usize>, f64) = match *parent {
            VertexParent::Vertex(cv) => (vec![cv], 1.0),
            VertexParent::EdgeMidpoint(e) => (coarse.edges()[e].to_vec(), 0.5),
            VertexParent::CellCenter(c) => (coarse.cells()[c].clone(), 0.25),
        };
        for cv in verts {
            if let Some(col) = coarse_nodes[cv] {
                trip.push((row, col, w));
            }
        }
    }
    CsrMatrix::from_triplets(n_fine, n_coarse, &trip)
}

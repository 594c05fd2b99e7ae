//! Lowest-order edge-element discretization of
//! `curl(mu^{-1} curl u) + beta u = f` with tangential Dirichlet data,
//! and the signed edge-vertex incidence (discrete gradient).
//!
//! Basis functions are scaled so that each DoF is the tangential line
//! integral along the globally oriented edge (tail to head).

use crate::error::{Error, Result};
use crate::mesh::{CellKind, CoefficientField, Mesh2D};
use crate::sparse::CsrMatrix;

/// Treatment of boundary edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// `u x n = 0`: boundary edges and boundary vertices are eliminated.
    #[default]
    Dirichlet,
    /// Natural condition: every edge and vertex is kept.
    Natural,
}

#[derive(Debug, Clone)]
pub struct CurlCurlSystem {
    /// `As + beta * Am`.
    pub a: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    /// Discrete gradient, free edges x free vertices.
    pub gradient: CsrMatrix,
    pub beta: f64,
    pub boundary: Boundary,
    /// Mesh edge -> system DoF (`None` when eliminated).
    pub free_edges: Vec<Option<usize>>,
    /// System DoF -> mesh edge.
    pub dof_edges: Vec<usize>,
    /// Mesh vertex -> gradient column.
    pub free_nodes: Vec<Option<usize>>,
    /// Gradient column -> mesh vertex.
    pub node_vertices: Vec<usize>,
}

impl CurlCurlSystem {
    pub fn ndofs(&self) -> usize {
        self.dof_edges.len()
    }

    /// Same discretization with a different shift.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beta = {beta} must be >= 0"
            )));
        }
        let mut s = self.clone();
        s.a = self.stiffness.add_scaled(1.0, &self.mass, beta)?;
        s.beta = beta;
        Ok(s)
    }
}

/// Element stiffness (without the `1/mu` weight) and mass for the local
/// edges of one cell, in the local counterclockwise orientation.
/// Both are returned exactly symmetric.
pub fn element_matrices(kind: CellKind, pts: &[[f64; 2]]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (mut k, mut m) = match kind {
        CellKind::Triangle => triangle_matrices(pts),
        CellKind::Quadrilateral => quad_matrices(pts),
    };
    for e in [&mut k, &mut m] {
        for l in 0..e.len() {
            for q in 0..l {
                let v = 0.5 * (e[l][q] + e[q][l]);
                e[l][q] = v;
                e[q][l] = v;
            }
        }
    }
    (k, m)
}

/// Gradients of the barycentric coordinates of a triangle.
pub fn barycentric_gradients(p: &[[f64; 2]]) -> ([[f64; 2]; 3], f64) {
    let area = crate::mesh::signed_area_of(p);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[i] = [
            (p[j][1] - p[k][1]) / (2.0 * area),
            (p[k][0] - p[j][0]) / (2.0 * area),
        ];
    }
    (g, area)
}

fn triangle_matrices(p: &[[f64; 2]]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (g, area) = barycentric_gradients(p);
    let dotg = |a: usize, b: usize| g[a][0] * g[b][0] + g[a][1] * g[b][1];
    let moment = |a: usize, b: usize| area * if a == b { 2.0 } else { 1.0 } / 12.0;
    let mut k = vec![vec![0.0; 3]; 3];
    let mut m = vec![vec![0.0; 3]; 3];
    for l in 0..3 {
        let (a, b) = (l, (l + 1) % 3);
        for q in 0..3 {
            let (c, d) = (q, (q + 1) % 3);
            // curl of every counterclockwise Whitney function is 1/area
            k[l][q] = 1.0 / area;
            m[l][q] =
                moment(a, c) * dotg(b, d) - moment(a, d) * dotg(b, c) - moment(b, c) * dotg(a, d)
                    + moment(b, d) * dotg(a, c);
        }
    }
    (k, m)
}

/// Reference-square edge basis for the local counterclockwise edges
/// (bottom, right, top, left); each has unit tangential integral and curl 1.
pub fn quad_reference_basis(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    [[1.0 - eta, 0.0], [0.0, xi], [-eta, 0.0], [0.0, xi - 1.0]]
}

/// Bilinear map of the reference square onto the quad: point and Jacobian
/// `[[dx/dxi, dx/deta], [dy/dxi, dy/deta]]`.
pub fn quad_map(p: &[[f64; 2]], xi: f64, eta: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let n = [
        (1.0 - xi) * (1.0 - eta),
        xi * (1.0 - eta),
        xi * eta,
        (1.0 - xi) * eta,
    ];
    let dxi = [-(1.0 - eta), 1.0 - eta, eta, -eta];
    let deta = [-(1.0 - xi), -xi, xi, 1.0 - xi];
    let mut x = [0.0; 2];
    let mut j = [[0.0; 2]; 2];
    for i in 0..4 {
        for d in 0..2 {
            x[d] += n[i] * p[i][d];
            j[d][0] += dxi[i] * p[i][d];
            j[d][1] += deta[i] * p[i][d];
        }
    }
    (x, j)
}

/// Covariant (curl-conforming) push-forward of the reference basis at a
/// reference point: physical values and curls.
pub fn quad_basis_physical(p: &[[f64; 2]], xi: f64, eta: f64) -> ([[f64; 2]; 4], f64) {
    let (_, j) = quad_map(p, xi, eta);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    // J^{-T} = (1/det) [[j11, -j10], [-j01, j00]]
    let hat = quad_reference_basis(xi, eta);
    let mut out = [[0.0; 2]; 4];
    for (o, h) in out.iter_mut().zip(hat) {
        o[0] = (j[1][1] * h[0] - j[1][0] * h[1]) / det;
        o[1] = (-j[0][1] * h[0] + j[0][0] * h[1]) / det;
    }
    (out, 1.0 / det)
}

const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

fn quad_matrices(p: &[[f64; 2]]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut k = vec![vec![0.0; 4]; 4];
    let mut m = vec![vec![0.0; 4]; 4];
    for &(xi, wx) in &GAUSS3 {
        for &(eta, wy) in &GAUSS3 {
            let (_, j) = quad_map(p, xi, eta);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let (phi, curl) = quad_basis_physical(p, xi, eta);
            let w = wx * wy * det;
            for l in 0..4 {
                for q in 0..4 {
                    k[l][q] += w * curl * curl;
                    m[l][q] += w * (phi[l][0] * phi[q][0] + phi[l][1] * phi[q][1]);
                }
            }
        }
    }
    (k, m)
}

/// Numbering of the edges and vertices that survive the boundary treatment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMaps {
    /// Mesh edge -> DoF.
    pub free_edges: Vec<Option<usize>>,
    /// DoF -> mesh edge.
    pub dof_edges: Vec<usize>,
    /// Mesh vertex -> gradient column.
    pub free_nodes: Vec<Option<usize>>,
    /// Gradient column -> mesh vertex.
    pub node_vertices: Vec<usize>,
}

/// Kept edges and vertices in mesh order.
pub fn dof_maps(mesh: &Mesh2D, boundary: Boundary) -> DofMaps {
    let keep_edge = |e: usize| boundary == Boundary::Natural || !mesh.boundary_edges()[e];
    let keep_vertex = |v: usize| boundary == Boundary::Natural || !mesh.boundary_vertices()[v];
    let mut free_edges = vec![None; mesh.num_edges()];
    let mut dof_edges = Vec::new();
    for e in (0..mesh.num_edges()).filter(|&e| keep_edge(e)) {
        free_edges[e] = Some(dof_edges.len());
        dof_edges.push(e);
    }
    let mut free_nodes = vec![None; mesh.num_vertices()];
    let mut node_vertices = Vec::new();
    for v in (0..mesh.num_vertices()).filter(|&v| keep_vertex(v)) {
        free_nodes[v] = Some(node_vertices.len());
        node_vertices.push(v);
    }
    DofMaps {
        free_edges,
        dof_edges,
        free_nodes,
        node_vertices,
    }
}

/// Signed incidence `G[e, head] = 1`, `G[e, tail] = -1` on the kept
/// edges and vertices.
pub fn gradient_matrix(mesh: &Mesh2D, maps: &DofMaps) -> Result<CsrMatrix> {
    let mut gt = Vec::new();
    for (i, &e) in maps.dof_edges.iter().enumerate() {
        let [t, h] = mesh.edges()[e];
        if let Some(c) = maps.free_nodes[h] {
            gt.push((i, c, 1.0));
        }
        if let Some(c) = maps.free_nodes[t] {
            gt.push((i, c, -1.0));
        }
    }
    CsrMatrix::from_triplets(maps.dof_edges.len(), maps.node_vertices.len(), &gt)
}

/// Assembles stiffness, mass, `A = As + beta Am` and the discrete gradient.
pub fn assemble(
    mesh: &Mesh2D,
    mu: &CoefficientField,
    beta: f64,
    boundary: Boundary,
) -> Result<CurlCurlSystem> {
    if mesh.num_cells() == 0 {
        return Err(Error::InvalidMesh("empty mesh".into()));
    }
    if mu.len() != mesh.num_cells() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} cells",
            mu.len(),
            mesh.num_cells()
        )));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta = {beta} must be >= 0"
        )));
    }
    let maps = dof_maps(mesh, boundary);
    let n = maps.dof_edges.len();

    let mut kt = Vec::new();
    let mut mt = Vec::new();
    for c in 0..mesh.num_cells() {
        let pts = mesh.cell_points(c);
        let (ke, me) = element_matrices(mesh.kind(), &pts);
        let w = 1.0 / mu.values()[c];
        let ce = &mesh.cell_edges()[c];
        for (l, &(el, sl)) in ce.iter().enumerate() {
            let Some(i) = maps.free_edges[el] else {
                continue;
            };
            for (q, &(eq, sq)) in ce.iter().enumerate() {
                let Some(j) = maps.free_edges[eq] else {
                    continue;
                };
                kt.push((i, j, w * sl * sq * ke[l][q]));
                mt.push((i, j, sl * sq * me[l][q]));
            }
        }
    }
    let stiffness = CsrMatrix::from_triplets(n, n, &kt)?;
    let mass = CsrMatrix::from_triplets(n, n, &mt)?;
    let a = stiffness.add_scaled(1.0, &mass, beta)?;

    let gradient = gradient_matrix(mesh, &maps)?;
    let DofMaps {
        free_edges,
        dof_edges,
        free_nodes,
        node_vertices,
    } = maps;
    Ok(CurlCurlSystem {
        a,
        stiffness,
        mass,
        gradient,
        beta,
        boundary,
        free_edges,
        dof_edges,
        free_nodes,
        node_vertices,
    })
}

/// Gradient rows with a single nonzero: interior edges touching the
/// eliminated boundary.
pub fn interior_node_rows(system: &CurlCurlSystem) -> Vec<usize> {
    (0..system.gradient.nrows())
        .filter(|&i| system.gradient.row_nnz(i) == 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{assign_mu_stripes, uniform_quad_mesh, uniform_tri_mesh};
    use crate::sparse::CholeskyFactor;

    fn unit_mu(m: &Mesh2D) -> CoefficientField {
        CoefficientField::constant(m.num_cells(), 1.0).unwrap()
    }

    #[test]
    fn exact_sequence_on_tri_and_quad() {
        for mesh in [uniform_tri_mesh(2), uniform_quad_mesh(2)] {
            let s = assemble(&mesh, &unit_mu(&mesh), 0.01, Boundary::Dirichlet).unwrap();
            let ag = s.stiffness.matmat(&s.gradient).unwrap();
            assert!(ag.max_abs() <= 1e-12 * s.stiffness.max_abs());
        }
    }

    #[test]
    fn beta_zero_gives_stiffness() {
        let m = uniform_tri_mesh(2);
        let s = assemble(&m, &unit_mu(&m), 0.0, Boundary::Dirichlet).unwrap();
        assert_eq!(s.a, s.stiffness);
    }

    #[test]
    fn mass_is_spd() {
        let m = uniform_tri_mesh(2);
        let s = assemble(&m, &unit_mu(&m), 1.0, Boundary::Dirichlet).unwrap();
        assert!(CholeskyFactor::factor(&s.mass).is_ok());
        let rows: Vec<f64> = (0..s.ndofs())
            .map(|i| s.mass.row(i).1.iter().sum())
            .collect();
        assert!(rows.iter().all(|&r| r > 0.0));
    }

    #[test]
    fn gradient_rows_are_signed_incidence() {
        let m = uniform_tri_mesh(2);
        let s = assemble(&m, &assign_mu_stripes(&m, 2), 0.01, Boundary::Dirichlet).unwrap();
        for i in 0..s.gradient.nrows() {
            let (_, v) = s.gradient.row(i);
            assert!(v.len() <= 2);
            assert!(v.iter().all(|x| x.abs() == 1.0));
            if v.len() == 2 {
                assert_eq!(v[0], -v[1]);
            }
        }
    }

    #[test]
    fn single_boundary_touching_rows() {
        let m = uniform_tri_mesh(1);
        let s = assemble(&m, &unit_mu(&m), 0.01, Boundary::Dirichlet).unwrap();
        let rows = interior_node_rows(&s);
        let expected: Vec<usize> = (0..s.ndofs())
            .filter(|&i| {
                let [t, h] = m.edges()[s.dof_edges[i]];
                m.boundary_vertices()[t] != m.boundary_vertices()[h]
            })
            .collect();
        assert_eq!(rows, expected);
        // the single interior vertex has six incident edges
        assert_eq!(rows.len(), 6);
        let nat = assemble(&m, &unit_mu(&m), 0.01, Boundary::Natural).unwrap();
        assert!(interior_node_rows(&nat).is_empty());
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = uniform_tri_mesh(1);
        assert!(assemble(&m, &unit_mu(&m), -1.0, Boundary::Dirichlet).is_err());
        let short = CoefficientField::constant(3, 1.0).unwrap();
        assert!(assemble(&m, &short, 0.1, Boundary::Dirichlet).is_err());
    }

    /// Whitney function of the local edge `a -> b` evaluated from the
    /// barycentric coordinates directly, independent of the moment formula.
    fn whitney(p: &[[f64; 2]], a: usize, b: usize, x: [f64; 2]) -> [f64; 2] {
        let det =
            (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let lam = |i: usize, x: [f64; 2]| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            ((p[j][0] - x[0]) * (p[k][1] - x[1]) - (p[k][0] - x[0]) * (p[j][1] - x[1])) / det
        };
        let h = 1e-6;
        let grad = |i: usize| {
            [
                (lam(i, [x[0] + h, x[1]]) - lam(i, [x[0] - h, x[1]])) / (2.0 * h),
                (lam(i, [x[0], x[1] + h]) - lam(i, [x[0], x[1] - h])) / (2.0 * h),
            ]
        };
        let (la, lb, ga, gb) = (lam(a, x), lam(b, x), grad(a), grad(b));
        [la * gb[0] - lb * ga[0], la * gb[1] - lb * ga[1]]
    }

    #[test]
    fn triangle_mass_matches_midpoint_quadrature() {
        let p = [[0.1, 0.2], [1.3, 0.4], [0.5, 1.1]];
        let (k, m) = element_matrices(CellKind::Triangle, &p);
        let area = crate::mesh::signed_area_of(&p);
        // the edge-midpoint rule is exact for quadratics
        let mids: Vec<[f64; 2]> = (0..3)
            .map(|i| {
                [
                    (p[i][0] + p[(i + 1) % 3][0]) / 2.0,
                    (p[i][1] + p[(i + 1) % 3][1]) / 2.0,
                ]
            })
            .collect();
        for l in 0..3 {
            for q in 0..3 {
                let mut acc = 0.0;
                for &x in &mids {
                    let u = whitney(&p, l, (l + 1) % 3, x);
                    let v = whitney(&p, q, (q + 1) % 3, x);
                    acc += (u[0] * v[0] + u[1] * v[1]) * area / 3.0;
                }
                assert!(
                    (m[l][q] - acc).abs() < 1e-8,
                    "M[{l}][{q}] = {} vs {acc}",
                    m[l][q]
                );
                assert!((k[l][q] - 1.0 / area).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_square_quad_matrices() {
        let p = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let (k, m) = element_matrices(CellKind::Quadrilateral, &p);
        // 2x2 Gauss on the reference basis, which is the physical basis here
        let g = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
        for l in 0..4 {
            for q in 0..4 {
                let mut acc = 0.0;
                for &x in &g {
                    for &y in &g {
                        let b = quad_reference_basis(x, y);
                        acc += 0.25 * (b[l][0] * b[q][0] + b[l][1] * b[q][1]);
                    }
                }
                assert!((m[l][q] - acc).abs() < 1e-12);
                assert!((k[l][q] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stiffness_scales_with_inverse_mu() {
        let mesh = uniform_tri_mesh(2);
        let one = assemble(&mesh, &unit_mu(&mesh), 0.5, Boundary::Dirichlet).unwrap();
        let two = assemble(
            &mesh,
            &unit_mu(&mesh).scaled(2.0).unwrap(),
            0.5,
            Boundary::Dirichlet,
        )
        .unwrap();
        let diff = one
            .stiffness
            .scale(0.5)
            .add_scaled(1.0, &two.stiffness, -1.0)
            .unwrap();
        assert!(diff.max_abs() < 1e-14);
        assert_eq!(one.mass, two.mass);
    }

    #[test]
    fn stiffness_kernel_is_exactly_the_gradients() {
        for (mesh, bc) in [
            (uniform_tri_mesh(2), Boundary::Dirichlet),
            (uniform_quad_mesh(2), Boundary::Natural),
        ] {
            let s = assemble(&mesh, &unit_mu(&mesh), 0.0, bc).unwrap();
            let eig = s.stiffness.to_dense().symmetric_eigen();
            let top = eig.eigenvalues.amax();
            let nullity = eig
                .eigenvalues
                .iter()
                .filter(|&&l| l.abs() < 1e-10 * top)
                .count();
            // simply connected domain: dim ker = rank G
            let gd = s.gradient.to_dense();
            let rank = (gd.transpose() * &gd)
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .filter(|&&l| l > 1e-10)
                .count();
            assert_eq!(nullity, rank);
        }
    }
}

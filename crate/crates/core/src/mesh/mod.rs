//! Two-dimensional triangular and quadrilateral meshes with globally
//! oriented edges.
//!
//! Every edge is stored as `(tail, head)` with `tail < head`. A cell
//! traverses its boundary counterclockwise; `cell_edges` records for each
//! local edge the global edge index and `+1` when the counterclockwise
//! traversal runs tail to head, `-1` otherwise.

mod coeff;
mod delaunay;
mod io;
mod refine;

use std::collections::HashMap;

pub use coeff::{
    assign_mu_regions, assign_mu_stripes, assign_mu_stripes_with, checkerboard_boxes, AxisBox,
    CoefficientField,
};
pub use delaunay::{delaunay_mesh, delaunay_points, triangulate_points};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh, LoadedMesh};
pub use refine::{refine, NestedMeshes, RefinementMap, VertexParent};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Triangle,
    Quadrilateral,
}

impl CellKind {
    pub fn nverts(self) -> usize {
        match self {
            CellKind::Triangle => 3,
            CellKind::Quadrilateral => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh2D {
    kind: CellKind,
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<Vec<(usize, f64)>>,
    edge_cells: Vec<Vec<usize>>,
    boundary_edge: Vec<bool>,
    boundary_vertex: Vec<bool>,
}

/// Result of constructing a mesh from raw cells: the mesh and the indices
/// of cells whose vertex order had to be reversed.
#[derive(Debug, Clone)]
pub struct BuiltMesh {
    pub mesh: Mesh2D,
    pub flipped_cells: Vec<usize>,
}

pub fn signed_area_of(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

impl Mesh2D {
    /// Builds a mesh, deriving edges, orientations and boundary flags.
    /// Clockwise cells are reversed and reported in `flipped_cells`.
    pub fn build(vertices: Vec<[f64; 2]>, cells: Vec<Vec<usize>>) -> Result<BuiltMesh> {
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        let kind = match cells[0].len() {
            3 => CellKind::Triangle,
            4 => CellKind::Quadrilateral,
            k => return Err(Error::InvalidMesh(format!("cells with {k} vertices"))),
        };
        let nv = vertices.len();
        let mut used = vec![false; nv];
        let mut cells = cells;
        let mut flipped = Vec::new();
        for (c, cell) in cells.iter_mut().enumerate() {
            if cell.len() != kind.nverts() {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} has {} vertices, expected {}",
                    cell.len(),
                    kind.nverts()
                )));
            }
            for &v in cell.iter() {
                if v >= nv {
                    return Err(Error::InvalidMesh(format!(
                        "cell {c} references vertex {v}"
                    )));
                }
                used[v] = true;
            }
            let pts: Vec<[f64; 2]> = cell.iter().map(|&v| vertices[v]).collect();
            let a = signed_area_of(&pts);
            if a == 0.0 {
                return Err(Error::InvalidMesh(format!("cell {c} is degenerate")));
            }
            if a < 0.0 {
                cell.reverse();
                flipped.push(c);
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("dangling vertex {v}")));
        }

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut edge_cells: Vec<Vec<usize>> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let m = cell.len();
            let mut ce = Vec::with_capacity(m);
            for l in 0..m {
                let (a, b) = (cell[l], cell[(l + 1) % m]);
                if a == b {
                    return Err(Error::InvalidMesh(format!("cell {c} repeats vertex {a}")));
                }
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_cells.push(Vec::new());
                    edges.len() - 1
                });
                edge_cells[e].push(c);
                if edge_cells[e].len() > 2 {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) shared by more than two cells",
                        key.0, key.1
                    )));
                }
                ce.push((e, if a < b { 1.0 } else { -1.0 }));
            }
            cell_edges.push(ce);
        }
        let boundary_edge: Vec<bool> = edge_cells.iter().map(|c| c.len() == 1).collect();
        let mut boundary_vertex = vec![false; nv];
        for (e, &[t, h]) in edges.iter().enumerate() {
            if boundary_edge[e] {
                boundary_vertex[t] = true;
                boundary_vertex[h] = true;
            }
        }
        Ok(BuiltMesh {
            mesh: Mesh2D {
                kind,
                vertices,
                cells,
                edges,
                cell_edges,
                edge_cells,
                boundary_edge,
                boundary_vertex,
            },
            flipped_cells: flipped,
        })
    }

    /// Like [`Mesh2D::build`] but rejects clockwise cells instead of fixing them.
    pub fn new(vertices: Vec<[f64; 2]>, cells: Vec<Vec<usize>>) -> Result<Self> {
        let b = Self::build(vertices, cells)?;
        if let Some(&c) = b.flipped_cells.first() {
            return Err(Error::InvalidMesh(format!("cell {c} is clockwise")));
        }
        Ok(b.mesh)
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Per cell, `(global edge, orientation sign)` for each local edge
    /// `(v_l, v_{l+1})`.
    pub fn cell_edges(&self) -> &[Vec<(usize, f64)>] {
        &self.cell_edges
    }

    pub fn edge_cells(&self) -> &[Vec<usize>] {
        &self.edge_cells
    }

    pub fn boundary_edges(&self) -> &[bool] {
        &self.boundary_edge
    }

    pub fn boundary_vertices(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `V - E + C`; equals 1 for a mesh of a disk.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_cells() as i64
    }

    pub fn cell_points(&self, c: usize) -> Vec<[f64; 2]> {
        self.cells[c].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        signed_area_of(&self.cell_points(c))
    }

    pub fn centroid(&self, c: usize) -> [f64; 2] {
        let pts = self.cell_points(c);
        let k = pts.len() as f64;
        let s = pts
            .iter()
            .fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
        [s[0] / k, s[1] / k]
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [t, h] = self.edges[e];
        let (p, q) = (self.vertices[t], self.vertices[h]);
        [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]
    }

    /// Index of edge `{a, b}` if it exists.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        let (t, h) = (a.min(b), a.max(b));
        self.edges.iter().position(|&[x, y]| x == t && y == h)
    }

    pub(crate) fn edge_lookup(&self) -> HashMap<(usize, usize), usize> {
        self.edges
            .iter()
            .enumerate()
            .map(|(e, &[t, h])| ((t, h), e))
            .collect()
    }

    /// Checks the orientation, incidence and boundary invariants.
    pub fn validate(&self) -> Result<()> {
        for (e, &[t, h]) in self.edges.iter().enumerate() {
            if t >= h {
                return Err(Error::InvalidMesh(format!(
                    "edge {e} not oriented low to high"
                )));
            }
            let n = self.edge_cells[e].len();
            if n == 0 || n > 2 {
                return Err(Error::InvalidMesh(format!("edge {e} has {n} cells")));
            }
        }
        for c in 0..self.num_cells() {
            if self.cell_area(c) <= 0.0 {
                return Err(Error::InvalidMesh(format!("cell {c} not counterclockwise")));
            }
        }
        let mut bv = vec![false; self.num_vertices()];
        for (e, &[t, h]) in self.edges.iter().enumerate() {
            if self.boundary_edge[e] {
                bv[t] = true;
                bv[h] = true;
            }
        }
        if bv != self.boundary_vertex {
            return Err(Error::InvalidMesh(
                "boundary vertex flags inconsistent".into(),
            ));
        }
        Ok(())
    }
}

/// Structured mesh of the unit square with `2^level` cells per side, each
/// square split into two triangles along the `(0,0)-(1,1)` diagonal.
pub fn uniform_tri_mesh(level: u32) -> Mesh2D {
    let (vertices, squares) = square_grid(level);
    let mut cells = Vec::with_capacity(2 * squares.len());
    for [v00, v10, v11, v01] in squares {
        cells.push(vec![v00, v10, v11]);
        cells.push(vec![v00, v11, v01]);
    }
    Mesh2D::new(vertices, cells).expect("structured triangle mesh is valid")
}

/// Structured mesh of the unit square with `4^level` square cells.
pub fn uniform_quad_mesh(level: u32) -> Mesh2D {
    let (vertices, squares) = square_grid(level);
    let cells = squares.into_iter().map(|s| s.to_vec()).collect();
    Mesh2D::new(vertices, cells).expect("structured quad mesh is valid")
}

fn square_grid(level: u32) -> (Vec<[f64; 2]>, Vec<[usize; 4]>) {
    let n = 1usize << level;
    let h = 1.0 / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let mut squares = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            squares.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    (vertices, squares)
}

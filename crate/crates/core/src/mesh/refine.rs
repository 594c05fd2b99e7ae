use super::{CellKind, Mesh2D};
use crate::error::Result;

/// Origin of a fine vertex in a uniform refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexParent {
    Vertex(usize),
    EdgeMidpoint(usize),
    CellCenter(usize),
}

/// Parent/child relations produced by [`refine`].
#[derive(Debug, Clone)]
pub struct RefinementMap {
    /// Per coarse edge `(child1, child2)`: fine edges ordered from the coarse
    /// tail to the coarse head.
    pub coarse_edge_children: Vec<[usize; 2]>,
    /// Midpoint fine vertex of every coarse edge.
    pub coarse_edge_midpoint: Vec<usize>,
    pub vertex_parent: Vec<VertexParent>,
    pub cell_children: Vec<[usize; 4]>,
    /// For each fine edge, the coarse edge it subdivides, if any.
    pub fine_edge_parent: Vec<Option<usize>>,
    /// For each fine edge, the coarse cell containing it.
    pub fine_edge_cell: Vec<usize>,
}

/// Uniform refinement: every edge is split at its midpoint, triangles into
/// four (red refinement) and quadrilaterals into four around a new center
/// vertex. Coarse vertices keep their indices; midpoints follow as
/// `nv + edge`, then quad centers as `nv + ne + cell`.
pub fn refine(mesh: &Mesh2D) -> Result<(Mesh2D, RefinementMap)> {
    let nv = mesh.num_vertices();
    let ne = mesh.num_edges();
    let mut vertices = mesh.vertices().to_vec();
    let mut vertex_parent: Vec<VertexParent> = (0..nv).map(VertexParent::Vertex).collect();
    for e in 0..ne {
        vertices.push(mesh.edge_midpoint(e));
        vertex_parent.push(VertexParent::EdgeMidpoint(e));
    }
    let mid = |cell: usize, l: usize| nv + mesh.cell_edges()[cell][l].0;
    let mut cells = Vec::with_capacity(4 * mesh.num_cells());
    match mesh.kind() {
        CellKind::Triangle => {
            for (c, cell) in mesh.cells().iter().enumerate() {
                let (a, b, cc) = (cell[0], cell[1], cell[2]);
                let (mab, mbc, mca) = (mid(c, 0), mid(c, 1), mid(c, 2));
                cells.push(vec![a, mab, mca]);
                cells.push(vec![mab, b, mbc]);
                cells.push(vec![mca, mbc, cc]);
                cells.push(vec![mab, mbc, mca]);
            }
        }
        CellKind::Quadrilateral => {
            for (c, cell) in mesh.cells().iter().enumerate() {
                let o = vertices.len();
                vertices.push(mesh.centroid(c));
                vertex_parent.push(VertexParent::CellCenter(c));
                let (a, b, cc, d) = (cell[0], cell[1], cell[2], cell[3]);
                let (mab, mbc, mcd, mda) = (mid(c, 0), mid(c, 1), mid(c, 2), mid(c, 3));
                cells.push(vec![a, mab, o, mda]);
                cells.push(vec![mab, b, mbc, o]);
                cells.push(vec![o, mbc, cc, mcd]);
                cells.push(vec![mda, o, mcd, d]);
            }
        }
    }
    let fine = Mesh2D::new(vertices, cells)?;
    let lookup = fine.edge_lookup();
    let find = |a: usize, b: usize| lookup[&(a.min(b), a.max(b))];
    let mut fine_edge_parent = vec![None; fine.num_edges()];
    let mut coarse_edge_children = Vec::with_capacity(ne);
    for (e, &[t, h]) in mesh.edges().iter().enumerate() {
        let m = nv + e;
        let ch = [find(t, m), find(m, h)];
        fine_edge_parent[ch[0]] = Some(e);
        fine_edge_parent[ch[1]] = Some(e);
        coarse_edge_children.push(ch);
    }
    let cell_children: Vec<[usize; 4]> = (0..mesh.num_cells())
        .map(|c| [4 * c, 4 * c + 1, 4 * c + 2, 4 * c + 3])
        .collect();
    let mut fine_edge_cell = vec![usize::MAX; fine.num_edges()];
    for (c, ch) in cell_children.iter().enumerate() {
        for &fc in ch {
            for &(fe, _) in &fine.cell_edges()[fc] {
                fine_edge_cell[fe] = c;
            }
        }
    }
    Ok((
        fine,
        RefinementMap {
            coarse_edge_children,
            coarse_edge_midpoint: (0..ne).map(|e| nv + e).collect(),
            vertex_parent,
            cell_children,
            fine_edge_parent,
            fine_edge_cell,
        },
    ))
}

/// A coarsest mesh and its successive uniform refinements.
#[derive(Debug, Clone)]
pub struct NestedMeshes {
    meshes: Vec<Mesh2D>,
    maps: Vec<RefinementMap>,
}

impl NestedMeshes {
    /// Refines `coarsest` `levels` times.
    pub fn new(coarsest: Mesh2D, levels: usize) -> Result<Self> {
        let mut meshes = vec![coarsest];
        let mut maps = Vec::with_capacity(levels);
        for _ in 0..levels {
            let (fine, map) = refine(meshes.last().expect("nonempty"))?;
            meshes.push(fine);
            maps.push(map);
        }
        Ok(Self { meshes, maps })
    }

    /// Meshes from coarsest (index 0) to finest.
    pub fn meshes(&self) -> &[Mesh2D] {
        &self.meshes
    }

    /// `maps()[l]` refines `meshes()[l]` into `meshes()[l + 1]`.
    pub fn maps(&self) -> &[RefinementMap] {
        &self.maps
    }

    pub fn finest(&self) -> &Mesh2D {
        self.meshes.last().expect("nonempty")
    }

    /// Number of refinements.
    pub fn depth(&self) -> usize {
        self.maps.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{uniform_quad_mesh, uniform_tri_mesh};
    use std::collections::BTreeSet;

    fn key(p: [f64; 2]) -> (i64, i64) {
        ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64)
    }

    fn geometry(m: &Mesh2D) -> (BTreeSet<Vec<(i64, i64)>>, BTreeSet<Vec<(i64, i64)>>) {
        let edges = m
            .edges()
            .iter()
            .map(|&[t, h]| {
                let mut v = vec![key(m.vertices()[t]), key(m.vertices()[h])];
                v.sort();
                v
            })
            .collect();
        let cells = m
            .cells()
            .iter()
            .map(|c| {
                let mut v: Vec<_> = c.iter().map(|&i| key(m.vertices()[i])).collect();
                v.sort();
                v
            })
            .collect();
        (edges, cells)
    }

    #[test]
    fn refined_tri_matches_structured() {
        for l in 0..3 {
            let (f, _) = refine(&uniform_tri_mesh(l)).unwrap();
            assert_eq!(geometry(&f), geometry(&uniform_tri_mesh(l + 1)));
        }
        let (f, _) = refine(&uniform_quad_mesh(1)).unwrap();
        assert_eq!(geometry(&f), geometry(&uniform_quad_mesh(2)));
    }

    #[test]
    fn children_share_midpoint() {
        for coarse in [uniform_tri_mesh(1), uniform_quad_mesh(1)] {
            let (fine, map) = refine(&coarse).unwrap();
            assert_eq!(fine.num_cells(), 4 * coarse.num_cells());
            fine.validate().unwrap();
            for (e, &[c1, c2]) in map.coarse_edge_children.iter().enumerate() {
                let a = fine.edges()[c1];
                let b = fine.edges()[c2];
                let shared: Vec<_> = a.iter().filter(|v| b.contains(v)).collect();
                assert_eq!(shared, vec![&map.coarse_edge_midpoint[e]]);
                let [t, h] = coarse.edges()[e];
                assert!(a.contains(&t) && b.contains(&h));
            }
        }
    }
}

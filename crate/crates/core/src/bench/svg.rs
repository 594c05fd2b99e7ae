//! SVG picture of a coarsening: mesh edges in gray, the length-two paths
//! of the exterior pairs in blue, coarse nodes as red circles.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::fem::CurlCurlSystem;
use crate::mesh::Mesh2D;
use crate::splitting::{AlgebraicSplitting, Splitting};

/// Paths and coarse nodes expressed as mesh vertices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoarseningPattern {
    /// `[tail, mid, head]` per exterior pair.
    pub paths: Vec<[usize; 3]>,
    /// Sorted, distinct.
    pub coarse: Vec<usize>,
}

impl CoarseningPattern {
    /// From a refinement splitting, whose nodes already are fine-mesh
    /// vertices; the coarse nodes are the path endpoints.
    pub fn from_refinement(split: &Splitting) -> Self {
        let paths: Vec<[usize; 3]> = split
            .pairs()
            .iter()
            .map(|p| [p.tail, p.mid, p.head])
            .collect();
        let coarse: BTreeSet<usize> = paths.iter().flat_map(|p| [p[0], p[2]]).collect();
        Self {
            paths,
            coarse: coarse.into_iter().collect(),
        }
    }

    /// From an algebraic splitting of `system`. Gradient columns map to
    /// their vertices; each artificial boundary column maps to the
    /// eliminated endpoint of the edge that created it.
    pub fn from_algebraic(
        system: &CurlCurlSystem,
        mesh: &Mesh2D,
        alg: &AlgebraicSplitting,
    ) -> Self {
        let aug = &alg.augmented;
        let vertex = |c: usize| -> usize {
            if c < aug.original_cols {
                return system.node_vertices[c];
            }
            let row = aug.boundary_rows[c - aug.original_cols];
            let [t, h] = mesh.edges()[system.dof_edges[row]];
            if system.free_nodes[t].is_none() {
                t
            } else {
                h
            }
        };
        let paths: Vec<[usize; 3]> = alg
            .splitting
            .pairs()
            .iter()
            .map(|p| [vertex(p.tail), vertex(p.mid), vertex(p.head)])
            .collect();
        let coarse: BTreeSet<usize> = alg
            .nodal
            .coarse
            .iter()
            .map(|&c| vertex(c))
            .chain(paths.iter().flat_map(|p| [p[0], p[2]]))
            .collect();
        Self {
            paths,
            coarse: coarse.into_iter().collect(),
        }
    }
}

const SIZE: f64 = 600.0;
const PAD: f64 = 20.0;

/// The picture as an SVG document: one `<line>` per mesh edge, one
/// `<polyline>` per path and one `<circle>` per coarse node.
pub fn coarsening_svg(mesh: &Mesh2D, pattern: &CoarseningPattern) -> String {
    let v = mesh.vertices();
    let (mut x0, mut y0, mut x1, mut y1) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for p in v {
        x0 = x0.min(p[0]);
        y0 = y0.min(p[1]);
        x1 = x1.max(p[0]);
        y1 = y1.max(p[1]);
    }
    let span = (x1 - x0).max(y1 - y0).max(f64::MIN_POSITIVE);
    let s = (SIZE - 2.0 * PAD) / span;
    let px = |i: usize| (PAD + (v[i][0] - x0) * s, SIZE - PAD - (v[i][1] - y0) * s);
    let r = (0.25 * s * span / (mesh.num_vertices() as f64).sqrt().max(1.0)).clamp(1.5, 6.0);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r##"<g stroke="#b0b0b0" stroke-width="1">"##);
    for &[a, b] in mesh.edges() {
        let ((ax, ay), (bx, by)) = (px(a), px(b));
        let _ = writeln!(
            out,
            r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}"/>"#
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r##"<g stroke="#1f4fd8" stroke-width="3" fill="none">"##
    );
    for path in &pattern.paths {
        let pts: Vec<String> = path
            .iter()
            .map(|&i| {
                let (x, y) = px(i);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(out, r#"<polyline points="{}"/>"#, pts.join(" "));
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r##"<g fill="none" stroke="#d81f1f" stroke-width="2">"##
    );
    for &c in &pattern.coarse {
        let (x, y) = px(c);
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}"/>"#);
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}

pub fn dump_coarsening_svg(
    mesh: &Mesh2D,
    pattern: &CoarseningPattern,
    path: impl AsRef<Path>,
) -> Result<()> {
    std::fs::write(path, coarsening_svg(mesh, pattern))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::uniform_quad_mesh;

    #[test]
    fn empty_pattern_draws_mesh_only() {
        let m = uniform_quad_mesh(1);
        let s = coarsening_svg(&m, &CoarseningPattern::default());
        assert_eq!(s.matches("<line").count(), m.num_edges());
        assert_eq!(s.matches("<polyline").count(), 0);
        assert_eq!(s.matches("<circle").count(), 0);
        assert!(s.trim_end().ends_with("</svg>"));
    }
}

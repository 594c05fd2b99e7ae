//! Plain-text mesh format: a line `NV NC`, then `NV` lines `x y`, then `NC`
//! lines of 3 or 4 zero-based vertex indices.

use std::fmt::Write as _;
use std::path::Path;

use super::Mesh2D;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LoadedMesh {
    pub mesh: Mesh2D,
    pub warnings: Vec<String>,
}

pub fn parse_mesh(text: &str) -> Result<LoadedMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let err = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };
    let (ln, head) = lines.next().ok_or_else(|| err(1, "empty mesh file"))?;
    let h: Vec<&str> = head.split_whitespace().collect();
    if h.len() != 2 {
        return Err(err(ln, "expected 'NV NC'"));
    }
    let nv: usize = h[0].parse().map_err(|_| err(ln, "bad vertex count"))?;
    let nc: usize = h[1].parse().map_err(|_| err(ln, "bad cell count"))?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| err(ln, "missing vertex line"))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 2 {
            return Err(err(ln, "expected 'x y'"));
        }
        let x: f64 = t[0].parse().map_err(|_| err(ln, "bad coordinate"))?;
        let y: f64 = t[1].parse().map_err(|_| err(ln, "bad coordinate"))?;
        vertices.push([x, y]);
    }
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, l) = lines.next().ok_or_else(|| err(ln, "missing cell line"))?;
        let c: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(ln, "bad vertex index"))?;
        if c.len() != 3 && c.len() != 4 {
            return Err(err(ln, "cells must have 3 or 4 vertices"));
        }
        if c.iter().any(|&v| v >= nv) {
            return Err(err(ln, "vertex index out of range"));
        }
        cells.push(c);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(err(ln, "trailing content"));
    }
    let built = Mesh2D::build(vertices, cells)?;
    let warnings = built
        .flipped_cells
        .iter()
        .map(|c| format!("cell {c} was clockwise; vertex order reversed"))
        .collect();
    Ok(LoadedMesh {
        mesh: built.mesh,
        warnings,
    })
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<LoadedMesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn write_mesh(mesh: &Mesh2D) -> String {
    let mut s = String::new();
    writeln!(s, "{} {}", mesh.num_vertices(), mesh.num_cells()).unwrap();
    for v in mesh.vertices() {
        writeln!(s, "{:.17e} {:.17e}", v[0], v[1]).unwrap();
    }
    for c in mesh.cells() {
        let t: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        writeln!(s, "{}", t.join(" ")).unwrap();
    }
    s
}

pub fn save_mesh(mesh: &Mesh2D, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_mesh(mesh))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::uniform_quad_mesh;

    const SQUARE: &str = "4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n";

    #[test]
    fn two_triangle_square() {
        let l = parse_mesh(SQUARE).unwrap();
        assert_eq!(l.mesh.num_edges(), 5);
        assert_eq!(l.mesh.boundary_edges().iter().filter(|&&b| b).count(), 4);
        assert!(l.warnings.is_empty());
    }

    #[test]
    fn round_trip_is_identity() {
        let l = parse_mesh(SQUARE).unwrap();
        let again = parse_mesh(&write_mesh(&l.mesh)).unwrap();
        assert_eq!(again.mesh.vertices(), l.mesh.vertices());
        assert_eq!(again.mesh.cells(), l.mesh.cells());
        let q = uniform_quad_mesh(2);
        let q2 = parse_mesh(&write_mesh(&q)).unwrap().mesh;
        assert_eq!(q2.cells(), q.cells());
    }

    #[test]
    fn clockwise_cell_warns() {
        let l = parse_mesh("3 1\n0 0\n1 0\n0 1\n0 2 1\n").unwrap();
        assert_eq!(l.warnings.len(), 1);
        assert!(l.mesh.cell_area(0) > 0.0);
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(
            parse_mesh("4 2\n0 0\n1 x\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(parse_mesh("3 1\n0 0\n1 0\n0 1\n0 1 7\n").is_err());
        assert!(matches!(
            parse_mesh("4 1\n0 0\n1 0\n0 1\n5 5\n0 1 2\n"),
            Err(Error::InvalidMesh(_))
        ));
    }
}

//! Bowyer–Watson Delaunay triangulation of point sets in the unit square.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Mesh2D;
use crate::error::{Error, Result};

/// Point set used by [`delaunay_mesh`]: the four corners, equally spaced
/// points on each side, and jittered interior points.
pub fn delaunay_points(npoints: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
    if npoints < 4 {
        return Err(Error::InvalidArgument(
            "delaunay mesh needs at least 4 points".into(),
        ));
    }
    let m = ((npoints as f64).sqrt().floor() as usize).max(2);
    let per_side = (m - 2).min((npoints - 4) / 4);
    let mut pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    for k in 1..=per_side {
        let t = k as f64 / (per_side + 1) as f64;
        pts.push([t, 0.0]);
        pts.push([1.0, t]);
        pts.push([1.0 - t, 1.0]);
        pts.push([0.0, 1.0 - t]);
    }
    let interior = npoints - pts.len();
    if interior > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = (interior as f64).sqrt().ceil() as usize;
        // half a boundary spacing; without side points, half an interior one
        let spacing = if per_side > 0 { per_side } else { g };
        let margin = 0.5 / (spacing + 1) as f64;
        let span = 1.0 - 2.0 * margin;
        let mut slots: Vec<(usize, usize)> =
            (0..g).flat_map(|j| (0..g).map(move |i| (i, j))).collect();
        // drop slots at random until the count matches
        while slots.len() > interior {
            let k = rng.gen_range(0..slots.len());
            slots.remove(k);
        }
        let h = span / g as f64;
        for (i, j) in slots {
            let x = margin + h * (i as f64 + 0.2 + 0.6 * rng.gen::<f64>());
            let y = margin + h * (j as f64 + 0.2 + 0.6 * rng.gen::<f64>());
            pts.push([x, y]);
        }
    }
    Ok(pts)
}

/// Delaunay triangulation of [`delaunay_points`]; deterministic in `seed`.
pub fn delaunay_mesh(npoints: usize, seed: u64) -> Result<Mesh2D> {
    let pts = delaunay_points(npoints, seed)?;
    triangulate_points(&pts)
}

/// Triangulates the points, retrying once with a deterministic
/// perturbation of interior points if the first attempt is degenerate.
pub fn triangulate_points(pts: &[[f64; 2]]) -> Result<Mesh2D> {
    match bowyer_watson(pts).and_then(|tris| finish(pts, tris)) {
        Ok(m) => Ok(m),
        Err(_) => {
            let perturbed: Vec<[f64; 2]> = pts
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let on_boundary = p[0] <= 0.0 || p[0] >= 1.0 || p[1] <= 0.0 || p[1] >= 1.0;
                    if on_boundary {
                        p
                    } else {
                        let s = ((i * 7919) % 13) as f64 - 6.0;
                        [p[0] + 1e-9 * s, p[1] - 1e-9 * s]
                    }
                })
                .collect();
            let tris = bowyer_watson(&perturbed)?;
            finish(&perturbed, tris)
        }
    }
}

fn finish(pts: &[[f64; 2]], tris: Vec<[usize; 3]>) -> Result<Mesh2D> {
    let cells = tris.into_iter().map(|t| t.to_vec()).collect();
    let mesh = Mesh2D::build(pts.to_vec(), cells)?.mesh;
    let area: f64 = (0..mesh.num_cells()).map(|c| mesh.cell_area(c)).sum();
    let hull = hull_area(pts);
    if (area - hull).abs() > 1e-10 * hull.max(1.0) || mesh.euler_characteristic() != 1 {
        return Err(Error::InvalidMesh(
            "triangulation does not cover the hull".into(),
        ));
    }
    if (0..mesh.num_cells()).any(|c| mesh.cell_area(c) < 1e-14) {
        return Err(Error::InvalidMesh("degenerate triangle".into()));
    }
    Ok(mesh)
}

fn hull_area(pts: &[[f64; 2]]) -> f64 {
    let mut p: Vec<[f64; 2]> = pts.to_vec();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    p.dedup();
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for &q in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0
            {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    super::signed_area_of(&hull).abs()
}

/// Positive when `d` is strictly inside the circumcircle of the
/// counterclockwise triangle `abc`, zero when cocircular. Evaluated
/// exactly: equally spaced boundary points make cocircular quadruples
/// common, and an inconsistent sign there breaks the cavity.
pub(crate) fn in_circumcircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let pt = |p: [f64; 2]| robust::Coord { x: p[0], y: p[1] };
    robust::incircle(pt(a), pt(b), pt(c), pt(d))
}

fn bowyer_watson(pts: &[[f64; 2]]) -> Result<Vec<[usize; 3]>> {
    let n = pts.len();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let c = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let mut all = pts.to_vec();
    all.push([c[0] - 50.0 * span, c[1] - 50.0 * span]);
    all.push([c[0] + 50.0 * span, c[1] - 50.0 * span]);
    all.push([c[0], c[1] + 50.0 * span]);
    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];
    for (ip, &p) in pts.iter().enumerate() {
        let mut bad = Vec::new();
        let mut good = Vec::with_capacity(tris.len());
        for t in tris {
            if in_circumcircle(all[t[0]], all[t[1]], all[t[2]], p) > 0.0 {
                bad.push(t);
            } else {
                good.push(t);
            }
        }
        if bad.is_empty() {
            return Err(Error::InvalidMesh(format!(
                "point {ip} outside triangulation"
            )));
        }
        let mut count: HashMap<(usize, usize), (usize, (usize, usize))> = HashMap::new();
        for t in &bad {
            for l in 0..3 {
                let (a, b) = (t[l], t[(l + 1) % 3]);
                let e = count.entry((a.min(b), a.max(b))).or_insert((0, (a, b)));
                e.0 += 1;
            }
        }
        let mut boundary: Vec<(usize, usize)> = count
            .into_values()
            .filter(|(k, _)| *k == 1)
            .map(|(_, e)| e)
            .collect();
        boundary.sort_unstable();
        for (a, b) in boundary {
            good.push([a, b, ip]);
        }
        tris = good;
    }
    Ok(tris
        .into_iter()
        .filter(|t| t.iter().all(|&v| v < n))
        .collect())
}

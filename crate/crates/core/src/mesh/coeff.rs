use super::Mesh2D;
use crate::error::{Error, Result};

/// Piecewise-constant permeability `mu`, one positive value per cell.
/// The stiffness weight of a cell is `1 / mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    mu: Vec<f64>,
}

impl CoefficientField {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if let Some((c, v)) = mu
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "mu[{c}] = {v} must be positive"
            )));
        }
        Ok(Self { mu })
    }

    pub fn constant(ncells: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; ncells])
    }

    pub fn values(&self) -> &[f64] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Same field scaled by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.mu.iter().map(|m| m * s).collect())
    }
}

/// Vertical stripes on the `2^fine_level` columns of a structured mesh:
/// `mu = 10` in even columns and `0.1` in odd ones.
pub fn assign_mu_stripes(mesh: &Mesh2D, fine_level: u32) -> CoefficientField {
    assign_mu_stripes_with(mesh, fine_level, 10.0, 0.1).expect("stripe values are positive")
}

pub fn assign_mu_stripes_with(
    mesh: &Mesh2D,
    fine_level: u32,
    even: f64,
    odd: f64,
) -> Result<CoefficientField> {
    let ncol = 1usize << fine_level;
    let mu = (0..mesh.num_cells())
        .map(|c| {
            let x = mesh.centroid(c)[0];
            let col = ((x * ncol as f64).floor() as usize).min(ncol - 1);
            if col % 2 == 0 {
                even
            } else {
                odd
            }
        })
        .collect();
    CoefficientField::new(mu)
}

/// Closed axis-aligned box `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBox {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl AxisBox {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }
}

/// Each cell takes the value of the first box containing its centroid,
/// else `default`.
pub fn assign_mu_regions(
    mesh: &Mesh2D,
    boxes: &[(AxisBox, f64)],
    default: f64,
) -> Result<CoefficientField> {
    let mu = (0..mesh.num_cells())
        .map(|c| {
            let p = mesh.centroid(c);
            boxes
                .iter()
                .find(|(b, _)| b.contains(p))
                .map_or(default, |&(_, v)| v)
        })
        .collect();
    CoefficientField::new(mu)
}

/// `k x k` checkerboard of boxes over the unit square alternating between
/// `a` (at the lower-left box) and `b`.
pub fn checkerboard_boxes(k: usize, a: f64, b: f64) -> Vec<(AxisBox, f64)> {
    let h = 1.0 / k as f64;
    let mut out = Vec::with_capacity(k * k);
    for j in 0..k {
        for i in 0..k {
            let bx = AxisBox {
                x0: i as f64 * h,
                x1: (i + 1) as f64 * h,
                y0: j as f64 * h,
                y1: (j + 1) as f64 * h,
            };
            out.push((bx, if (i + j) % 2 == 0 { a } else { b }));
        }
    }
    out
}

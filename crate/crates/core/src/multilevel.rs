//! Multilevel hierarchies (geometric, refinement-based and algebraic
//! coarsening), the V(1,1) cycle, standalone AMG iteration and
//! AMG-preconditioned conjugate gradients.

use std::fmt;

use crate::error::{Error, Result};
use crate::fem::{dof_maps, gradient_matrix, Boundary, CurlCurlSystem};
use crate::mesh::NestedMeshes;
use crate::smoothers::{Direction, OssL1};
use crate::sparse::{dot, norm2, CholeskyFactor, CsrMatrix};
use crate::splitting::{build_algebraic_splitting, build_refinement_splitting, DEFAULT_THETA};
use crate::transfer::{geometric_interp, sparse_ideal_interp, CoarseNodes, SingularBlocks};

/// Coarsening method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Canonical edge-element interpolation between nested meshes.
    Geo,
    /// Sparse ideal interpolation on the refinement splitting.
    Ref,
    /// Sparse ideal interpolation on the algebraic splitting.
    Alg,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Geo, Method::Ref, Method::Alg];

    pub fn name(self) -> &'static str {
        match self {
            Method::Geo => "geo",
            Method::Ref => "ref",
            Method::Alg => "alg",
        }
    }

    pub fn needs_meshes(self) -> bool {
        !matches!(self, Method::Alg)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "geo" => Ok(Method::Geo),
            "ref" => Ok(Method::Ref),
            "alg" => Ok(Method::Alg),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HierarchyConfig {
    pub max_levels: usize,
    pub min_coarse: usize,
    pub theta: f64,
    pub singular: SingularBlocks,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            max_levels: 20,
            min_coarse: 32,
            theta: DEFAULT_THETA,
            singular: SingularBlocks::Fail,
        }
    }
}

impl HierarchyConfig {
    /// Fine level plus one coarse level.
    pub fn two_grid() -> Self {
        Self {
            max_levels: 2,
            ..Self::default()
        }
    }
}

/// One level: operator, gradient, interpolation to it from the next
/// coarser level, and its smoother.
#[derive(Debug, Clone)]
pub struct Level {
    pub a: CsrMatrix,
    pub g: CsrMatrix,
    pub p: Option<CsrMatrix>,
    pub r: Option<CsrMatrix>,
    smoother: Option<OssL1>,
}

#[derive(Debug, Clone)]
pub struct Hierarchy {
    levels: Vec<Level>,
    method: Method,
    coarse_factor: CholeskyFactor,
    /// Coarsening ended because no coarse variables could be formed.
    pub stalled: bool,
}

impl Hierarchy {
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.a.nrows()).collect()
    }

    pub fn finest(&self) -> &CsrMatrix {
        &self.levels[0].a
    }

    pub fn operator_complexity(&self) -> f64 {
        operator_complexity(self)
    }

    /// Keeps the first `n` levels; the last kept level is solved directly.
    pub fn truncate(&mut self, n: usize) -> Result<()> {
        if n == 0 || n >= self.levels.len() {
            return Ok(());
        }
        self.levels.truncate(n);
        let last = self.levels.last_mut().expect("n > 0");
        last.p = None;
        last.r = None;
        last.smoother = None;
        self.coarse_factor = CholeskyFactor::factor(&last.a)?;
        Ok(())
    }

    /// `x <- x + B (b - A x)` with one V(1,1) cycle.
    pub fn vcycle(&self, b: &[f64], x: &mut [f64]) {
        self.cycle(0, b, x);
    }

    /// The preconditioner `B r`: one cycle from a zero initial guess.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; r.len()];
        self.cycle(0, r, &mut x);
        x
    }

    fn cycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        let level = &self.levels[l];
        if l + 1 == self.levels.len() {
            self.coarse_factor.solve_into(b, x);
            return;
        }
        let smoother = level
            .smoother
            .as_ref()
            .expect("non-coarsest level has a smoother");
        let p = level
            .p
            .as_ref()
            .expect("non-coarsest level has an interpolation");
        smoother.smooth(&level.a, x, b, Direction::Forward);
        let r = level.a.residual(b, x);
        let rc = p.mul_transpose_vec(&r);
        let mut xc = vec![0.0; rc.len()];
        self.cycle(l + 1, &rc, &mut xc);
        let mut corr = vec![0.0; x.len()];
        p.mul_vec_into(&xc, &mut corr);
        for (xi, ci) in x.iter_mut().zip(&corr) {
            *xi += ci;
        }
        smoother.smooth(&level.a, x, b, Direction::Backward);
    }
}

/// `Σ_l nnz(A_l) / nnz(A_0)`.
pub fn operator_complexity(h: &Hierarchy) -> f64 {
    let total: usize = h.levels.iter().map(|l| l.a.nnz()).sum();
    total as f64 / h.levels[0].a.nnz().max(1) as f64
}

/// Builds the hierarchy for `system`. `Geo` and `Ref` need the nested
/// meshes on whose finest member `system` was assembled.
pub fn build_hierarchy(
    system: &CurlCurlSystem,
    method: Method,
    config: &HierarchyConfig,
    meshes: Option<&NestedMeshes>,
) -> Result<Hierarchy> {
    build_hierarchy_from(
        &system.a,
        &system.gradient,
        system.boundary,
        method,
        config,
        meshes,
    )
}

/// As [`build_hierarchy`] from the operator and gradient directly.
pub fn build_hierarchy_from(
    a0: &CsrMatrix,
    g0: &CsrMatrix,
    boundary: Boundary,
    method: Method,
    config: &HierarchyConfig,
    meshes: Option<&NestedMeshes>,
) -> Result<Hierarchy> {
    if config.max_levels == 0 {
        return Err(Error::InvalidArgument(
            "max_levels must be at least 1".into(),
        ));
    }
    if method.needs_meshes() {
        let m = meshes.ok_or_else(|| {
            Error::InvalidArgument(format!("method {method} needs a nested mesh sequence"))
        })?;
        let n = dof_maps(m.finest(), boundary).dof_edges.len();
        if n != a0.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "finest mesh has {n} DoFs, operator has {}",
                a0.nrows()
            )));
        }
    }
    let mut levels: Vec<Level> = Vec::new();
    let mut a = a0.clone();
    let mut g = g0.clone();
    let mut mesh_idx = meshes.map(|m| m.depth()).unwrap_or(0);
    let mut stalled = false;
    loop {
        if levels.len() + 1 >= config.max_levels || a.nrows() <= config.min_coarse {
            break;
        }
        let step = match method {
            Method::Geo => {
                let m = meshes.expect("checked above");
                if mesh_idx == 0 {
                    break;
                }
                let (coarse, fine) = (&m.meshes()[mesh_idx - 1], &m.meshes()[mesh_idx]);
                let cm = dof_maps(coarse, boundary);
                let fm = dof_maps(fine, boundary);
                let p = geometric_interp(
                    coarse,
                    fine,
                    &m.maps()[mesh_idx - 1],
                    &cm.free_edges,
                    cm.dof_edges.len(),
                    &fm.free_edges,
                    fm.dof_edges.len(),
                )?;
                let gc = gradient_matrix(coarse, &cm)?;
                mesh_idx -= 1;
                (p, None, gc)
            }
            Method::Ref => {
                let m = meshes.expect("checked above");
                if mesh_idx == 0 {
                    break;
                }
                let (coarse, fine) = (&m.meshes()[mesh_idx - 1], &m.meshes()[mesh_idx]);
                let fm = dof_maps(fine, boundary);
                let split = build_refinement_splitting(
                    coarse,
                    fine,
                    &m.maps()[mesh_idx - 1],
                    &fm.free_edges,
                    fm.dof_edges.len(),
                )?;
                mesh_idx -= 1;
                if split.num_coarse() == 0 {
                    stalled = true;
                    break;
                }
                let t = sparse_ideal_interp(
                    &a,
                    &g,
                    &split,
                    CoarseNodes::NonzeroColumns,
                    config.singular,
                )?;
                (t.p, Some(t.r), t.gc)
            }
            Method::Alg => {
                let alg = build_algebraic_splitting(&a, &g, config.theta)?;
                if alg.splitting.num_coarse() == 0 {
                    stalled = true;
                    break;
                }
                let t = sparse_ideal_interp(
                    &a,
                    &g,
                    &alg.splitting,
                    CoarseNodes::Selected(&alg.nodal.coarse),
                    config.singular,
                )?;
                (t.p, Some(t.r), t.gc)
            }
        };
        let (p, r, gc) = step;
        let ac = CsrMatrix::galerkin_product(&p, &a)?;
        let smoother = OssL1::new(&a, &g)?;
        levels.push(Level {
            a,
            g,
            p: Some(p),
            r,
            smoother: Some(smoother),
        });
        a = ac;
        g = gc;
    }
    let coarse_factor = CholeskyFactor::factor(&a)?;
    levels.push(Level {
        a,
        g,
        p: None,
        r: None,
        smoother: None,
    });
    Ok(Hierarchy {
        levels,
        method,
        coarse_factor,
        stalled,
    })
}

/// Convergence record of an iterative solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual `‖b − A x‖ / ‖b‖` after every iteration.
    pub residual_history: Vec<f64>,
    pub initial_residual: f64,
    pub converged: bool,
    /// Stopped by the divergence guard.
    pub diverged: bool,
    pub operator_complexity: f64,
}

/// Consecutive residual increases that abort a stationary iteration.
pub const DIVERGENCE_STEPS: usize = 5;

/// Default iteration limit.
pub const DEFAULT_MAXIT: usize = 500;

fn relative(r: &[f64], bnorm: f64) -> f64 {
    let rn = norm2(r);
    if bnorm > 0.0 {
        rn / bnorm
    } else {
        rn
    }
}

/// Stationary AMG iteration with V(1,1) cycles.
pub fn amg_solve(
    h: &Hierarchy,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let a = h.finest();
    check_shapes(a, b, x0)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let bnorm = norm2(b);
    let mut x = x0.to_vec();
    let r0 = relative(&a.residual(b, &x), bnorm);
    let mut report = SolveReport {
        iterations: 0,
        residual_history: Vec::new(),
        initial_residual: r0,
        converged: r0 <= tol,
        diverged: false,
        operator_complexity: h.operator_complexity(),
    };
    let mut prev = r0;
    let mut growth = 0;
    while !report.converged && report.iterations < maxit {
        h.vcycle(b, &mut x);
        let rel = relative(&a.residual(b, &x), bnorm);
        report.iterations += 1;
        report.residual_history.push(rel);
        report.converged = rel <= tol;
        growth = if rel > prev { growth + 1 } else { 0 };
        prev = rel;
        if growth >= DIVERGENCE_STEPS || !rel.is_finite() {
            report.diverged = true;
            break;
        }
    }
    Ok((x, report))
}

/// Preconditioned conjugate gradients with relative-residual stopping.
pub fn pcg<F>(
    a: &CsrMatrix,
    b: &[f64],
    precond: F,
    x0: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    check_shapes(a, b, x0)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let bnorm = norm2(b);
    let mut x = x0.to_vec();
    let mut r = a.residual(b, &x);
    let r0 = relative(&r, bnorm);
    let mut report = SolveReport {
        iterations: 0,
        residual_history: Vec::new(),
        initial_residual: r0,
        converged: r0 <= tol,
        diverged: false,
        operator_complexity: 1.0,
    };
    if report.converged {
        return Ok((x, report));
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; x.len()];
    while report.iterations < maxit {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Breakdown(format!(
                "pᵀAp = {pap:e} at iteration {}",
                report.iterations
            )));
        }
        let alpha = rz / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        report.iterations += 1;
        let rel = relative(&r, bnorm);
        report.residual_history.push(rel);
        if rel <= tol {
            report.converged = true;
            break;
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        if !(rz_new > 0.0) {
            return Err(Error::Breakdown(format!(
                "rᵀBr = {rz_new:e}: preconditioner not SPD"
            )));
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok((x, report))
}

/// PCG preconditioned by one V-cycle of `h`.
pub fn amg_pcg(
    h: &Hierarchy,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let (x, mut rep) = pcg(h.finest(), b, |r| h.apply(r), x0, tol, maxit)?;
    rep.operator_complexity = h.operator_complexity();
    Ok((x, rep))
}

fn check_shapes(a: &CsrMatrix, b: &[f64], x0: &[f64]) -> Result<()> {
    if a.nrows() != a.ncols() || b.len() != a.nrows() || x0.len() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "A {}x{}, b {}, x0 {}",
            a.nrows(),
            a.ncols(),
            b.len(),
            x0.len()
        )));
    }
    Ok(())
}

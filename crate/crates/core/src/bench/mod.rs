//! Experiment driver: builds the test problems, runs the three coarsening
//! methods as standalone AMG and as PCG preconditioner, and writes result
//! tables; plus the verification sweep and SVG coarsening plots.
//!
//! Every run uses the right-hand side `b = (1, 2, ..., n)` and an initial
//! guess drawn uniformly from `[-1, 1]` with a seeded ChaCha8 generator, so
//! repeated runs with the same configuration produce identical tables.

mod svg;
mod sweep;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{assemble, Boundary, CurlCurlSystem};
use crate::mesh::{
    assign_mu_regions, assign_mu_stripes, checkerboard_boxes, delaunay_mesh, load_mesh,
    uniform_tri_mesh, CoefficientField, Mesh2D, NestedMeshes,
};
use crate::multilevel::{
    amg_pcg, amg_solve, build_hierarchy, HierarchyConfig, Method, DEFAULT_MAXIT,
};
use crate::splitting::DEFAULT_THETA;

pub use svg::{coarsening_svg, dump_coarsening_svg, CoarseningPattern};
pub use sweep::{run_verification, VerifyConfig};

/// Column header of the result tables.
pub const CSV_HEADER: [&str; 11] = [
    "refinement level",
    "size",
    "amg_iter_geo",
    "amg_iter_ref",
    "amg_iter_alg",
    "pcg_iter_geo",
    "pcg_iter_ref",
    "pcg_iter_alg",
    "operator_complexity_geo",
    "operator_complexity_ref",
    "operator_complexity_alg",
];

/// Placeholder for cells without a value.
pub const MISSING: &str = "-";

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "HCURL_AMG_THREADS";

/// Default number of points of the coarsest Delaunay mesh.
pub const DEFAULT_DELAUNAY_POINTS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Structured triangles, `mu = 1`.
    Uniform,
    /// Structured triangles with alternating vertical stripes.
    Jump,
    /// Refined Delaunay mesh with fixed jump regions.
    Delaunay,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::Jump => "jump",
            Family::Delaunay => "delaunay",
        }
    }

    pub fn default_layout(self) -> MuLayout {
        match self {
            Family::Uniform => MuLayout::Constant,
            Family::Jump => MuLayout::Stripes,
            Family::Delaunay => MuLayout::Regions,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(Family::Uniform),
            "jump" | "stripes" => Ok(Family::Jump),
            "delaunay" => Ok(Family::Delaunay),
            other => Err(Error::InvalidArgument(format!("unknown family '{other}'"))),
        }
    }
}

/// Coefficient layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuLayout {
    Constant,
    /// `10` / `0.1` in alternating columns of the finest mesh.
    Stripes,
    /// A 4x4 checkerboard of `0.1` / `10` boxes fixed in space.
    Regions,
}

impl std::str::FromStr for MuLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" => Ok(MuLayout::Constant),
            "stripes" => Ok(MuLayout::Stripes),
            "regions" | "boxes" => Ok(MuLayout::Regions),
            other => Err(Error::InvalidArgument(format!(
                "unknown coefficient layout '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub family: Family,
    /// Number of uniform refinements of the coarsest mesh, one row each.
    pub levels: Vec<u32>,
    pub beta: f64,
    pub tol: f64,
    pub maxit: usize,
    pub max_levels: usize,
    pub min_coarse: usize,
    pub theta: f64,
    pub methods: Vec<Method>,
    /// Seed of the random initial guess.
    pub seed: u64,
    /// Keep only the fine level and one coarse level.
    pub two_grid_only: bool,
    /// Coarsest mesh for the Delaunay family instead of the generator.
    pub mesh_file: Option<PathBuf>,
    /// Overrides the family's coefficient layout.
    pub mu_layout: Option<MuLayout>,
    pub delaunay_points: usize,
    pub mesh_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: Family::Uniform,
            levels: vec![2, 3, 4, 5],
            beta: 0.01,
            tol: 1e-8,
            maxit: DEFAULT_MAXIT,
            max_levels: 20,
            min_coarse: 32,
            theta: DEFAULT_THETA,
            methods: Method::ALL.to_vec(),
            seed: 0,
            two_grid_only: false,
            mesh_file: None,
            mu_layout: None,
            delaunay_points: DEFAULT_DELAUNAY_POINTS,
            mesh_seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance {} must be positive",
                self.tol
            )));
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidArgument("no refinement levels given".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods given".into()));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beta = {} must be >= 0",
                self.beta
            )));
        }
        Ok(())
    }

    pub fn hierarchy_config(&self) -> HierarchyConfig {
        HierarchyConfig {
            max_levels: if self.two_grid_only {
                2
            } else {
                self.max_levels
            },
            min_coarse: self.min_coarse,
            theta: self.theta,
            ..HierarchyConfig::default()
        }
    }
}

/// Nested meshes, coefficients and the assembled system on the finest mesh.
#[derive(Debug, Clone)]
pub struct Problem {
    pub meshes: NestedMeshes,
    pub mu: CoefficientField,
    pub system: CurlCurlSystem,
}

impl Problem {
    pub fn finest(&self) -> &Mesh2D {
        self.meshes.finest()
    }
}

/// Coefficients for `layout` on `mesh`, the `level`-th refinement of the
/// coarsest mesh.
pub fn coefficients(mesh: &Mesh2D, layout: MuLayout, level: u32) -> Result<CoefficientField> {
    match layout {
        MuLayout::Constant => CoefficientField::constant(mesh.num_cells(), 1.0),
        MuLayout::Stripes => Ok(assign_mu_stripes(mesh, level)),
        MuLayout::Regions => assign_mu_regions(mesh, &checkerboard_boxes(4, 0.1, 10.0), 1.0),
    }
}

/// Coarsest mesh of a family.
pub fn coarsest_mesh(config: &ExperimentConfig) -> Result<Mesh2D> {
    match config.family {
        Family::Uniform | Family::Jump => Ok(uniform_tri_mesh(0)),
        Family::Delaunay => match &config.mesh_file {
            Some(path) => Ok(load_mesh(path)?.mesh),
            None => delaunay_mesh(config.delaunay_points, config.mesh_seed),
        },
    }
}

/// The test problem of `config` at refinement `level`, assembled with
/// Dirichlet conditions and shift `config.beta`.
pub fn build_problem(config: &ExperimentConfig, level: u32) -> Result<Problem> {
    let meshes = NestedMeshes::new(coarsest_mesh(config)?, level as usize)?;
    let layout = config.mu_layout.unwrap_or(config.family.default_layout());
    let mu = coefficients(meshes.finest(), layout, level)?;
    let system = assemble(meshes.finest(), &mu, config.beta, Boundary::Dirichlet)?;
    Ok(Problem { meshes, mu, system })
}

/// Outcome of one method on one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    /// `None` when the iteration did not converge.
    pub amg_iter: Option<usize>,
    pub pcg_iter: Option<usize>,
    pub operator_complexity: Option<f64>,
    /// Operator sizes, finest first.
    pub sizes: Vec<usize>,
    pub stalled: bool,
    pub error: Option<String>,
}

impl MethodResult {
    fn failed(msg: String) -> Self {
        Self {
            amg_iter: None,
            pcg_iter: None,
            operator_complexity: None,
            sizes: Vec::new(),
            stalled: false,
            error: Some(msg),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub refinement_level: u32,
    /// Fine DoF count after boundary elimination.
    pub size: usize,
    pub results: BTreeMap<Method, MethodResult>,
}

impl ResultRow {
    pub fn get(&self, m: Method) -> Option<&MethodResult> {
        self.results.get(&m)
    }

    pub fn amg_iter(&self, m: Method) -> Option<usize> {
        self.get(m).and_then(|r| r.amg_iter)
    }

    pub fn pcg_iter(&self, m: Method) -> Option<usize> {
        self.get(m).and_then(|r| r.pcg_iter)
    }

    pub fn operator_complexity(&self, m: Method) -> Option<f64> {
        self.get(m).and_then(|r| r.operator_complexity)
    }
}

/// Right-hand side `(1, 2, ..., n)`.
pub fn ramp_rhs(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64).collect()
}

/// Initial guess uniform in `[-1, 1]`.
pub fn random_guess(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

fn run_method(
    problem: &Problem,
    method: Method,
    config: &ExperimentConfig,
    b: &[f64],
    x0: &[f64],
) -> MethodResult {
    let h = match build_hierarchy(
        &problem.system,
        method,
        &config.hierarchy_config(),
        Some(&problem.meshes),
    ) {
        Ok(h) => h,
        Err(e) => return MethodResult::failed(format!("setup: {e}")),
    };
    let mut out = MethodResult {
        amg_iter: None,
        pcg_iter: None,
        operator_complexity: Some(h.operator_complexity()),
        sizes: h.sizes(),
        stalled: h.stalled,
        error: None,
    };
    match amg_solve(&h, b, x0, config.tol, config.maxit) {
        Ok((_, rep)) if rep.converged => out.amg_iter = Some(rep.iterations),
        Ok((_, rep)) => {
            out.error = Some(format!(
                "amg stopped after {} iterations at {:.2e}{}",
                rep.iterations,
                rep.residual_history
                    .last()
                    .copied()
                    .unwrap_or(rep.initial_residual),
                if rep.diverged { " (diverging)" } else { "" }
            ))
        }
        Err(e) => out.error = Some(format!("amg: {e}")),
    }
    match amg_pcg(&h, b, x0, config.tol, config.maxit) {
        Ok((_, rep)) if rep.converged => out.pcg_iter = Some(rep.iterations),
        Ok((_, rep)) => {
            out.error = Some(format!("pcg stopped after {} iterations", rep.iterations))
        }
        Err(e) => out.error = Some(format!("pcg: {e}")),
    }
    out
}

/// One row per refinement level; failures are recorded per cell.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.levels.len());
    for &level in &config.levels {
        let problem = build_problem(config, level)?;
        let n = problem.system.ndofs();
        let b = ramp_rhs(n);
        let x0 = random_guess(n, config.seed);
        let results: BTreeMap<Method, MethodResult> = config
            .methods
            .par_iter()
            .map(|&m| (m, run_method(&problem, m, config, &b, &x0)))
            .collect();
        rows.push(ResultRow {
            refinement_level: level,
            size: n,
            results,
        });
    }
    Ok(rows)
}

fn cell<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map_or_else(|| MISSING.to_string(), f)
}

/// Writes the result table. Iterations are integers, operator complexities
/// have two decimals, and missing values are [`MISSING`].
pub fn emit_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no result rows to write".into()));
    }
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for row in rows {
        let mut rec = vec![row.refinement_level.to_string(), row.size.to_string()];
        for m in Method::ALL {
            rec.push(cell(row.amg_iter(m), |v| v.to_string()));
        }
        for m in Method::ALL {
            rec.push(cell(row.pcg_iter(m), |v| v.to_string()));
        }
        for m in Method::ALL {
            rec.push(cell(row.operator_complexity(m), |v| format!("{v:.2}")));
        }
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    emit_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn write_csv_file(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    emit_csv(rows, std::io::BufWriter::new(f))
}

/// Caps the global rayon pool at [`THREADS_ENV`] threads when the variable
/// is set. Has no effect once the pool is running.
pub fn init_thread_pool_from_env() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV}={v} is not a thread count")))?;
    // an already initialized pool is not an error worth reporting
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global();
    Ok(())
}

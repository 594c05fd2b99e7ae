//! Numerical checks of the structural identities behind the interpolation:
//! the exact sequence, orthogonality of a splitting, the exterior
//! Schur-complement kernel, the commuting relation, the `O(β)` defect, the
//! energy bound of the sparse against the ideal interpolation, the two-grid
//! constant and the smoother/V-cycle contracts.
//!
//! Every check produces [`CheckReport`]s with `passed == (measured <=
//! threshold)`. Dense computations are limited to [`DENSE_CAP`] unknowns; a
//! check that cannot run is reported as skipped rather than failed.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{psd_pseudo_inverse, NULL_REL_TOL};
use crate::error::{Error, Result};
use crate::fem::{assemble, Boundary, CurlCurlSystem};
use crate::mesh::{CoefficientField, Mesh2D, RefinementMap};
use crate::multilevel::Hierarchy;
use crate::smoothers::{smooth, Direction, OssL1};
use crate::sparse::{dot, CsrMatrix};
use crate::splitting::{build_refinement_splitting, ExteriorPair, Splitting};
use crate::transfer::{
    geometric_interp, ideal_interp_dense, sparse_ideal_interp, CoarseNodes, SingularBlocks,
    DENSE_CAP,
};

/// Default thresholds.
pub mod thresholds {
    pub const EXACT_SEQUENCE: f64 = 1e-12;
    /// Products of `±1/√2` entries are exact up to one rounding.
    pub const ORTHOGONALITY: f64 = 1e-14;
    pub const SCHUR_KERNEL: f64 = 1e-10;
    pub const COMMUTING_RANGE: f64 = 1e-9;
    pub const COMMUTING_KERNEL: f64 = 1e-10;
    /// Allowed distance of the log-log defect slope from 1.
    pub const BETA_SLOPE: f64 = 0.2;
    /// Largest-`β` defect below which the slope is not measurable.
    pub const BETA_DEFECT_FLOOR: f64 = 1e-13;
    /// Allowed relative deviation of the stencil defect from `C β`.
    pub const RECOVERY_RATIO: f64 = 0.25;
    pub const ETA_SLACK: f64 = 1e-8;
    pub const TWO_GRID_SLACK: f64 = 1e-8;
    pub const FIXED_POINT: f64 = 1e-12;
    pub const SYMMETRY: f64 = 1e-10;
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    pub context: String,
    /// Why the check could not run.
    pub skipped: Option<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            passed: measured <= threshold,
            context: String::new(),
            skipped: None,
        }
    }

    pub fn skip(name: impl Into<String>, threshold: f64, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            measured: f64::NAN,
            threshold,
            passed: false,
            context: String::new(),
            skipped: Some(reason.into()),
        }
    }

    /// Appends `ctx` to the context, separated by `"; "`.
    pub fn with_context(mut self, ctx: impl AsRef<str>) -> Self {
        let ctx = ctx.as_ref();
        if !ctx.is_empty() {
            if !self.context.is_empty() {
                self.context.push_str("; ");
            }
            self.context.push_str(ctx);
        }
        self
    }

    /// Ran and did not pass.
    pub fn failed(&self) -> bool {
        self.skipped.is_none() && !self.passed
    }

    fn status(&self) -> &'static str {
        match (&self.skipped, self.passed) {
            (Some(_), _) => "skipped",
            (None, true) => "pass",
            (None, false) => "FAIL",
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.skipped {
            Some(reason) => write!(f, "[skipped] {}: {reason}", self.name)?,
            None => write!(
                f,
                "[{}] {}: {:.3e} <= {:.1e}",
                self.status(),
                self.name,
                self.measured,
                self.threshold
            )?,
        }
        if !self.context.is_empty() {
            write!(f, " ({})", self.context)?;
        }
        Ok(())
    }
}

/// Writes `name,measured,threshold,passed,context` rows; `passed` is
/// `true`, `false` or `skipped`, and a skip reason goes to the context.
pub fn write_csv<W: Write>(reports: &[CheckReport], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["name", "measured", "threshold", "passed", "context"])?;
    for r in reports {
        let passed = match (&r.skipped, r.passed) {
            (Some(_), _) => "skipped".to_string(),
            (None, p) => p.to_string(),
        };
        let context = match &r.skipped {
            Some(reason) if r.context.is_empty() => reason.clone(),
            Some(reason) => format!("{}; {reason}", r.context),
            None => r.context.clone(),
        };
        wr.write_record([
            r.name.clone(),
            format!("{:e}", r.measured),
            format!("{:e}", r.threshold),
            passed,
            context,
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn csv_string(reports: &[CheckReport]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(reports, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn scale_of(a: &CsrMatrix) -> f64 {
    a.max_abs().max(f64::MIN_POSITIVE)
}

fn dense_guard(n: usize) -> Result<()> {
    if n > DENSE_CAP {
        Err(Error::DenseCapExceeded {
            size: n,
            cap: DENSE_CAP,
        })
    } else {
        Ok(())
    }
}

/// Turns a dense-cap or breakdown error into a skipped report.
fn or_skip(name: &str, threshold: f64, r: Result<Vec<CheckReport>>) -> Result<Vec<CheckReport>> {
    match r {
        Err(e @ (Error::DenseCapExceeded { .. } | Error::NotPositiveDefinite { .. })) => {
            Ok(vec![CheckReport::skip(name, threshold, e.to_string())])
        }
        other => other,
    }
}

/// `‖A^s G‖_max / ‖A^s‖_max`.
pub fn exact_sequence_defect(stiffness: &CsrMatrix, g: &CsrMatrix) -> Result<f64> {
    Ok(stiffness.matmat(g)?.max_abs() / scale_of(stiffness))
}

pub fn check_exact_sequence(system: &CurlCurlSystem) -> Result<CheckReport> {
    let d = exact_sequence_defect(&system.stiffness, &system.gradient)?;
    Ok(
        CheckReport::new("exact_sequence", d, thresholds::EXACT_SEQUENCE).with_context(format!(
            "n={} nodes={}",
            system.ndofs(),
            system.gradient.ncols()
        )),
    )
}

fn identity_defect(m: &CsrMatrix) -> Result<f64> {
    Ok(m.add_scaled(1.0, &CsrMatrix::identity(m.nrows()), -1.0)?
        .max_abs())
}

/// `max(‖RS‖, ‖SᵀS − I‖, ‖RRᵀ − I‖)` with `S = [S_I S_E]`.
pub fn check_orthogonality(split: &Splitting) -> Result<CheckReport> {
    let (r, si, se) = split.realize();
    let rs = r.matmat(&si)?.max_abs().max(r.matmat(&se)?.max_abs());
    let (sit, set) = (si.transpose(), se.transpose());
    let sts = identity_defect(&sit.matmat(&si)?)?
        .max(identity_defect(&set.matmat(&se)?)?)
        .max(sit.matmat(&se)?.max_abs());
    let rrt = identity_defect(&r.matmat(&r.transpose())?)?;
    Ok(CheckReport::new(
        "orthogonality",
        rs.max(sts).max(rrt),
        thresholds::ORTHOGONALITY,
    )
    .with_context(format!(
        "pairs={} interior={} |RS|={rs:.1e} |StS-I|={sts:.1e} |RRt-I|={rrt:.1e}",
        split.num_coarse(),
        split.interior_dofs().len()
    )))
}

/// Dense `A_EE − A_EI A_II⁺ A_IE` on the given index sets, with the nullity
/// of `A_II` (zero when the interior block is definite).
pub fn exterior_schur_complement(
    a: &CsrMatrix,
    interior: &[usize],
    exterior: &[usize],
) -> Result<(DMatrix<f64>, usize)> {
    dense_guard(interior.len() + exterior.len())?;
    let aee = a.extract_submatrix(exterior, exterior)?.to_dense();
    let aei = a.extract_submatrix(exterior, interior)?.to_dense();
    let aii = a.extract_submatrix(interior, interior)?.to_dense();
    let (pinv, nullity) = psd_pseudo_inverse(&aii);
    Ok((&aee - &aei * pinv * aei.transpose(), nullity))
}

/// `X_E(A^s) S_E = 0` and `X_E(A^s) G_E = 0`, relative to `‖A^s‖_max`.
/// Singular interior blocks are handled by the pseudo-inverse, which gives
/// the same Schur complement for a semidefinite operator; the nullity is
/// reported in the context.
pub fn check_schur_kernel(
    stiffness: &CsrMatrix,
    g: &CsrMatrix,
    split: &Splitting,
) -> Result<Vec<CheckReport>> {
    let run = || -> Result<Vec<CheckReport>> {
        let ext = split.exterior_dofs();
        let (x, nullity) = exterior_schur_complement(stiffness, split.interior_dofs(), &ext)?;
        let (_, _, se) = split.realize();
        let pairs: Vec<usize> = (0..split.num_coarse()).collect();
        let nodes: Vec<usize> = (0..g.ncols()).collect();
        let se_e = se.extract_submatrix(&ext, &pairs)?.to_dense();
        let g_e = g.extract_submatrix(&ext, &nodes)?.to_dense();
        let s = scale_of(stiffness);
        let ctx = format!("exterior={} interior_nullity={nullity}", ext.len());
        Ok(vec![
            CheckReport::new(
                "schur_kernel_SE",
                (&x * se_e).amax() / s,
                thresholds::SCHUR_KERNEL,
            )
            .with_context(&ctx),
            CheckReport::new(
                "schur_kernel_GE",
                (&x * g_e).amax() / s,
                thresholds::SCHUR_KERNEL,
            )
            .with_context(&ctx),
        ])
    };
    or_skip("schur_kernel", thresholds::SCHUR_KERNEL, run())
}

/// A corrupted splitting with a second exterior pair through the middle
/// node of an existing pair. The middle node is located as the gradient
/// column shared by the pair's two DoFs and stored in all three node fields
/// of the new pair. `None` if no such node has three interior edges left.
pub fn double_path_splitting(split: &Splitting, g: &CsrMatrix) -> Option<Splitting> {
    let gt = g.transpose();
    let mut is_interior = vec![false; split.n()];
    for &d in split.interior_dofs() {
        is_interior[d] = true;
    }
    // k must keep an interior edge after the corruption: when the new pair
    // swallows the last interior edges at k, both paths together still
    // carry the whole gradient of k and nothing is broken
    for p in split.pairs() {
        let (c1, _) = g.row(p.dof1);
        let (c2, _) = g.row(p.dof2);
        let Some(&k) = c1.iter().find(|c| c2.contains(c)) else {
            continue;
        };
        let spare: Vec<usize> = gt
            .row(k)
            .0
            .iter()
            .copied()
            .filter(|&e| is_interior[e])
            .collect();
        if spare.len() < 3 {
            continue;
        }
        let (e1, e2) = (spare[0], spare[1]);
        let extra = ExteriorPair {
            dof1: e1,
            dof2: e2,
            sign1: g.get(e1, k).signum(),
            sign2: -g.get(e2, k).signum(),
            tail: k,
            mid: k,
            head: k,
        };
        let mut pairs = split.pairs().to_vec();
        pairs.push(extra);
        let interior = split
            .interior_dofs()
            .iter()
            .copied()
            .filter(|&d| d != e1 && d != e2)
            .collect();
        return Splitting::new(split.n(), pairs, interior).ok();
    }
    None
}

/// Largest relative least-squares residual `min_y ‖G y − c‖ / ‖c‖` over
/// the nonzero columns `c` of `cols`.
pub fn range_residual(g: &CsrMatrix, cols: &CsrMatrix) -> Result<f64> {
    dense_guard(g.ncols())?;
    let gd = g.to_dense();
    let (pinv, _) = psd_pseudo_inverse(&(gd.transpose() * &gd));
    let c = cols.to_dense();
    let y = pinv * (gd.transpose() * &c);
    let res = &gd * y - &c;
    let mut worst = 0.0f64;
    for j in 0..c.ncols() {
        let cn = c.column(j).norm();
        if cn > 0.0 {
            worst = worst.max(res.column(j).norm() / cn);
        }
    }
    Ok(worst)
}

/// `P G_c ⊂ range(G)` (least-squares residual) and `A^s P G_c = 0`
/// (relative to `‖A^s‖_max`).
pub fn check_commuting(
    stiffness: &CsrMatrix,
    g: &CsrMatrix,
    p: &CsrMatrix,
    gc: &CsrMatrix,
) -> Result<Vec<CheckReport>> {
    let pg = p.matmat(gc)?;
    let kernel = stiffness.matmat(&pg)?.max_abs() / scale_of(stiffness);
    let ctx = format!("coarse_nodes={}", gc.ncols());
    let mut out = or_skip(
        "commuting_range",
        thresholds::COMMUTING_RANGE,
        range_residual(g, &pg).map(|r| {
            vec![
                CheckReport::new("commuting_range", r, thresholds::COMMUTING_RANGE)
                    .with_context(&ctx),
            ]
        }),
    )?;
    out.push(
        CheckReport::new("commuting_kernel", kernel, thresholds::COMMUTING_KERNEL)
            .with_context(&ctx),
    );
    Ok(out)
}

/// `‖A^s P_app(β) G_c‖_max` for each `β`, keeping `split` fixed.
pub fn beta_defects(
    system: &CurlCurlSystem,
    split: &Splitting,
    nodes: CoarseNodes<'_>,
    betas: &[f64],
    singular: SingularBlocks,
) -> Result<Vec<f64>> {
    betas
        .iter()
        .map(|&beta| {
            let a = system.stiffness.add_scaled(1.0, &system.mass, beta)?;
            let t = sparse_ideal_interp(&a, &system.gradient, split, nodes, singular)?;
            Ok(system.stiffness.matmat(&t.p.matmat(&t.gc)?)?.max_abs())
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Linear scaling of the commuting defect with `β`: measured is
/// `|slope − 1|`. `betas` must hold at least three strictly decreasing
/// positive values.
pub fn check_beta_scaling(
    system: &CurlCurlSystem,
    split: &Splitting,
    nodes: CoarseNodes<'_>,
    betas: &[f64],
    singular: SingularBlocks,
) -> Result<CheckReport> {
    if betas.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "slope fit needs at least 3 values of beta, got {}",
            betas.len()
        )));
    }
    if betas.iter().any(|&b| !(b > 0.0)) || betas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "betas must be positive and strictly decreasing".into(),
        ));
    }
    let d = beta_defects(system, split, nodes, betas, singular)?;
    let listed: Vec<String> = d.iter().map(|v| format!("{v:.2e}")).collect();
    let ctx = format!("defects=[{}]", listed.join(" "));
    if d[0] < thresholds::BETA_DEFECT_FLOOR {
        return Ok(
            CheckReport::new("beta_scaling", 0.0, thresholds::BETA_SLOPE)
                .with_context(ctx)
                .with_context("defect below floor: scaling not measurable"),
        );
    }
    let slope = loglog_slope(betas, &d);
    let measured = if slope.is_finite() {
        (slope - 1.0).abs()
    } else {
        f64::INFINITY
    };
    Ok(
        CheckReport::new("beta_scaling", measured, thresholds::BETA_SLOPE)
            .with_context(format!("slope={slope:.4}"))
            .with_context(ctx),
    )
}

/// `‖P_ref(β) − √2 P_geo‖_max` for each `β` on one refinement step. The
/// factor `√2` undoes the `1/√2` normalization of the coarse variables;
/// columns of both operators follow the coarse edge order.
pub fn geometric_recovery_defects(
    coarse: &Mesh2D,
    fine: &Mesh2D,
    map: &RefinementMap,
    mu: &CoefficientField,
    boundary: Boundary,
    betas: &[f64],
) -> Result<Vec<f64>> {
    let sys = assemble(fine, mu, 0.0, boundary)?;
    let split = build_refinement_splitting(coarse, fine, map, &sys.free_edges, sys.ndofs())?;
    let cmaps = crate::fem::dof_maps(coarse, boundary);
    let geo = geometric_interp(
        coarse,
        fine,
        map,
        &cmaps.free_edges,
        cmaps.dof_edges.len(),
        &sys.free_edges,
        sys.ndofs(),
    )?;
    if geo.ncols() != split.num_coarse() {
        return Err(Error::DimensionMismatch(format!(
            "{} geometric coarse DoFs vs {} pairs",
            geo.ncols(),
            split.num_coarse()
        )));
    }
    betas
        .iter()
        .map(|&beta| {
            let a = sys.stiffness.add_scaled(1.0, &sys.mass, beta)?;
            let t = sparse_ideal_interp(
                &a,
                &sys.gradient,
                &split,
                CoarseNodes::NonzeroColumns,
                SingularBlocks::Fail,
            )?;
            Ok(t.p
                .add_scaled(1.0, &geo, -std::f64::consts::SQRT_2)?
                .max_abs())
        })
        .collect()
}

/// The refinement-based interpolation reproduces the geometric stencils up
/// to `O(β)`: with `C` fitted at the first `β`, measured is the largest
/// `|d(β) / (C β) − 1|` over the remaining values.
pub fn check_geometric_recovery(
    coarse: &Mesh2D,
    fine: &Mesh2D,
    map: &RefinementMap,
    mu: &CoefficientField,
    boundary: Boundary,
    betas: &[f64],
) -> Result<CheckReport> {
    if betas.len() < 2 || betas.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::InvalidArgument(
            "need at least two positive values of beta".into(),
        ));
    }
    let d = geometric_recovery_defects(coarse, fine, map, mu, boundary, betas)?;
    let listed: Vec<String> = d.iter().map(|v| format!("{v:.3e}")).collect();
    let ctx = format!("defects=[{}]", listed.join(" "));
    if d[0] < thresholds::BETA_DEFECT_FLOOR {
        return Ok(
            CheckReport::new("geometric_recovery", 0.0, thresholds::RECOVERY_RATIO)
                .with_context(ctx)
                .with_context("stencils agree to rounding"),
        );
    }
    let c = d[0] / betas[0];
    let worst = betas[1..]
        .iter()
        .zip(&d[1..])
        .fold(0.0f64, |m, (&b, &v)| m.max((v / (c * b) - 1.0).abs()));
    Ok(
        CheckReport::new("geometric_recovery", worst, thresholds::RECOVERY_RATIO)
            .with_context(format!("C={c:.4}"))
            .with_context(ctx),
    )
}

/// Eigen-decomposition of a symmetric positive semidefinite matrix split
/// into its positive part and its numerical kernel.
struct SemiNorm {
    /// Positive eigenvectors scaled by `λ^{1/2}` (rows: `Λ^{1/2} Vᵀ`).
    half: DMatrix<f64>,
    /// Positive eigenvectors scaled by `λ^{-1/2}`.
    inv_half: DMatrix<f64>,
    kernel: DMatrix<f64>,
    lmax: f64,
}

impl SemiNorm {
    fn new(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let eig = SymmetricEigen::new((a + a.transpose()) * 0.5);
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
        let cut = NULL_REL_TOL * lmax.max(f64::MIN_POSITIVE);
        let pos: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > cut).collect();
        let ker: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] <= cut).collect();
        let v = &eig.eigenvectors;
        let mut half = DMatrix::zeros(pos.len(), n);
        let mut inv_half = DMatrix::zeros(n, pos.len());
        for (c, &k) in pos.iter().enumerate() {
            let s = eig.eigenvalues[k].sqrt();
            for i in 0..n {
                half[(c, i)] = s * v[(i, k)];
                inv_half[(i, c)] = v[(i, k)] / s;
            }
        }
        let mut kernel = DMatrix::zeros(n, ker.len());
        for (c, &k) in ker.iter().enumerate() {
            kernel.set_column(c, &v.column(k));
        }
        Self {
            half,
            inv_half,
            kernel,
            lmax,
        }
    }

    /// `sup ‖Q e‖²_A / ‖e‖²_A` over `e` with a nonzero positive part.
    fn operator_norm_sq(&self, q: &DMatrix<f64>) -> f64 {
        let m = &self.half * q * &self.inv_half;
        let s = m.singular_values();
        let top = s.iter().fold(0.0f64, |a, &b| a.max(b));
        top * top
    }

    /// `max ‖Q e₀‖_A` over unit kernel vectors, relative to `√λ_max`.
    fn kernel_leak(&self, q: &DMatrix<f64>) -> f64 {
        if self.kernel.ncols() == 0 {
            return 0.0;
        }
        let m = &self.half * q * &self.kernel;
        let top = m.singular_values().iter().fold(0.0f64, |a, &b| a.max(b));
        top / self.lmax.sqrt().max(f64::MIN_POSITIVE)
    }
}

/// Energy-norm constants of `Q_⋆ = P_⋆ R` and `Q_app = P_app R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyConstants {
    pub eta_star: f64,
    pub eta_app: f64,
    /// Energy of `Q_app` applied to unit kernel vectors (relative).
    pub kernel_leak: f64,
}

/// `S = [S_I S_E]` as one matrix.
pub fn full_fine_basis(split: &Splitting) -> Result<CsrMatrix> {
    let (_, si, se) = split.realize();
    let off = si.ncols();
    let mut t: Vec<(usize, usize, f64)> = si.iter().collect();
    t.extend(se.iter().map(|(i, j, v)| (i, j + off, v)));
    CsrMatrix::from_triplets(split.n(), off + se.ncols(), &t)
}

/// Exact suprema of the energy ratios, computed on the positive
/// eigenspace of `A^s` (kernel components carry no energy on either side
/// as long as `Q` maps the kernel into itself; the leak is reported).
pub fn energy_constants(
    stiffness: &CsrMatrix,
    g: &CsrMatrix,
    split: &Splitting,
    singular: SingularBlocks,
) -> Result<EnergyConstants> {
    dense_guard(stiffness.nrows())?;
    let (r, _, _) = split.realize();
    let s = full_fine_basis(split)?;
    let p_star = ideal_interp_dense(stiffness, &r, &s)?;
    let t = sparse_ideal_interp(stiffness, g, split, CoarseNodes::NonzeroColumns, singular)?;
    let rd = r.to_dense();
    let q_star = p_star * &rd;
    let q_app = t.p.to_dense() * &rd;
    let sn = SemiNorm::new(&stiffness.to_dense());
    Ok(EnergyConstants {
        eta_star: sn.operator_norm_sq(&q_star),
        eta_app: sn.operator_norm_sq(&q_app),
        kernel_leak: sn.kernel_leak(&q_app),
    })
}

/// Largest of `samples` random Rayleigh quotients `‖Q e‖²_A / ‖e‖²_A`, with
/// the kernel of `A` projected out of each sample. A lower bound for the
/// supremum.
pub fn sampled_energy_ratio(a: &DMatrix<f64>, q: &DMatrix<f64>, samples: usize, seed: u64) -> f64 {
    let sn = SemiNorm::new(a);
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..samples {
        let mut e = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let k = &sn.kernel;
        e -= k * (k.transpose() * &e);
        let den = (a * &e).dot(&e);
        if den <= 0.0 {
            continue;
        }
        let qe = q * &e;
        best = best.max((a * &qe).dot(&qe) / den);
    }
    best
}

/// `√η_app ≤ 1 + √η_⋆` (measured: the left minus the right side) and
/// `η_⋆ ≥ 1` (measured: `1 − η_⋆`).
pub fn check_eta_inequality(
    stiffness: &CsrMatrix,
    g: &CsrMatrix,
    split: &Splitting,
    singular: SingularBlocks,
) -> Result<Vec<CheckReport>> {
    let run = || -> Result<Vec<CheckReport>> {
        let c = energy_constants(stiffness, g, split, singular)?;
        let ctx = format!(
            "eta_star={:.4} eta_app={:.4} kernel_leak={:.1e}",
            c.eta_star, c.eta_app, c.kernel_leak
        );
        Ok(vec![
            CheckReport::new(
                "eta_inequality",
                c.eta_app.sqrt() - 1.0 - c.eta_star.sqrt(),
                thresholds::ETA_SLACK,
            )
            .with_context(&ctx),
            CheckReport::new("eta_star_lower", 1.0 - c.eta_star, thresholds::ETA_SLACK)
                .with_context(&ctx),
        ])
    };
    or_skip("eta_inequality", thresholds::ETA_SLACK, run())
}

/// Two-grid quantities for an explicit smoother matrix `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoGridBound {
    /// `sup ‖(I − PR) e‖²_M̃ / ‖e‖²_A` with `M̃ = M (M + Mᵀ − A)⁻¹ Mᵀ`;
    /// 1 by convention when `PR = I`.
    pub k: f64,
    /// `‖(I − M⁻¹A)(I − P (PᵀAP)⁻¹ PᵀA)‖²_A`.
    pub etg_norm_sq: f64,
    /// `1 − 1/K`.
    pub bound: f64,
}

fn dense_cholesky(m: DMatrix<f64>, what: &str) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    nalgebra::Cholesky::new(m)
        .ok_or_else(|| Error::InvalidArgument(format!("{what} is not positive definite")))
}

/// Dense computation of `K(PR)` and the exact two-grid energy norm.
pub fn compute_two_grid_k(
    a: &CsrMatrix,
    p: &CsrMatrix,
    r: &CsrMatrix,
    m: &CsrMatrix,
) -> Result<TwoGridBound> {
    let n = a.nrows();
    dense_guard(n)?;
    if p.nrows() != n || r.ncols() != n || m.nrows() != n || p.ncols() != r.nrows() {
        return Err(Error::DimensionMismatch("two-grid operator shapes".into()));
    }
    let ad = a.to_dense();
    let md = m.to_dense();
    let pd = p.to_dense();
    let id = DMatrix::<f64>::identity(n, n);
    let la = dense_cholesky(ad.clone(), "A")?.l();
    let sym = &md + md.transpose() - &ad;
    let sym_chol = dense_cholesky(sym, "M + Mᵀ − A (the smoother does not converge)")?;
    let mtilde = &md * sym_chol.solve(&md.transpose());
    let pi = &id - &pd * r.to_dense();

    let b = pi.transpose() * &mtilde * &pi;
    let k = if b.amax() <= 1e-14 * mtilde.amax().max(f64::MIN_POSITIVE) {
        1.0
    } else {
        let x = la
            .solve_lower_triangular(&b)
            .expect("Cholesky factor is nonsingular");
        let c = la
            .solve_lower_triangular(&x.transpose())
            .expect("Cholesky factor is nonsingular");
        let eig = SymmetricEigen::new((&c + c.transpose()) * 0.5);
        eig.eigenvalues
            .iter()
            .fold(f64::NEG_INFINITY, |a, &v| a.max(v))
    };

    let pap = pd.transpose() * &ad * &pd;
    let coarse = dense_cholesky(pap, "PᵀAP")?;
    let cgc = &id - &pd * coarse.solve(&(pd.transpose() * &ad));
    let minv_a = md
        .clone()
        .lu()
        .solve(&ad)
        .ok_or_else(|| Error::InvalidArgument("M is singular".into()))?;
    let e = (&id - minv_a) * cgc;
    let linv = la
        .solve_lower_triangular(&id)
        .expect("Cholesky factor is nonsingular");
    let scaled = la.transpose() * e * linv.transpose();
    let top = scaled
        .singular_values()
        .iter()
        .fold(0.0f64, |a, &b| a.max(b));
    Ok(TwoGridBound {
        k,
        etg_norm_sq: top * top,
        bound: 1.0 - 1.0 / k,
    })
}

/// `‖E_TG‖²_A ≤ 1 − 1/K` (measured: left minus right) and `K ≥ 1`
/// (measured: `1 − K`).
pub fn check_two_grid_bound(
    a: &CsrMatrix,
    p: &CsrMatrix,
    r: &CsrMatrix,
    m: &CsrMatrix,
) -> Result<Vec<CheckReport>> {
    let run = || -> Result<Vec<CheckReport>> {
        let t = compute_two_grid_k(a, p, r, m)?;
        let ctx = format!(
            "K={:.4} |E_TG|^2={:.4} 1-1/K={:.4}",
            t.k, t.etg_norm_sq, t.bound
        );
        Ok(vec![
            CheckReport::new(
                "two_grid_bound",
                t.etg_norm_sq - t.bound,
                thresholds::TWO_GRID_SLACK,
            )
            .with_context(&ctx),
            CheckReport::new("two_grid_k_lower", 1.0 - t.k, thresholds::TWO_GRID_SLACK)
                .with_context(&ctx),
        ])
    };
    or_skip("two_grid_bound", thresholds::TWO_GRID_SLACK, run())
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn energy(a: &CsrMatrix, x: &[f64]) -> f64 {
    dot(x, &a.spmv(x).expect("square operator")).max(0.0).sqrt()
}

/// The smoother leaves the exact solution unchanged.
pub fn check_smoother_fixed_point(a: &CsrMatrix, g: &CsrMatrix, seed: u64) -> Result<CheckReport> {
    let s = OssL1::new(a, g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = random_vec(&mut rng, a.nrows());
    let b = a.spmv(&xs)?;
    let mut worst = 0.0f64;
    let scale = xs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for dir in [
        Direction::Forward,
        Direction::Backward,
        Direction::Symmetric,
    ] {
        let mut x = xs.clone();
        smooth(a, &s.patches, &s.jacobi, &mut x, &b, dir);
        let d = x
            .iter()
            .zip(&xs)
            .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        worst = worst.max(d / scale);
    }
    Ok(
        CheckReport::new("smoother_fixed_point", worst, thresholds::FIXED_POINT)
            .with_context(format!("n={}", a.nrows())),
    )
}

/// Largest ratio `‖E e‖_A / ‖e‖_A` over random errors and all three
/// smoother forms; must not exceed 1.
pub fn check_smoother_contraction(
    a: &CsrMatrix,
    g: &CsrMatrix,
    seed: u64,
    trials: usize,
) -> Result<CheckReport> {
    let s = OssL1::new(a, g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = vec![0.0; a.nrows()];
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let e = random_vec(&mut rng, a.nrows());
        let e0 = energy(a, &e);
        for dir in [
            Direction::Forward,
            Direction::Backward,
            Direction::Symmetric,
        ] {
            let mut x = e.clone();
            smooth(a, &s.patches, &s.jacobi, &mut x, &zero, dir);
            worst = worst.max(energy(a, &x) / e0);
        }
    }
    Ok(CheckReport::new("smoother_contraction", worst, 1.0)
        .with_context(format!("n={} trials={trials}", a.nrows())))
}

/// `⟨E e₁, e₂⟩_A = ⟨e₁, E e₂⟩_A` for the symmetric smoother form.
pub fn check_smoother_symmetry(
    a: &CsrMatrix,
    g: &CsrMatrix,
    seed: u64,
    trials: usize,
) -> Result<CheckReport> {
    let s = OssL1::new(a, g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = vec![0.0; a.nrows()];
    let prop = |e: &[f64]| {
        let mut x = e.to_vec();
        smooth(
            a,
            &s.patches,
            &s.jacobi,
            &mut x,
            &zero,
            Direction::Symmetric,
        );
        x
    };
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let e1 = random_vec(&mut rng, a.nrows());
        let e2 = random_vec(&mut rng, a.nrows());
        let (f1, f2) = (prop(&e1), prop(&e2));
        let l = dot(&a.spmv(&f1)?, &e2);
        let r = dot(&a.spmv(&e1)?, &f2);
        let scale = energy(a, &e1) * energy(a, &e2);
        worst = worst.max((l - r).abs() / scale);
    }
    Ok(
        CheckReport::new("smoother_symmetry", worst, thresholds::SYMMETRY)
            .with_context(format!("n={}", a.nrows())),
    )
}

/// Symmetry `⟨B r₁, r₂⟩ = ⟨r₁, B r₂⟩` and positivity `⟨B r, r⟩ > 0` of the
/// V-cycle preconditioner on random vectors. Positivity is measured as
/// `−min ⟨Br,r⟩/‖r‖²` relative to the largest such quotient.
pub fn check_vcycle_spd(h: &Hierarchy, seed: u64, samples: usize) -> Result<Vec<CheckReport>> {
    let n = h.finest().nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut asym = 0.0f64;
    let (mut qmin, mut qmax) = (f64::INFINITY, 0.0f64);
    for _ in 0..samples {
        let r1 = random_vec(&mut rng, n);
        let r2 = random_vec(&mut rng, n);
        let (b1, b2) = (h.apply(&r1), h.apply(&r2));
        let (q1, q2) = (dot(&b1, &r1), dot(&b2, &r2));
        let scale = (q1.abs() * q2.abs()).sqrt().max(f64::MIN_POSITIVE);
        asym = asym.max((dot(&b1, &r2) - dot(&r1, &b2)).abs() / scale);
        for (q, r) in [(q1, &r1), (q2, &r2)] {
            let rq = q / dot(r, r);
            qmin = qmin.min(rq);
            qmax = qmax.max(rq);
        }
    }
    let ctx = format!(
        "method={} levels={} samples={samples}",
        h.method(),
        h.num_levels()
    );
    Ok(vec![
        CheckReport::new("vcycle_symmetry", asym, thresholds::SYMMETRY).with_context(&ctx),
        CheckReport::new(
            "vcycle_positivity",
            -qmin / qmax.max(f64::MIN_POSITIVE),
            0.0,
        )
        .with_context(format!("min Rayleigh={qmin:.3e}"))
        .with_context(&ctx),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{refine, uniform_quad_mesh, uniform_tri_mesh};
    use crate::splitting::build_refinement_splitting;

    fn quad_l1(boundary: Boundary, beta: f64) -> (CurlCurlSystem, Splitting) {
        let coarse = uniform_quad_mesh(0);
        let (fine, map) = refine(&coarse).unwrap();
        let mu = CoefficientField::constant(fine.num_cells(), 1.0).unwrap();
        let sys = assemble(&fine, &mu, beta, boundary).unwrap();
        let split =
            build_refinement_splitting(&coarse, &fine, &map, &sys.free_edges, sys.ndofs()).unwrap();
        (sys, split)
    }

    #[test]
    fn report_invariant_and_display() {
        let r = CheckReport::new("x", 1.0, 2.0)
            .with_context("a")
            .with_context("b");
        assert!(r.passed && !r.failed());
        assert_eq!(r.context, "a; b");
        assert!(!CheckReport::new("x", f64::NAN, 2.0).passed);
        let s = CheckReport::skip("y", 1.0, "too big");
        assert!(!s.failed());
        assert!(s.to_string().contains("skipped"));
        let csv = csv_string(&[r, s]).unwrap();
        assert!(csv.starts_with("name,measured,threshold,passed,context\n"));
        assert!(csv.contains(",skipped,too big"));
    }

    #[test]
    fn exact_sequence_negative_control() {
        let mesh = uniform_tri_mesh(2);
        let mu = CoefficientField::constant(mesh.num_cells(), 1.0).unwrap();
        let mut sys = assemble(&mesh, &mu, 0.0, Boundary::Dirichlet).unwrap();
        assert!(check_exact_sequence(&sys).unwrap().passed);
        let (i, j, v) = sys.gradient.iter().next().unwrap();
        let flip = CsrMatrix::from_triplets(
            sys.gradient.nrows(),
            sys.gradient.ncols(),
            &[(i, j, -2.0 * v)],
        )
        .unwrap();
        sys.gradient = sys.gradient.add_scaled(1.0, &flip, 1.0).unwrap();
        assert!(!check_exact_sequence(&sys).unwrap().passed);
    }

    #[test]
    fn quad_refinement_splitting_checks() {
        let (sys, split) = quad_l1(Boundary::Natural, 0.0);
        assert_eq!((split.num_coarse(), split.interior_dofs().len()), (4, 4));
        assert!(check_orthogonality(&split).unwrap().passed);
        for r in check_schur_kernel(&sys.stiffness, &sys.gradient, &split).unwrap() {
            assert!(r.passed, "{r}");
        }
        let t = sparse_ideal_interp(
            &sys.stiffness,
            &sys.gradient,
            &split,
            CoarseNodes::NonzeroColumns,
            SingularBlocks::PseudoInverse,
        )
        .unwrap();
        for r in check_commuting(&sys.stiffness, &sys.gradient, &t.p, &t.gc).unwrap() {
            assert!(r.passed, "{r}");
        }
        for r in check_eta_inequality(
            &sys.stiffness,
            &sys.gradient,
            &split,
            SingularBlocks::PseudoInverse,
        )
        .unwrap()
        {
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn double_path_breaks_schur_kernel() {
        let coarse = uniform_tri_mesh(1);
        let (fine, map) = refine(&coarse).unwrap();
        let mu = CoefficientField::constant(fine.num_cells(), 1.0).unwrap();
        let sys = assemble(&fine, &mu, 0.0, Boundary::Dirichlet).unwrap();
        let split =
            build_refinement_splitting(&coarse, &fine, &map, &sys.free_edges, sys.ndofs()).unwrap();
        let bad =
            double_path_splitting(&split, &sys.gradient).expect("a midpoint with spare edges");
        assert!(check_orthogonality(&bad).unwrap().passed);
        let reps = check_schur_kernel(&sys.stiffness, &sys.gradient, &bad).unwrap();
        assert!(reps[0].failed(), "{}", reps[0]);
        // the gradient part does not depend on the pairing
        assert!(reps[1].passed);
    }

    #[test]
    fn quad_stencils_recovered() {
        let coarse = uniform_quad_mesh(0);
        let (fine, map) = refine(&coarse).unwrap();
        let mu = CoefficientField::constant(fine.num_cells(), 1.0).unwrap();
        let r = check_geometric_recovery(
            &coarse,
            &fine,
            &map,
            &mu,
            Boundary::Natural,
            &[1e-2, 1e-3, 1e-4],
        )
        .unwrap();
        assert!(r.passed, "{r}");
    }

    #[test]
    fn beta_list_too_short() {
        let (sys, split) = quad_l1(Boundary::Natural, 0.0);
        let e = check_beta_scaling(
            &sys,
            &split,
            CoarseNodes::NonzeroColumns,
            &[0.1],
            SingularBlocks::PseudoInverse,
        );
        assert!(matches!(e, Err(Error::InvalidArgument(_))));
        let e = check_beta_scaling(
            &sys,
            &split,
            CoarseNodes::NonzeroColumns,
            &[0.1, 0.2, 0.01],
            SingularBlocks::PseudoInverse,
        );
        assert!(e.is_err());
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let x = [1e-1, 1e-2, 1e-3];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((loglog_slope(&x, &y) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn identity_q_has_unit_eta() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let sn = SemiNorm::new(&a);
        let q = DMatrix::identity(3, 3);
        assert!((sn.operator_norm_sq(&q) - 1.0).abs() < 1e-12);
        assert!(sampled_energy_ratio(&a, &q, 20, 1) <= 1.0 + 1e-12);
    }

    #[test]
    fn perfect_interpolation_has_k_one() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)],
        )
        .unwrap();
        let i = CsrMatrix::identity(2);
        let m = crate::smoothers::l1_jacobi_matrix(&a);
        let t = compute_two_grid_k(&a, &i, &i, &m).unwrap();
        assert_eq!(t.k, 1.0);
        assert!(t.etg_norm_sq < 1e-24);
    }
}

//! The verification sweep: every structural check on a fixed set of small
//! problems (structured triangles and quadrilaterals, stripes, and a
//! refined Delaunay mesh with jump regions).

use std::path::PathBuf;

use crate::error::Result;
use crate::fem::{assemble, dof_maps, gradient_matrix, Boundary};
use crate::mesh::{uniform_quad_mesh, uniform_tri_mesh, CoefficientField, Mesh2D, NestedMeshes};
use crate::multilevel::{build_hierarchy, HierarchyConfig, Method};
use crate::smoothers::l1_jacobi_matrix;
use crate::splitting::{build_algebraic_splitting, build_refinement_splitting, DEFAULT_THETA};
use crate::transfer::{geometric_interp, sparse_ideal_interp, CoarseNodes, SingularBlocks};
use crate::verify::{
    check_beta_scaling, check_commuting, check_eta_inequality, check_exact_sequence,
    check_geometric_recovery, check_orthogonality, check_schur_kernel, check_smoother_contraction,
    check_smoother_fixed_point, check_smoother_symmetry, check_two_grid_bound, check_vcycle_spd,
    double_path_splitting, thresholds, CheckReport,
};

use super::{coefficients, MuLayout, DEFAULT_DELAUNAY_POINTS};

/// Shift of the positive definite systems in the sweep.
pub const SWEEP_BETA: f64 = 0.01;

/// Shifts of the defect-scaling check.
pub const SCALING_BETAS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Shifts of the stencil-recovery check; the first one fits the constant.
pub const RECOVERY_BETAS: [f64; 3] = [1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random samples for the smoother and V-cycle checks.
    pub samples: usize,
    pub theta: f64,
    /// Replace every splitting by a corrupted one with two paths through
    /// one node (a negative control for the whole sweep).
    pub inject_double_path: bool,
    pub delaunay_points: usize,
    pub mesh_seed: u64,
    pub mesh_file: Option<PathBuf>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 20,
            theta: DEFAULT_THETA,
            inject_double_path: false,
            delaunay_points: DEFAULT_DELAUNAY_POINTS,
            mesh_seed: 1,
            mesh_file: None,
        }
    }
}

struct Case {
    label: String,
    meshes: NestedMeshes,
    layout: MuLayout,
    boundary: Boundary,
    beta_scaling: bool,
    recovery: bool,
    two_grid: bool,
}

fn tag(mut r: CheckReport, label: &str) -> CheckReport {
    r.context = if r.context.is_empty() {
        label.to_string()
    } else {
        format!("{label}; {}", r.context)
    };
    r
}

fn cases(config: &VerifyConfig) -> Result<Vec<Case>> {
    let nested = |m: Mesh2D, l: usize| NestedMeshes::new(m, l);
    let mut out = Vec::new();
    for l in 1..=3usize {
        out.push(Case {
            label: format!("tri L={l}"),
            meshes: nested(uniform_tri_mesh(0), l)?,
            layout: MuLayout::Constant,
            boundary: Boundary::Dirichlet,
            beta_scaling: false,
            recovery: l == 2,
            two_grid: l == 2,
        });
    }
    // with tangential Dirichlet data the one-cell quad keeps no coarse edge
    for l in 1..=2usize {
        out.push(Case {
            label: format!("quad L={l}"),
            meshes: nested(uniform_quad_mesh(0), l)?,
            layout: MuLayout::Constant,
            boundary: Boundary::Natural,
            beta_scaling: false,
            recovery: l == 1,
            two_grid: false,
        });
    }
    out.push(Case {
        label: "stripes L=3".into(),
        meshes: nested(uniform_tri_mesh(0), 3)?,
        layout: MuLayout::Stripes,
        boundary: Boundary::Dirichlet,
        beta_scaling: true,
        recovery: false,
        two_grid: false,
    });
    let coarsest = match &config.mesh_file {
        Some(p) => crate::mesh::load_mesh(p)?.mesh,
        None => crate::mesh::delaunay_mesh(config.delaunay_points, config.mesh_seed)?,
    };
    out.push(Case {
        label: "delaunay L=1".into(),
        meshes: nested(coarsest, 1)?,
        layout: MuLayout::Regions,
        boundary: Boundary::Dirichlet,
        beta_scaling: false,
        recovery: false,
        two_grid: false,
    });
    Ok(out)
}

fn verify_case(case: &Case, config: &VerifyConfig) -> Result<Vec<CheckReport>> {
    let depth = case.meshes.depth();
    let (coarse, fine) = (&case.meshes.meshes()[depth - 1], case.meshes.finest());
    let map = &case.meshes.maps()[depth - 1];
    let mu: CoefficientField = coefficients(fine, case.layout, depth as u32)?;
    let s0 = assemble(fine, &mu, 0.0, case.boundary)?;
    let s1 = s0.with_beta(SWEEP_BETA)?;
    let (as0, g) = (&s0.stiffness, &s0.gradient);
    let mut out = vec![check_exact_sequence(&s0)?];

    let ref_split = build_refinement_splitting(coarse, fine, map, &s0.free_edges, s0.ndofs())?;
    // at beta = 0 the nodal dual degenerates; the algebraic splitting is
    // built from the shifted operator and then applied to the stiffness
    let alg = build_algebraic_splitting(&s1.a, g, config.theta)?;
    let modes = [
        ("ref", ref_split.clone(), CoarseNodes::NonzeroColumns),
        (
            "alg",
            alg.splitting.clone(),
            CoarseNodes::Selected(&alg.nodal.coarse),
        ),
    ];
    for (kind, split, nodes) in modes {
        let label = format!("split={kind}");
        let split = if config.inject_double_path {
            double_path_splitting(&split, g).unwrap_or(split)
        } else {
            split
        };
        if split.num_coarse() == 0 {
            out.push(tag(
                CheckReport::skip("splitting", 0.0, "no exterior pairs"),
                &label,
            ));
            continue;
        }
        out.push(tag(check_orthogonality(&split)?, &label));
        out.extend(
            check_schur_kernel(as0, g, &split)?
                .into_iter()
                .map(|r| tag(r, &label)),
        );
        let t = sparse_ideal_interp(as0, g, &split, nodes, SingularBlocks::PseudoInverse)?;
        out.extend(check_commuting(as0, g, &t.p, &t.gc)?.into_iter().map(|r| {
            tag(
                r.with_context(format!("interior_nullity={}", t.interior_nullity)),
                &label,
            )
        }));
        out.extend(
            check_eta_inequality(as0, g, &split, SingularBlocks::PseudoInverse)?
                .into_iter()
                .map(|r| tag(r, &label)),
        );
        if case.beta_scaling {
            let r = check_beta_scaling(
                &s0,
                &split,
                nodes,
                &SCALING_BETAS,
                SingularBlocks::PseudoInverse,
            )?;
            out.push(tag(r, &label));
        }
        if kind == "ref" && !config.inject_double_path {
            let bad = double_path_splitting(&split, g);
            if bad.is_none() {
                let r = CheckReport::skip(
                    "double_path_control",
                    0.0,
                    "no middle node with three interior edges",
                );
                out.push(tag(r, &label));
            }
            if let Some(bad) = bad {
                let reps = check_schur_kernel(as0, g, &bad)?;
                if let Some(r) = reps
                    .iter()
                    .find(|r| r.name == "schur_kernel_SE" && r.skipped.is_none())
                {
                    // passes when the corrupted splitting is caught
                    let c = CheckReport::new(
                        "double_path_control",
                        -r.measured,
                        -thresholds::SCHUR_KERNEL,
                    )
                    .with_context(format!("corrupted schur residual={:.3e}", r.measured));
                    out.push(tag(c, &label));
                }
            }
        }
    }

    let cm = dof_maps(coarse, case.boundary);
    let p_geo = geometric_interp(
        coarse,
        fine,
        map,
        &cm.free_edges,
        cm.dof_edges.len(),
        &s0.free_edges,
        s0.ndofs(),
    )?;
    let g_geo = gradient_matrix(coarse, &cm)?;
    out.extend(
        check_commuting(as0, g, &p_geo, &g_geo)?
            .into_iter()
            .map(|r| tag(r, "split=geo")),
    );

    if case.recovery {
        let cmu = CoefficientField::constant(fine.num_cells(), 1.0)?;
        out.push(check_geometric_recovery(
            coarse,
            fine,
            map,
            &cmu,
            case.boundary,
            &RECOVERY_BETAS,
        )?);
    }
    if case.two_grid {
        let t = sparse_ideal_interp(
            &s1.a,
            g,
            &ref_split,
            CoarseNodes::NonzeroColumns,
            SingularBlocks::Fail,
        )?;
        let m = l1_jacobi_matrix(&s1.a);
        out.extend(
            check_two_grid_bound(&s1.a, &t.p, &t.r, &m)?
                .into_iter()
                .map(|r| tag(r, &format!("split=ref beta={SWEEP_BETA}"))),
        );
    }

    out.push(check_smoother_fixed_point(&s1.a, g, config.seed)?);
    out.push(check_smoother_contraction(
        &s1.a,
        g,
        config.seed,
        config.samples,
    )?);
    out.push(check_smoother_symmetry(
        &s1.a,
        g,
        config.seed,
        config.samples,
    )?);
    for m in Method::ALL {
        let h = build_hierarchy(&s1, m, &HierarchyConfig::default(), Some(&case.meshes))?;
        out.extend(check_vcycle_spd(&h, config.seed, config.samples)?);
    }
    Ok(out.into_iter().map(|r| tag(r, &case.label)).collect())
}

/// Runs every check on every problem of the sweep.
pub fn run_verification(config: &VerifyConfig) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for case in cases(config)? {
        out.extend(verify_case(&case, config)?);
    }
    Ok(out)
}

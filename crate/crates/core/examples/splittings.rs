//! Interior/exterior splittings of a structured quadrilateral mesh: the
//! one that follows the refinement and the one built from the matrix
//! alone. On this mesh the two select the same exterior pairs. Both
//! patterns are written as SVG pictures.
//!
//! ```text
//! cargo run --example splittings -- /tmp
//! ```

use std::path::PathBuf;

use hcurl_amg::bench::{dump_coarsening_svg, CoarseningPattern};
use hcurl_amg::mesh::{uniform_quad_mesh, NestedMeshes};
use hcurl_amg::splitting::{build_algebraic_splitting, build_refinement_splitting, DEFAULT_THETA};
use hcurl_amg::{assemble, Boundary, CoefficientField};

fn main() -> hcurl_amg::Result<()> {
    let out_dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| std::env::temp_dir().display().to_string()),
    );
    let meshes = NestedMeshes::new(uniform_quad_mesh(0), 3)?;
    let d = meshes.depth();
    let (coarse, fine) = (&meshes.meshes()[d - 1], meshes.finest());
    let mu = CoefficientField::constant(fine.num_cells(), 1.0)?;
    let s = assemble(fine, &mu, 0.01, Boundary::Natural)?;

    let by_refinement = build_refinement_splitting(
        coarse,
        fine,
        &meshes.maps()[d - 1],
        &s.free_edges,
        s.ndofs(),
    )?;
    let algebraic = build_algebraic_splitting(&s.a, &s.gradient, DEFAULT_THETA)?;

    println!("edge dofs: {}", s.ndofs());
    for (name, split) in [
        ("refinement", &by_refinement),
        ("algebraic", &algebraic.splitting),
    ] {
        println!(
            "{name:>10}: {} exterior pairs, {} interior dofs",
            split.num_coarse(),
            split.interior_dofs().len()
        );
    }
    println!(
        "nodal coarsening keeps {} of {} nodes",
        algebraic.nodal.coarse.len(),
        s.gradient.ncols()
    );
    println!(
        "same pair set: {}",
        by_refinement.pair_set() == algebraic.splitting.pair_set()
    );

    let ref_svg = out_dir.join("quad_refinement.svg");
    let alg_svg = out_dir.join("quad_algebraic.svg");
    dump_coarsening_svg(
        fine,
        &CoarseningPattern::from_refinement(&by_refinement),
        &ref_svg,
    )?;
    dump_coarsening_svg(
        fine,
        &CoarseningPattern::from_algebraic(&s, fine, &algebraic),
        &alg_svg,
    )?;
    println!("wrote {} and {}", ref_svg.display(), alg_svg.display());
    Ok(())
}

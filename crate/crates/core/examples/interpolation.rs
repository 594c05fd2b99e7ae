//! Sparse approximate ideal interpolation for the refinement splitting:
//! the commuting property with the coarse gradient, and the recovery of
//! the geometric edge-element stencils (up to the coarse-variable scaling
//! of `sqrt 2`) as the shift goes to zero.
//!
//! ```text
//! cargo run --example interpolation
//! ```

use hcurl_amg::fem::dof_maps;
use hcurl_amg::mesh::{uniform_tri_mesh, NestedMeshes};
use hcurl_amg::splitting::build_refinement_splitting;
use hcurl_amg::transfer::{geometric_interp, sparse_ideal_interp, CoarseNodes, SingularBlocks};
use hcurl_amg::verify::range_residual;
use hcurl_amg::{assemble, Boundary, CoefficientField};

fn main() -> hcurl_amg::Result<()> {
    let meshes = NestedMeshes::new(uniform_tri_mesh(0), 3)?;
    let d = meshes.depth();
    let (coarse, fine, map) = (
        &meshes.meshes()[d - 1],
        meshes.finest(),
        &meshes.maps()[d - 1],
    );
    let mu = CoefficientField::constant(fine.num_cells(), 1.0)?;
    let cm = dof_maps(coarse, Boundary::Dirichlet);

    println!(
        "{:>8} {:>10} {:>12} {:>14}",
        "beta", "nnz(P)", "|A P Gc|", "|P - sqrt2 Pg|"
    );
    for beta in [1e-1, 1e-2, 1e-3, 1e-4, 0.0] {
        let s = assemble(fine, &mu, beta, Boundary::Dirichlet)?;
        let split = build_refinement_splitting(coarse, fine, map, &s.free_edges, s.ndofs())?;
        let t = sparse_ideal_interp(
            &s.a,
            &s.gradient,
            &split,
            CoarseNodes::NonzeroColumns,
            SingularBlocks::PseudoInverse,
        )?;
        // A P Gc is the energy of interpolated coarse gradients; with the
        // stiffness alone it vanishes exactly when P commutes
        let pgc = t.p.matmat(&t.gc)?;
        let leak = s.stiffness.matmat(&pgc)?.max_abs() / s.stiffness.max_abs();
        let pg = geometric_interp(
            coarse,
            fine,
            map,
            &cm.free_edges,
            cm.dof_edges.len(),
            &s.free_edges,
            s.ndofs(),
        )?;
        let diff =
            t.p.add_scaled(1.0, &pg, -std::f64::consts::SQRT_2)?
                .max_abs();
        println!("{beta:>8.0e} {:>10} {leak:>12.2e} {diff:>14.2e}", t.p.nnz());
        if beta == 0.0 {
            println!(
                "P Gc lies in range(G) up to {:.2e}",
                range_residual(&s.gradient, &pgc)?
            );
        }
    }
    Ok(())
}

//! Solve a curl-curl problem with a jumping coefficient using the three
//! interpolations, both as a stationary V(1,1) iteration and as a PCG
//! preconditioner.
//!
//! ```text
//! cargo run --release --example solve -- 5
//! ```

use hcurl_amg::bench::{ramp_rhs, random_guess};
use hcurl_amg::mesh::{assign_mu_stripes, uniform_tri_mesh, NestedMeshes};
use hcurl_amg::multilevel::{amg_pcg, amg_solve, build_hierarchy};
use hcurl_amg::{assemble, Boundary, HierarchyConfig, Method};

fn main() -> hcurl_amg::Result<()> {
    let level: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(4);
    let meshes = NestedMeshes::new(uniform_tri_mesh(0), level)?;
    let fine = meshes.finest();
    let mu = assign_mu_stripes(fine, level as u32);
    let system = assemble(fine, &mu, 0.01, Boundary::Dirichlet)?;
    let b = ramp_rhs(system.ndofs());
    let x0 = random_guess(system.ndofs(), 0);
    println!(
        "level {level}: {} edge dofs, striped mu in {{0.1, 10}}",
        system.ndofs()
    );

    for method in Method::ALL {
        let h = build_hierarchy(&system, method, &HierarchyConfig::default(), Some(&meshes))?;
        let (_, amg) = amg_solve(&h, &b, &x0, 1e-8, 500)?;
        let (_, pcg) = amg_pcg(&h, &b, &x0, 1e-8, 500)?;
        println!(
            "{method:>4}: levels {:?}  OC {:.2}  AMG {:>3} it{}  PCG {:>3} it",
            h.sizes(),
            h.operator_complexity(),
            amg.iterations,
            if amg.converged {
                ""
            } else {
                " (not converged)"
            },
            pcg.iterations
        );
    }
    Ok(())
}

//! A Delaunay mesh of the unit square with a checkerboard of coefficient
//! jumps, refined uniformly; compares two-grid and full multilevel
//! hierarchies for the refinement-based and algebraic splittings. The
//! coarsest mesh is also written to disk and read back.
//!
//! ```text
//! cargo run --release --example delaunay_two_grid
//! ```

use hcurl_amg::bench::{build_problem, ramp_rhs, random_guess, ExperimentConfig, Family};
use hcurl_amg::mesh::{delaunay_mesh, load_mesh, save_mesh};
use hcurl_amg::multilevel::{amg_solve, build_hierarchy};
use hcurl_amg::{HierarchyConfig, Method};

fn main() -> hcurl_amg::Result<()> {
    let coarsest = delaunay_mesh(60, 1)?;
    let path = std::env::temp_dir().join("delaunay_coarsest.mesh");
    save_mesh(&coarsest, &path)?;
    let loaded = load_mesh(&path)?;
    println!(
        "coarsest mesh: {} vertices, {} triangles (round trip {})",
        loaded.mesh.num_vertices(),
        loaded.mesh.num_cells(),
        if loaded.mesh.vertices() == coarsest.vertices() {
            "exact"
        } else {
            "differs"
        }
    );

    let config = ExperimentConfig {
        family: Family::Delaunay,
        mesh_file: Some(path),
        ..ExperimentConfig::default()
    };
    for level in 1..=3 {
        let problem = build_problem(&config, level)?;
        let n = problem.system.ndofs();
        let (b, x0) = (ramp_rhs(n), random_guess(n, 0));
        let mut line = format!("L={level} n={n:>5}");
        for (label, hc) in [
            ("two-grid", HierarchyConfig::two_grid()),
            ("multilevel", HierarchyConfig::default()),
        ] {
            for m in [Method::Ref, Method::Alg] {
                let h = build_hierarchy(&problem.system, m, &hc, Some(&problem.meshes))?;
                let (_, rep) = amg_solve(&h, &b, &x0, 1e-8, 500)?;
                line += &format!(
                    "  {label} {m}: {:>3} it OC {:.2}",
                    rep.iterations,
                    h.operator_complexity()
                );
            }
        }
        println!("{line}");
    }
    Ok(())
}

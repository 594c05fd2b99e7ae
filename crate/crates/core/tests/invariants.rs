//! Property tests for the invariants every layer promises: sparse algebra,
//! meshes, assembly, splittings, transfers, smoothers and the two-grid
//! propagator, over random matrices and random Delaunay meshes.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use hcurl_amg::fem::dof_maps;
use hcurl_amg::mesh::{delaunay_mesh, refine, NestedMeshes};
use hcurl_amg::smoothers::{Direction, OssL1};
use hcurl_amg::sparse::{mmio, CholeskyFactor};
use hcurl_amg::splitting::{build_algebraic_splitting, build_refinement_splitting, DEFAULT_THETA};
use hcurl_amg::transfer::{sparse_ideal_interp, CoarseNodes, SingularBlocks};
use hcurl_amg::verify::{exact_sequence_defect, range_residual};
use hcurl_amg::{assemble, Boundary, CoefficientField, CsrMatrix, Splitting};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        ..ProptestConfig::default()
    }
}

fn sparse_strategy(rows: usize, cols: usize) -> impl Strategy<Value = CsrMatrix> {
    prop::collection::vec((0..rows, 0..cols, -2.0f64..2.0), 0..(rows * cols).max(1))
        .prop_map(move |t| CsrMatrix::from_triplets(rows, cols, &t).unwrap())
}

fn dense_of_triplets(rows: usize, cols: usize, t: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(rows, cols);
    for &(i, j, v) in t {
        d[(i, j)] += v;
    }
    d
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(1e-300)
}

/// Refined Delaunay mesh with a random coefficient per cell.
fn random_problem(points: usize, seed: u64, log_mu: &[f64]) -> (NestedMeshes, CoefficientField) {
    let meshes = NestedMeshes::new(delaunay_mesh(points, seed).unwrap(), 1).unwrap();
    let nc = meshes.finest().num_cells();
    let mu = (0..nc)
        .map(|c| 10f64.powf(log_mu[c % log_mu.len()]))
        .collect();
    (meshes, CoefficientField::new(mu).unwrap())
}

fn a_norm(a: &CsrMatrix, x: &[f64]) -> f64 {
    let ax = a.spmv(x).unwrap();
    x.iter()
        .zip(&ax)
        .map(|(p, q)| p * q)
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn triplets_sum_duplicates_and_validate(
        t in prop::collection::vec((0..7usize, 0..5usize, -3.0f64..3.0), 0..40)
    ) {
        let m = CsrMatrix::from_triplets(7, 5, &t).unwrap();
        prop_assert!(m.validate().is_ok());
        prop_assert!(rel(&m.to_dense(), &dense_of_triplets(7, 5, &t)) <= 1e-15);
        prop_assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn matmat_is_associative(
        a in sparse_strategy(6, 5), b in sparse_strategy(5, 7), c in sparse_strategy(7, 4)
    ) {
        let left = a.matmat(&b).unwrap().matmat(&c).unwrap();
        let right = a.matmat(&b.matmat(&c).unwrap()).unwrap();
        prop_assert!(left.validate().is_ok() && right.validate().is_ok());
        prop_assert!(rel(&left.to_dense(), &right.to_dense()) <= 1e-12);
        let dense = a.to_dense() * b.to_dense() * c.to_dense();
        prop_assert!(rel(&left.to_dense(), &dense) <= 1e-12);
    }

    #[test]
    fn galerkin_product_is_exactly_symmetric(b in sparse_strategy(8, 8), p in sparse_strategy(8, 3)) {
        let a = b.add_scaled(1.0, &b.transpose(), 1.0).unwrap();
        let ac = CsrMatrix::galerkin_product(&p, &a).unwrap();
        prop_assert!(ac.validate().is_ok());
        prop_assert_eq!(ac.asymmetry(), 0.0);
        let dense = p.to_dense().transpose() * a.to_dense() * p.to_dense();
        prop_assert!(rel(&ac.to_dense(), &dense) <= 1e-12);
    }

    #[test]
    fn cholesky_solves_spd_systems(b in sparse_strategy(12, 12), rhs in prop::collection::vec(-1.0f64..1.0, 12)) {
        // B^T B + I has condition number well below 1e8 for these entries
        let a = b.transpose().matmat(&b).unwrap().add_scaled(1.0, &CsrMatrix::identity(12), 1.0).unwrap();
        let f = CholeskyFactor::factor(&a).unwrap();
        let x = f.solve(&rhs).unwrap();
        let r = a.residual(&rhs, &x);
        let (rn, bn) = (DVector::from_vec(r).norm(), DVector::from_vec(rhs.clone()).norm());
        prop_assert!(rn <= 1e-10 * bn.max(1e-300));
    }

    #[test]
    fn matrix_market_round_trip(m in sparse_strategy(6, 9)) {
        prop_assert_eq!(mmio::parse(&mmio::to_string(&m)).unwrap(), m);
    }

    #[test]
    fn delaunay_meshes_are_consistent(points in 8usize..40, seed in 0u64..1000) {
        let mesh = delaunay_mesh(points, seed).unwrap();
        let (fine, _) = refine(&mesh).unwrap();
        for m in [&mesh, &fine] {
            prop_assert!(m.validate().is_ok());
            for (e, &[t, h]) in m.edges().iter().enumerate() {
                prop_assert!(t < h);
                prop_assert_eq!(m.boundary_edges()[e], m.edge_cells()[e].len() == 1);
            }
            // a triangulated disk
            prop_assert_eq!(m.euler_characteristic(), 1);
        }
    }

    #[test]
    fn assembly_invariants_on_random_meshes(
        points in 8usize..30, seed in 0u64..1000,
        log_mu in prop::collection::vec(-2.0f64..2.0, 1..6),
    ) {
        let (meshes, mu) = random_problem(points, seed, &log_mu);
        let fine = meshes.finest();
        let s = assemble(fine, &mu, 0.01, Boundary::Dirichlet).unwrap();
        prop_assert!(exact_sequence_defect(&s.stiffness, &s.gradient).unwrap() <= 1e-12);
        for m in [&s.a, &s.stiffness, &s.mass] {
            prop_assert_eq!(m.asymmetry(), 0.0);
        }
        let half = assemble(fine, &mu.scaled(0.5).unwrap(), 0.01, Boundary::Dirichlet).unwrap();
        let diff = half.stiffness.add_scaled(1.0, &s.stiffness, -2.0).unwrap();
        prop_assert!(diff.max_abs() <= 1e-14 * s.stiffness.max_abs());
    }

    #[test]
    fn splittings_partition_and_are_orthogonal(
        points in 8usize..30, seed in 0u64..1000,
        log_mu in prop::collection::vec(-2.0f64..2.0, 1..6),
    ) {
        let (meshes, mu) = random_problem(points, seed, &log_mu);
        let (coarse, fine, map) = (&meshes.meshes()[0], meshes.finest(), &meshes.maps()[0]);
        let s = assemble(fine, &mu, 0.01, Boundary::Dirichlet).unwrap();
        let by_ref = build_refinement_splitting(coarse, fine, map, &s.free_edges, s.ndofs()).unwrap();
        let alg = build_algebraic_splitting(&s.a, &s.gradient, DEFAULT_THETA).unwrap();
        let again = build_algebraic_splitting(&s.a, &s.gradient, DEFAULT_THETA).unwrap();
        prop_assert_eq!(&alg.splitting, &again.splitting);

        let mut mids = alg.used_mid.clone();
        mids.sort_unstable();
        mids.dedup();
        prop_assert_eq!(mids.len(), alg.used_mid.len());

        for split in [&by_ref, &alg.splitting] {
            let mut seen = vec![0u8; s.ndofs()];
            for p in split.pairs() {
                seen[p.dof1] += 1;
                seen[p.dof2] += 1;
            }
            for &d in split.interior_dofs() {
                seen[d] += 1;
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            let (r, si, se) = split.realize();
            let (r, si, se) = (r.to_dense(), si.to_dense(), se.to_dense());
            let eye = |n: usize| DMatrix::<f64>::identity(n, n);
            prop_assert!((&r * &si).amax() <= 1e-14);
            prop_assert!((si.transpose() * &si - eye(si.ncols())).amax() <= 1e-14);
            prop_assert!((&r * r.transpose() - eye(r.nrows())).amax() <= 1e-14);
            prop_assert!((se.transpose() * &se - eye(se.ncols())).amax() <= 1e-14);
        }
    }

    #[test]
    fn interpolation_inverts_restriction_and_commutes(
        points in 8usize..24, seed in 0u64..1000,
        log_mu in prop::collection::vec(-2.0f64..2.0, 1..6),
    ) {
        let (meshes, mu) = random_problem(points, seed, &log_mu);
        let (coarse, fine, map) = (&meshes.meshes()[0], meshes.finest(), &meshes.maps()[0]);
        let s1 = assemble(fine, &mu, 0.01, Boundary::Dirichlet).unwrap();
        let s0 = s1.with_beta(0.0).unwrap();
        let by_ref = build_refinement_splitting(coarse, fine, map, &s0.free_edges, s0.ndofs()).unwrap();
        let alg = build_algebraic_splitting(&s1.a, &s1.gradient, DEFAULT_THETA).unwrap();
        let cases: [(&Splitting, CoarseNodes); 2] = [
            (&by_ref, CoarseNodes::NonzeroColumns),
            (&alg.splitting, CoarseNodes::Selected(&alg.nodal.coarse)),
        ];
        for (split, nodes) in cases {
            if split.num_coarse() == 0 {
                continue;
            }
            let t = sparse_ideal_interp(&s0.a, &s0.gradient, split, nodes, SingularBlocks::PseudoInverse).unwrap();
            let rp = t.r.matmat(&t.p).unwrap().to_dense();
            prop_assert!((rp - DMatrix::<f64>::identity(split.num_coarse(), split.num_coarse())).amax() <= 1e-12);
            let pgc = t.p.matmat(&t.gc).unwrap();
            prop_assert!(s0.a.matmat(&pgc).unwrap().max_abs() <= 1e-10 * s0.a.max_abs());
            prop_assert!(range_residual(&s0.gradient, &pgc).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn smoother_fixes_solutions_and_reduces_energy(
        points in 8usize..30, seed in 0u64..1000,
        log_mu in prop::collection::vec(-2.0f64..2.0, 1..6),
        dir in prop::sample::select(vec![Direction::Forward, Direction::Backward, Direction::Symmetric]),
        err_seed in any::<u64>(),
    ) {
        let (meshes, mu) = random_problem(points, seed, &log_mu);
        let s = assemble(meshes.finest(), &mu, 0.01, Boundary::Dirichlet).unwrap();
        let smoother = OssL1::new(&s.a, &s.gradient).unwrap();
        let n = s.ndofs();
        let x: Vec<f64> = hcurl_amg::bench::random_guess(n, err_seed);

        let b = s.a.spmv(&x).unwrap();
        let mut y = x.clone();
        smoother.smooth(&s.a, &mut y, &b, dir);
        let drift = y.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        prop_assert!(drift <= 1e-12 * x.iter().fold(0.0f64, |m, v| m.max(v.abs())));

        // with b = 0 the iterate is the error
        let mut e = x.clone();
        smoother.smooth(&s.a, &mut e, &vec![0.0; n], dir);
        prop_assert!(a_norm(&s.a, &e) < a_norm(&s.a, &x));
    }

    #[test]
    fn two_grid_propagator_contracts(
        points in 8usize..20, seed in 0u64..1000,
        log_mu in prop::collection::vec(-2.0f64..2.0, 1..6),
        err_seed in any::<u64>(),
    ) {
        let (meshes, mu) = random_problem(points, seed, &log_mu);
        let (coarse, fine, map) = (&meshes.meshes()[0], meshes.finest(), &meshes.maps()[0]);
        let s = assemble(fine, &mu, 0.01, Boundary::Dirichlet).unwrap();
        let by_ref = build_refinement_splitting(coarse, fine, map, &s.free_edges, s.ndofs()).unwrap();
        let alg = build_algebraic_splitting(&s.a, &s.gradient, DEFAULT_THETA).unwrap();
        let smoother = OssL1::new(&s.a, &s.gradient).unwrap();
        let ad = s.a.to_dense();
        let cases: [(&Splitting, CoarseNodes); 2] = [
            (&by_ref, CoarseNodes::NonzeroColumns),
            (&alg.splitting, CoarseNodes::Selected(&alg.nodal.coarse)),
        ];
        for (split, nodes) in cases {
            if split.num_coarse() == 0 {
                continue;
            }
            let t = sparse_ideal_interp(&s.a, &s.gradient, split, nodes, SingularBlocks::Fail).unwrap();
            let p = t.p.to_dense();
            let ac = p.transpose() * &ad * &p;
            let chol = ac.cholesky().expect("coarse operator is SPD");
            let e0 = DVector::from_vec(hcurl_amg::bench::random_guess(s.ndofs(), err_seed));
            // (I - M^{-1} A)(I - P A_c^{-1} P^T A) e
            let mut e: Vec<f64> = (&e0 - &p * chol.solve(&(p.transpose() * (&ad * &e0)))).as_slice().to_vec();
            smoother.smooth(&s.a, &mut e, &vec![0.0; s.ndofs()], Direction::Forward);
            prop_assert!(a_norm(&s.a, &e) < a_norm(&s.a, e0.as_slice()));
        }
    }
}

#[test]
fn dirichlet_dofs_skip_boundary_edges() {
    let mesh = delaunay_mesh(25, 3).unwrap();
    let maps = dof_maps(&mesh, Boundary::Dirichlet);
    for (e, f) in maps.free_edges.iter().enumerate() {
        assert_eq!(f.is_none(), mesh.boundary_edges()[e]);
    }
}

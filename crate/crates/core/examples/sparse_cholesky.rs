//! The sparse kernels on their own: Galerkin products, a minimum-degree
//! Cholesky factorization, and a MatrixMarket round trip.
//!
//! ```text
//! cargo run --example sparse_cholesky
//! ```

use hcurl_amg::sparse::{minimum_degree, mmio, norm2, CholeskyFactor};
use hcurl_amg::CsrMatrix;

/// Five-point Laplacian on an `m x m` grid.
fn laplacian(m: usize) -> CsrMatrix {
    let idx = |i: usize, j: usize| i * m + j;
    let mut t = Vec::new();
    for i in 0..m {
        for j in 0..m {
            t.push((idx(i, j), idx(i, j), 4.0));
            if i + 1 < m {
                t.push((idx(i, j), idx(i + 1, j), -1.0));
                t.push((idx(i + 1, j), idx(i, j), -1.0));
            }
            if j + 1 < m {
                t.push((idx(i, j), idx(i, j + 1), -1.0));
                t.push((idx(i, j + 1), idx(i, j), -1.0));
            }
        }
    }
    CsrMatrix::from_triplets(m * m, m * m, &t).expect("valid triplets")
}

fn main() -> hcurl_amg::Result<()> {
    let a = laplacian(30);
    let natural = CholeskyFactor::factor_with_ordering(&a, (0..a.nrows()).collect())?;
    let md = CholeskyFactor::factor_with_ordering(&a, minimum_degree(&a))?;
    println!("n = {}, nnz(A) = {}", a.nrows(), a.nnz());
    println!(
        "fill: natural order {}, minimum degree {}",
        natural.nnz(),
        md.nnz()
    );

    let b = vec![1.0; a.nrows()];
    let x = md.solve(&b)?;
    println!(
        "solve residual {:.2e}",
        norm2(&a.residual(&b, &x)) / norm2(&b)
    );

    // aggregate four consecutive unknowns into one coarse unknown
    let triplets: Vec<_> = (0..a.nrows()).map(|i| (i, i / 4, 1.0)).collect();
    let p = CsrMatrix::from_triplets(a.nrows(), a.nrows().div_ceil(4), &triplets)?;
    let ac = CsrMatrix::galerkin_product(&p, &a)?;
    println!(
        "Galerkin product: {}x{} with {} nonzeros, symmetric {}",
        ac.nrows(),
        ac.ncols(),
        ac.nnz(),
        ac.is_symmetric(1e-14)
    );

    let text = mmio::to_string(&ac);
    let back = mmio::parse(&text)?;
    println!("MatrixMarket round trip exact: {}", back == ac);
    Ok(())
}

//! Iteration counts and operator complexities over a range of
//! refinement levels, written as the CSV table that `bench run` produces.
//!
//! ```text
//! cargo run --release --example experiment_table -- jump
//! ```

use hcurl_amg::bench::{csv_string, run_experiment, ExperimentConfig, Family};

fn main() -> hcurl_amg::Result<()> {
    let family: Family = std::env::args()
        .nth(1)
        .as_deref()
        .unwrap_or("uniform")
        .parse()?;
    let config = ExperimentConfig {
        family,
        levels: (2..=4).collect(),
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(&config)?;
    print!("{}", csv_string(&rows)?);
    Ok(())
}

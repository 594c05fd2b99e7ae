//! Run every structural check on the small verification problems and
//! print a one-line summary per check group.
//!
//! ```text
//! cargo run --release --example verify_sweep
//! ```

use std::collections::BTreeMap;

use hcurl_amg::bench::{run_verification, VerifyConfig};

fn main() -> hcurl_amg::Result<()> {
    let reports = run_verification(&VerifyConfig::default())?;
    // name -> (passed, failed, skipped, worst measured / threshold)
    let mut groups: BTreeMap<&str, (usize, usize, usize, f64)> = BTreeMap::new();
    for r in &reports {
        let e = groups
            .entry(r.name.as_str())
            .or_insert((0, 0, 0, f64::NEG_INFINITY));
        if r.skipped.is_some() {
            e.2 += 1;
        } else if r.passed {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
        if r.skipped.is_none() {
            e.3 = e.3.max(r.measured);
        }
    }
    println!(
        "{:<22} {:>5} {:>5} {:>5} {:>12}",
        "check", "pass", "fail", "skip", "worst"
    );
    for (name, (p, f, s, worst)) in &groups {
        let worst = if worst.is_finite() {
            format!("{worst:.3e}")
        } else {
            "-".into()
        };
        println!("{name:<22} {p:>5} {f:>5} {s:>5} {worst:>12}");
    }
    for r in reports.iter().filter(|r| r.failed()) {
        println!("{r}");
    }
    Ok(())
}

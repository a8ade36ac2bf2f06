//! Runs the ten end-to-end checks that `crclassify verify` runs.
//!
//! `cargo run --release --example verify`

use crsing::verify::{run_all, VerifyOptions};

fn main() {
    let results = run_all(&VerifyOptions::default());
    for r in &results {
        println!("{} {:>2} {} ({:.1} s)\n     {}", if r.pass { "PASS" } else { "FAIL" }, r.id, r.name, r.seconds, r.detail);
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    std::process::exit(if failed == 0 { 0 } else { 1 });
}

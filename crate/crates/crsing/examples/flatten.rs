//! Cubic flattening: a holomorphic change removes every cubic term except
//! the four monomials `z₁²z₂, z₁z₂²` and their conjugates.
//!
//! `cargo run --example flatten`        prints the flattened cubic
//! `cargo run --example flatten json`   prints the input series as JSON,
//!                                      ready for `crclassify flatten --input`

use crsing::matcore::{c, CMat};
use crsing::series::{cubic_flatten, e2, PSeries, CUBIC_CONDITIONS, FLAT_CUBIC};

fn main() {
    let (g1, g2) = (0.2, 0.4);
    let mut h = PSeries::from_quadratic(&CMat::diag_real(&[g1, g2]), &CMat::identity(2), &CMat::diag_real(&[g1, g2]), 3);
    // each reality condition pairs two coefficients as conjugates
    for (k, (lhs, rhs)) in CUBIC_CONDITIONS.iter().enumerate() {
        let v = c(0.1 * (k + 1) as f64, -0.05 * k as f64);
        h.add_term(&[lhs[0], lhs[2]], &[lhs[1], lhs[3]], v.conj());
        h.add_term(&[rhs[0], rhs[2]], &[rhs[1], rhs[3]], v);
    }
    h.add_term(&[3, 0], &[0, 0], c(0.7, 0.1));
    h.add_term(&[0, 3], &[0, 0], c(-0.2, 0.3));
    h.add_term(&[0, 0], &[3, 0], c(0.05, 0.0));

    if std::env::args().nth(1).as_deref() == Some("json") {
        println!("{}", serde_json::to_string_pretty(&h).unwrap());
        return;
    }

    let (flat, change) = cubic_flatten(&h).expect("admissible input");
    println!("surviving cubic coefficients:");
    for idx in FLAT_CUBIC {
        let v = e2(&flat, idx);
        println!("  e{}{}{}{} = {:.6}", idx[0], idx[1], idx[2], idx[3], v);
    }
    let others: f64 = flat.part(3).terms().filter(|(a, b, _)| !FLAT_CUBIC.contains(&[a[0], b[0], a[1], b[1]])).map(|t| t.2.norm()).fold(0.0, f64::max);
    println!("largest other cubic coefficient {others:.1e}");
    println!("quadratic part unchanged: {}", flat.part(2) == h.part(2));
    println!("linear part of the change: c13 = {:.6}, c23 = {:.6}", change.c[(0, 2)], change.c[(1, 2)]);
    println!("nonlinear terms of the change: {}", change.p.iter().map(|p| p.terms().count()).sum::<usize>());

    // breaking one condition is reported by name
    let mut bad = h.clone();
    bad.add_term(&[2, 0], &[0, 1], c(0.01, 0.0));
    println!("violated input: {}", cubic_flatten(&bad).unwrap_err());
}

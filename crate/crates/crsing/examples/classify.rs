//! Normal forms and invariants of a handful of quadratic parts `(R, S)`.
//!
//! `cargo run --example classify`

use crsing::matcore::{c, CMat};
use crsing::normalform::{classify_pair, complexification_class};

fn main() {
    let pairs = [
        ("two elliptic Bishop points", CMat::diag_real(&[1.0, 1.0]), CMat::diag_real(&[0.1, 0.2])),
        ("hyperbolic direction", CMat::diag_real(&[1.0, 1.0]), CMat::diag_real(&[0.1, 0.9])),
        ("indefinite R", CMat::diag_real(&[1.0, -1.0]), CMat::m2(c(0.0, 0.0), c(0.3, 0.0), c(0.3, 0.0), c(0.0, 0.0))),
        ("non-flat R", CMat::m2(c(1.0, 0.0), c(0.5, 0.2), c(-0.1, 0.4), c(0.0, 1.0)), CMat::diag_real(&[0.2, 0.0])),
        ("cusp", CMat::m2(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)), CMat::diag_real(&[0.0, 0.5])),
        ("R = 0", CMat::zeros(2, 2), CMat::diag_real(&[0.5, 0.5])),
    ];
    for (what, r, s) in &pairs {
        let row = classify_pair(r, s).expect("classifiable pair");
        let q = complexification_class(r, s).unwrap();
        println!("{what}");
        println!("  case {}  form {:?}  complexification {}", row.r_case.label(), row.form, q.expr());
        for m in &row.moduli {
            println!("  modulus {} = {:.6} (real dim {})", m.name, m.value, m.dim);
        }
        let sigma = row.sigma_gamma.map_or("-".to_string(), |s| s.to_string());
        println!(
            "  rho(P)={} rho(N|P)={} rho(Gamma)={} sigma(Gamma)={} det Gamma={:.6} ({})",
            row.rho_p, row.rho_np, row.rho_gamma, sigma, row.det_gamma, row.det_sign
        );
        println!("  witness residual {:.1e}", row.witness.residual);
    }
}

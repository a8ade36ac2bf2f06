//! Intersection index of a CR singular point from its quadratic part:
//! the sign of `det Γ`, checked against the real Hessian determinant.
//!
//! `cargo run --example index`

use crsing::matcore::{gamma_det_sign, r, CMat};
use crsing::series::{gamma_of, hessian_index, PSeries};

fn main() {
    // h = |z₁|² + γ(z₁² + z̄₁²) + |z₂|²: a Bishop point in z₁ times an
    // elliptic one in z₂, so det Γ = 1 − 4γ²
    println!("{:>6} {:>12} {:>6} {:>14} {:>6}", "γ", "det Γ", "sign", "16·det Γ", "Hess");
    for g in [0.0, 0.25, 0.5, 0.6, 1.0] {
        let s = CMat::diag_real(&[g, 0.0]);
        let h = PSeries::from_quadratic(&CMat::zeros(2, 2), &CMat::identity(2), &s, 3);
        let gamma = gamma_of(&h).unwrap();
        let (det, sign) = gamma_det_sign(&gamma).unwrap();
        let (hdet, hsign) = hessian_index(&h).unwrap();
        println!("{g:>6} {det:>12.6} {sign:>6} {hdet:>14.6} {hsign:>6}");
    }

    // the holomorphic part Q does not change the index
    let q = CMat::diag(&[r(3.0), r(-2.0)]);
    let h = PSeries::from_quadratic(&q, &CMat::diag_real(&[1.0, -1.0]), &CMat::diag_real(&[0.1, 0.7]), 3);
    let (det, sign) = gamma_det_sign(&gamma_of(&h).unwrap()).unwrap();
    println!("indefinite R, Q ≠ 0: det Γ = {det:.6} ({sign}), Hessian {:?}", hessian_index(&h).unwrap());
}

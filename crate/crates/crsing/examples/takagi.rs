//! Matrix kernels: Takagi factorization, signatures and the `Γ` block.
//!
//! `cargo run --example takagi`

use crsing::matcore::{build_gamma, gamma_det_sign, hermitian_signature, takagi, c, CMat};

fn main() {
    // symmetric with a repeated singular value
    let s = CMat::m2(c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0));
    let t = takagi(&s).unwrap();
    println!("S = U·D·Uᵀ, singular values {:?}", t.values());
    println!("reconstruction error {:.1e}", t.reconstruct().dist(&s));

    let s = CMat::m2(c(0.3, 0.1), c(0.2, -0.4), c(0.2, -0.4), c(1.1, 0.0));
    let t = takagi(&s).unwrap();
    println!("singular values {:?}, error {:.1e}", t.values(), t.reconstruct().dist(&s));

    // Γ = [[R, P̄], [P, R̄]] for a Hermitian R is Hermitian; its signature
    // and determinant sign are invariants of the quadratic part
    let r = CMat::diag_real(&[1.0, -1.0]);
    for g in [0.2, 0.5, 1.5] {
        let p = CMat::diag_real(&[g, g]);
        let gamma = build_gamma(&r, &p).unwrap();
        let sig = hermitian_signature(&gamma).unwrap();
        let (det, sign) = gamma_det_sign(&gamma).unwrap();
        println!("P = {g}·I: signature ({}, {}), det Γ = {det:.4} ({sign})", sig.p, sig.q);
    }
}

//! Normal forms of quadratic parts `(R, S)` of a CR singularity in `C³`.
//!
//! The group `{(c, A) : c ∈ C*, A ∈ GL₂(C)}` acts by
//! `(N, P) ↦ (c·Āᵀ·N·A, c̄·Aᵀ·P·A)` where `P = 2·S̄`.  The first component
//! is classified up to `*`-congruence with a scalar into one of
//!
//! * `diag(1, e^{iθ})`, `0 ≤ θ ≤ π`,
//! * `[[0, 1], [τ, 0]]`, `0 ≤ τ < 1`,
//! * the cusp `[[0, 1], [1, i]]`,
//! * `diag(1, 0)`, and `0`,
//!
//! after which the stabiliser of `N` is used to normalise `P`.  Every result
//! carries a witness `(c, A)` whose residual is checked before returning.

use crate::matcore::{
    build_gamma, cjson, hermitian_signature, rank, star_congruence, sym_congruence, takagi, CMat,
    MatError, Sign, C64, I,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Values below `SILENT × scale` are treated as zero without comment;
/// values up to `tol × scale` are snapped to zero and flagged.
const SILENT: f64 = 1e-11;
/// Scalar-versus-Jordan decision for a doubled eigenvalue.
const JORDAN_SNAP: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalFormError {
    #[error("expected 2×2 input: {0}")]
    Shape(String),
    #[error("witness for case {case} did not converge (residual {residual:.3e})")]
    WitnessNotConverged { case: String, residual: f64 },
    #[error("stabiliser solve failed: {0}")]
    StabilizerSolveFailed(String),
    #[error("Hermitian congruence failed: {0}")]
    NCongruenceFailed(String),
    #[error(transparent)]
    Mat(#[from] MatError),
}

type Result<T> = std::result::Result<T, NormalFormError>;

/// Orbit type of the Hermitian-part matrix `R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum RCase {
    /// `diag(1, e^{iθ})`, `θ ∈ [0, π]`.
    Theta(f64),
    /// `[[0, 1], [τ, 0]]`, `τ ∈ [0, 1)`.
    Tau(f64),
    /// `[[0, 1], [1, i]]`.
    Cusp,
    /// `diag(1, 0)`.
    RankOneHermitian,
    Zero,
}

impl RCase {
    pub fn n_matrix(&self) -> CMat {
        let o = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        match *self {
            RCase::Theta(t) if t == PI => CMat::m2(one, o, o, -one),
            RCase::Theta(t) if t == PI / 2.0 => CMat::m2(one, o, o, I),
            RCase::Theta(t) => CMat::m2(one, o, o, C64::from_polar(1.0, t)),
            RCase::Tau(t) => CMat::m2(o, one, C64::new(t, 0.0), o),
            RCase::Cusp => CMat::m2(o, one, one, I),
            RCase::RankOneHermitian => CMat::m2(one, o, o, o),
            RCase::Zero => CMat::zeros(2, 2),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            RCase::Theta(t) if t == 0.0 => "theta=0".into(),
            RCase::Theta(t) if t == PI => "theta=pi".into(),
            RCase::Theta(t) => format!("theta={t:.12}"),
            RCase::Tau(0.0) => "tau=0".into(),
            RCase::Tau(t) => format!("tau={t:.12}"),
            RCase::Cusp => "cusp".into(),
            RCase::RankOneHermitian => "diag(1,0)".into(),
            RCase::Zero => "zero".into(),
        }
    }
}

/// A group element `(c, A)` together with its verification residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "cjson")]
    pub c: C64,
    pub a: CMat,
    pub residual: f64,
}

impl Witness {
    /// `self` followed by `other`: the composite acts as `(c₁c₂, A₁A₂)`.
    fn then(&self, other_c: C64, other_a: &CMat) -> Witness {
        Witness { c: self.c * other_c, a: &self.a * other_a, residual: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RClass {
    pub case: RCase,
    pub n: CMat,
    pub witness: Witness,
    /// Set when a value within tolerance of a case boundary was snapped.
    pub boundary: bool,
}

/// A continuous invariant of the normal form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modulus {
    pub name: String,
    #[serde(with = "cjson")]
    pub value: C64,
    /// Real dimension contributed: 1 for a real or unimodular value, 2 for
    /// an unconstrained complex one.
    pub dim: usize,
}

impl Modulus {
    fn real(name: &str, v: f64) -> Self {
        Modulus { name: name.into(), value: C64::new(v, 0.0), dim: 1 }
    }
    fn cx(name: &str, v: C64) -> Self {
        Modulus { name: name.into(), value: v, dim: 2 }
    }
    fn unit(name: &str, v: C64) -> Self {
        Modulus { name: name.into(), value: v, dim: 1 }
    }
}

/// Family of the normalised pair; each variant is one row of the
/// classification table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Form {
    /// `diag(1,e^{iθ})`, `[[a,b],[b,d]]`, `a,d > 0`, `b ∈ C`, `b ~ −b`.
    ThetaGeneric,
    /// `diag(1,e^{iθ})`, `[[0,b],[b,d]]`, `b,d ≥ 0`.
    ThetaA0,
    /// `diag(1,e^{iθ})`, `[[a,b],[b,0]]`, `a > 0`, `b ≥ 0`.
    ThetaD0,
    /// `I`, `diag(a,d)`, `0 ≤ a ≤ d`.
    DefiniteDiag,
    /// `diag(1,−1)`, `diag(a,d)`, `0 ≤ a ≤ d`.
    IndefDiag,
    /// `diag(1,−1)`, `[[0,b],[b,0]]`, `b > 0`.
    IndefOff,
    /// `diag(1,−1)`, `[[1,1],[1,1]]`.
    IndefRankOne,
    /// `[[0,1],[1,0]]`, `[[0,b],[b,1]]`, `b > 0`.
    SwapJordan,
    /// `[[0,1],[1,0]]`, `[[1,0],[0,d]]`, `Im d > 0`.
    SwapComplex,
    /// `τ ∈ (0,1)`, `[[a,b],[b,d]]`, `b > 0`, `|a| = 1`, `(a,d) ~ (−a,−d)`.
    TauGeneric,
    /// `τ ∈ (0,1)`, `[[0,b],[b,d]]`, `b > 0`, `|d| = 1`, `d ~ −d`.
    TauA0,
    /// `τ ∈ (0,1)`, `[[0,b],[b,0]]`, `b > 0`.
    TauOff,
    /// `τ ∈ (0,1)`, `[[1,0],[0,d]]`, `d ∈ C`.
    TauDiag,
    /// `τ ∈ (0,1)`, `[[0,0],[0,1]]`.
    TauE22,
    /// `τ ∈ (0,1)`, `0`.
    TauZero,
    /// `[[0,1],[0,0]]`, `[[a,b],[b,1]]`, `b > 0`, `a ∈ C`.
    NilGeneric,
    /// `[[0,1],[0,0]]`, `[[1,b],[b,0]]`, `b > 0`.
    NilD0,
    /// `[[0,1],[0,0]]`, `[[0,b],[b,0]]`, `b > 0`.
    NilOff,
    /// `[[0,1],[0,0]]`, `[[a,0],[0,1]]`, `a ≥ 0`.
    NilDiag,
    /// `[[0,1],[0,0]]`, `[[1,0],[0,0]]`.
    NilE11,
    /// `[[0,1],[0,0]]`, `0`.
    NilZero,
    /// cusp, `[[a,b],[b,d]]`, `a > 0`, `b ∈ R`, `d ∈ C`.
    CuspGeneric,
    /// cusp, `[[0,b],[b,d]]`, `b > 0`, `d ∈ R`.
    CuspA0,
    /// cusp, `[[0,0],[0,d]]`, `d ≥ 0`.
    CuspE22,
    /// `diag(1,0)`, `[[a,0],[0,1]]`, `a ≥ 0`.
    RankOneDiag,
    /// `diag(1,0)`, `[[0,1],[1,0]]`.
    RankOneOff,
    /// `diag(1,0)`, `[[a,0],[0,0]]`, `a ≥ 0`.
    RankOneE11,
    /// `0`, `I`.
    ZeroId,
    /// `0`, `diag(1,0)`.
    ZeroE11,
    /// `0`, `0`.
    ZeroZero,
}

impl Form {
    /// Real dimension of the family, counting `θ` or `τ`.
    pub fn moduli_count(self) -> usize {
        use Form::*;
        match self {
            ThetaGeneric => 5,
            ThetaA0 | ThetaD0 => 3,
            DefiniteDiag | IndefDiag => 2,
            IndefOff => 1,
            IndefRankOne => 0,
            SwapJordan => 1,
            SwapComplex => 2,
            TauGeneric => 5,
            TauA0 => 3,
            TauOff => 2,
            TauDiag => 3,
            TauE22 | TauZero => 1,
            NilGeneric => 3,
            NilD0 | NilOff | NilDiag => 1,
            NilE11 | NilZero => 0,
            CuspGeneric => 4,
            CuspA0 => 2,
            CuspE22 => 1,
            RankOneDiag => 1,
            RankOneOff => 0,
            RankOneE11 => 1,
            ZeroId | ZeroE11 | ZeroZero => 0,
        }
    }
}

/// Result of normalising `P` under the stabiliser of a normal `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PNormal {
    /// Usually the input `N`; the indefinite case may switch to `[[0,1],[1,0]]`.
    pub n: CMat,
    pub p: CMat,
    pub form: Form,
    pub moduli: Vec<Modulus>,
    pub witness: Witness,
    pub boundary: bool,
}

/// Complete classification of a pair with its discrete invariants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub r_case: RCase,
    pub form: Form,
    pub n: CMat,
    pub p: CMat,
    pub moduli: Vec<Modulus>,
    pub witness: Witness,
    pub rho_n: usize,
    /// `|p − q|` when `N` is Hermitian.
    pub sigma_n: Option<usize>,
    pub rho_p: usize,
    pub rho_np: usize,
    pub rho_gamma: usize,
    /// `|p − q|` of `Γ` when it is Hermitian.
    pub sigma_gamma: Option<usize>,
    pub det_gamma: f64,
    pub det_sign: Sign,
    pub boundary: bool,
}

/// Canonical Hermitian pair under simultaneous `*`-congruence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum HermPairForm {
    /// `(diag(1,−1), diag(k₁,k₂))`.
    DiagDiag(f64, f64),
    /// `(ε[[0,1],[1,0]], ε[[0,k],[k,1]])`; `ε = ±1` is the sign
    /// characteristic of the Jordan block.
    OffK { k: f64, eps: i8 },
    /// `([[0,1],[1,0]], [[0,x+iy],[x−iy,0]])`, `y > 0`.
    OffXY(f64, f64),
}

// ---------------------------------------------------------------------------
// helpers

fn check2(m: &CMat, what: &str) -> Result<()> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(NormalFormError::Shape(format!("{what} is {}×{}", m.rows(), m.cols())));
    }
    Ok(())
}

struct Snap {
    tol: f64,
    boundary: bool,
}

impl Snap {
    fn new(tol: f64) -> Self {
        Snap { tol, boundary: false }
    }

    fn zero(&mut self, x: f64, scale: f64) -> bool {
        let x = x.abs();
        if x <= SILENT * scale {
            true
        } else if x <= self.tol * scale {
            self.boundary = true;
            true
        } else {
            false
        }
    }
}

fn o() -> C64 {
    C64::new(0.0, 0.0)
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn phase(z: C64) -> C64 {
    if z.norm() == 0.0 {
        re(1.0)
    } else {
        z / z.norm()
    }
}

fn half_phase(z: C64) -> C64 {
    C64::from_polar(1.0, z.arg() / 2.0)
}

fn cols(v1: [C64; 2], v2: [C64; 2]) -> CMat {
    CMat::m2(v1[0], v2[0], v1[1], v2[1])
}

fn eig2(m: &CMat) -> (C64, C64, C64) {
    let tr = m.trace();
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = tr * tr - det * 4.0;
    let s = disc.sqrt();
    ((tr + s) / 2.0, (tr - s) / 2.0, disc)
}

/// A unit eigenvector of a 2×2 matrix for eigenvalue `l`.
fn evec2(m: &CMat, l: C64) -> [C64; 2] {
    let a = [m[(0, 1)], l - m[(0, 0)]];
    let b = [l - m[(1, 1)], m[(1, 0)]];
    let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    let nb = (b[0].norm_sqr() + b[1].norm_sqr()).sqrt();
    let (v, n) = if na >= nb { (a, na) } else { (b, nb) };
    if n == 0.0 {
        return [re(1.0), o()];
    }
    [v[0] / n, v[1] / n]
}

fn form_quad(v: &[C64; 2], m: &CMat, w: &[C64; 2]) -> C64 {
    // v* M w
    let mut s = o();
    for i in 0..2 {
        for j in 0..2 {
            s += v[i].conj() * m[(i, j)] * w[j];
        }
    }
    s
}

fn pair_residual(w: &Witness, r: &CMat, p: &CMat, n_out: &CMat, p_out: &CMat) -> f64 {
    let rn = &(&w.a.adjoint() * r) * &w.a;
    let pn = &(&w.a.transpose() * p) * &w.a;
    rn.scale(w.c).dist(n_out) + pn.scale(w.c.conj()).dist(p_out)
}

/// Picks `z` or `−z` so that the result lies in the half-plane
/// `Re > 0 or (Re = 0 and Im ≥ 0)`.
fn half_plane_sign(z: C64, scale: f64) -> f64 {
    if z.re > SILENT * scale || (z.re.abs() <= SILENT * scale && z.im >= 0.0) {
        1.0
    } else {
        -1.0
    }
}

// ---------------------------------------------------------------------------
// classification of R

/// Returns `φ ∈ [0, π)` with `e^{iφ}·R` Hermitian, if one exists.
pub fn is_quadratically_flat(r: &CMat) -> Option<f64> {
    if !r.is_square() {
        return None;
    }
    let nrm = r.norm();
    if nrm == 0.0 {
        return Some(0.0);
    }
    let n = r.rows();
    let (mut bi, mut bj, mut best) = (0, 0, -1.0);
    for i in 0..n {
        for j in 0..n {
            if r[(i, j)].norm() > best {
                best = r[(i, j)].norm();
                bi = i;
                bj = j;
            }
        }
    }
    // e^{2iφ} = conj(R_ji) / R_ij
    let e2 = r[(bj, bi)].conj() / r[(bi, bj)];
    let mut phi = e2.arg() / 2.0;
    if phi < 0.0 {
        phi += PI;
    }
    if phi >= PI {
        phi -= PI;
    }
    let h = r.scale(C64::from_polar(1.0, phi));
    if h.hermitian_defect() <= r.tol() * nrm {
        Some(phi)
    } else {
        None
    }
}

/// Normal form of `R` under `R ↦ c·Āᵀ·R·A`.
#[allow(non_snake_case)]
pub fn classify_R(r: &CMat) -> Result<RClass> {
    check2(r, "R")?;
    let mut snap = Snap::new(r.tol());
    let (case, c, a) = match rank(r) {
        0 => (RCase::Zero, re(1.0), CMat::identity(2)),
        1 => rank_one(r, &mut snap),
        _ => rank_two(r, &mut snap)?,
    };
    let n = case.n_matrix();
    let residual = star_congruence(c, &a, r)?.dist(&n);
    if !(residual <= 1e-8 * (1.0 + r.norm())) {
        return Err(NormalFormError::WitnessNotConverged { case: case.label(), residual });
    }
    Ok(RClass { case, n, witness: Witness { c, a, residual }, boundary: snap.boundary })
}

fn rank_one(r: &CMat, snap: &mut Snap) -> (RCase, C64, CMat) {
    let svd = r.to_na().svd(true, true);
    let k = svd.singular_values.imax();
    let sigma = svd.singular_values[k];
    let u_ = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let u = [u_[(0, k)], u_[(1, k)]];
    let v = [vt[(k, 0)].conj(), vt[(k, 1)].conj()];
    let inner = v[0].conj() * u[0] + v[1].conj() * u[1];
    let sinang = ((u[0] - inner * v[0]).norm_sqr() + (u[1] - inner * v[1]).norm_sqr()).sqrt();
    if snap.zero(sinang, 1.0) {
        // R ≈ κ u u*
        let kappa = inner * sigma;
        let s = kappa.norm().sqrt();
        let nv = [-u[1].conj(), u[0].conj()];
        let a = cols([u[0] / s, u[1] / s], nv);
        (RCase::RankOneHermitian, kappa.conj() / kappa.norm(), a)
    } else {
        // R = σ u v*: send u ↦ e₁ and v ↦ e₂ under A*.
        let m = cols(u, v);
        let a = m.inverse().expect("independent singular vectors").adjoint();
        (RCase::Tau(0.0), re(1.0 / sigma), a)
    }
}

fn rank_two(r: &CMat, snap: &mut Snap) -> Result<(RCase, C64, CMat)> {
    let cm = &r.adjoint().inverse()? * r;
    let cn = cm.norm();
    let (l1, l2, disc) = eig2(&cm);
    if snap.zero(disc.norm(), cn * cn) {
        let mu = cm.trace() / 2.0;
        let defect = (&cm - &CMat::identity(2).scale(mu)).norm() / cn;
        let scalar = if defect <= SILENT {
            true
        } else if defect <= JORDAN_SNAP {
            snap.boundary = true;
            true
        } else {
            false
        };
        return if scalar { Ok(hermitian_multiple(r, mu)) } else { cusp(r, &cm, mu) };
    }
    let ratio = (l1.norm() - l2.norm()).abs() / (l1.norm() + l2.norm());
    if !snap.zero(ratio, 1.0) {
        Ok(tau_case(r, &cm, l1, l2))
    } else {
        Ok(theta_case(r, &cm, l1, l2))
    }
}

fn hermitian_multiple(r: &CMat, mu: C64) -> (RCase, C64, CMat) {
    // C = e^{-2iφ} for R = e^{-iφ} H
    let phi = -mu.arg() / 2.0;
    let e = C64::from_polar(1.0, phi);
    let h = r.scale(e);
    let h = (&h + &h.adjoint()).scale(re(0.5));
    let eig = h.to_na().symmetric_eigen();
    let mut idx = [0usize, 1];
    idx.sort_by(|&x, &y| eig.eigenvalues[y].partial_cmp(&eig.eigenvalues[x]).unwrap());
    let vecs: Vec<[C64; 2]> = idx
        .iter()
        .map(|&k| {
            let s = eig.eigenvalues[k].abs().sqrt();
            [eig.eigenvectors[(0, k)] / s, eig.eigenvectors[(1, k)] / s]
        })
        .collect();
    let h1 = eig.eigenvalues[idx[0]];
    let h2 = eig.eigenvalues[idx[1]];
    let a = cols(vecs[0], vecs[1]);
    if h1 > 0.0 && h2 > 0.0 {
        (RCase::Theta(0.0), e, a)
    } else if h1 < 0.0 && h2 < 0.0 {
        (RCase::Theta(0.0), -e, a)
    } else {
        (RCase::Theta(PI), e, a)
    }
}

fn theta_case(r: &CMat, cm: &CMat, l1: C64, l2: C64) -> (RCase, C64, CMat) {
    let mut v1 = evec2(cm, l1);
    let mut v2 = evec2(cm, l2);
    let m1 = form_quad(&v1, r, &v1);
    let m2 = form_quad(&v2, r, &v2);
    let (s1, s2) = (m1.norm().sqrt(), m2.norm().sqrt());
    v1 = [v1[0] / s1, v1[1] / s1];
    v2 = [v2[0] / s2, v2[1] / s2];
    let (mut f1, mut f2) = (m1.arg(), m2.arg());
    let mut theta = (f2 - f1).rem_euclid(2.0 * PI);
    if theta > PI {
        std::mem::swap(&mut v1, &mut v2);
        std::mem::swap(&mut f1, &mut f2);
        theta = 2.0 * PI - theta;
    }
    (RCase::Theta(theta), C64::from_polar(1.0, -f1), cols(v1, v2))
}

fn tau_case(r: &CMat, cm: &CMat, l1: C64, l2: C64) -> (RCase, C64, CMat) {
    let (small, big) = if l1.norm() <= l2.norm() { (l1, l2) } else { (l2, l1) };
    let v1 = evec2(cm, small);
    let v2 = evec2(cm, big);
    let m12 = form_quad(&v1, r, &v2);
    let m21 = form_quad(&v2, r, &v1);
    let s2 = half_phase(m21 / m12);
    let v2 = [v2[0] * s2, v2[1] * s2];
    let m12 = m12 * s2;
    let tau = m21.norm() / m12.norm();
    (RCase::Tau(tau), m12.inv(), cols(v1, v2))
}

fn cusp(r: &CMat, cm: &CMat, mu: C64) -> Result<(RCase, C64, CMat)> {
    let c0 = C64::from_polar(1.0, -mu.arg() / 2.0);
    let r1 = r.scale(c0);
    let c1 = cm.scale(C64::from_polar(1.0, -mu.arg()));
    let k = &c1 - &CMat::identity(2);
    let col = if k[(0, 0)].norm_sqr() + k[(1, 0)].norm_sqr() >= k[(0, 1)].norm_sqr() + k[(1, 1)].norm_sqr() {
        0
    } else {
        1
    };
    let v = [k[(0, col)], k[(1, col)]];
    let mut w = [o(), o()];
    w[col] = re(1.0);
    let vm = cols(v, w);
    let m = &(&vm.adjoint() * &r1) * &vm;
    let m22 = m[(1, 1)];
    let t = m22.im;
    if t == 0.0 {
        return Err(NormalFormError::StabilizerSolveFailed("degenerate cusp basis".into()));
    }
    let y = I * (m22.re / (4.0 * t));
    let x = CMat::m2(re(1.0), y, o(), re(1.0));
    let winv = CMat::m2(re(1.0), o(), o(), C64::new(0.0, 2.0));
    let a = &(&vm * &x) * &winv;
    Ok((RCase::Cusp, c0 * (1.0 / (4.0 * t)), a))
}

// ---------------------------------------------------------------------------
// normalisation of P

fn finish(
    n_in: &CMat,
    p_in: &CMat,
    n: CMat,
    p: CMat,
    form: Form,
    moduli: Vec<Modulus>,
    c: C64,
    a: CMat,
    boundary: bool,
) -> Result<PNormal> {
    let mut witness = Witness { c, a, residual: 0.0 };
    witness.residual = pair_residual(&witness, n_in, p_in, &n, &p);
    let scale = 1.0 + n_in.norm() + p_in.norm();
    if !(witness.residual <= 1e-8 * scale) {
        return Err(NormalFormError::WitnessNotConverged {
            case: format!("{form:?}"),
            residual: witness.residual,
        });
    }
    Ok(PNormal { n, p, form, moduli, witness, boundary })
}

fn sym(a: C64, b: C64, d: C64) -> CMat {
    CMat::m2(a, b, b, d)
}

/// Normalises a symmetric `P` under the stabiliser of the normal form of `case`.
#[allow(non_snake_case)]
pub fn normalize_P(case: &RCase, p: &CMat) -> Result<PNormal> {
    check2(p, "P")?;
    let p = p.symmetrized().with_tol(p.tol());
    let n = case.n_matrix();
    let mut snap = Snap::new(p.tol());
    let ps = p.norm().max(1.0);
    let (a, b, d) = (p[(0, 0)], p[(0, 1)], p[(1, 1)]);
    match *case {
        RCase::Theta(t) if t == 0.0 => {
            let tk = takagi(&p)?;
            let sw = CMat::m2(o(), re(1.0), re(1.0), o());
            let am = &tk.u.conj() * &sw;
            let vals = tk.values();
            let (x, y) = (vals[1], vals[0]);
            let pn = sym(re(x), o(), re(y));
            let m = vec![Modulus::real("a", x), Modulus::real("d", y)];
            finish(&n, &p, n.clone(), pn, Form::DefiniteDiag, m, re(1.0), am, false)
        }
        RCase::Theta(t) if t == PI => indefinite(&n, &p, &mut snap),
        RCase::Theta(t) => {
            let za = snap.zero(a.norm(), ps);
            let zd = snap.zero(d.norm(), ps);
            let zb = snap.zero(b.norm(), ps);
            let mut al = if za { re(1.0) } else { half_phase(a.conj()) };
            let mut de = if zd { re(1.0) } else { half_phase(d.conj()) };
            let (form, pn, m);
            if !za && !zd {
                let mut bb = b * al * de;
                let s = half_plane_sign(bb, ps);
                al *= s;
                bb *= s;
                if zb {
                    bb = o();
                }
                form = Form::ThetaGeneric;
                pn = sym(re(a.norm()), bb, re(d.norm()));
                m = vec![
                    Modulus::real("theta", t),
                    Modulus::real("a", a.norm()),
                    Modulus::cx("b", bb),
                    Modulus::real("d", d.norm()),
                ];
            } else {
                // a vanishing diagonal entry frees one phase, which makes b ≥ 0
                if !zb {
                    let rot = phase(b * al * de).conj();
                    if za {
                        al *= rot;
                    } else {
                        de *= rot;
                    }
                }
                let bb = if zb { 0.0 } else { b.norm() };
                if za {
                    let dd = if zd { 0.0 } else { d.norm() };
                    form = Form::ThetaA0;
                    pn = sym(o(), re(bb), re(dd));
                    m = vec![Modulus::real("theta", t), Modulus::real("b", bb), Modulus::real("d", dd)];
                } else {
                    form = Form::ThetaD0;
                    pn = sym(re(a.norm()), re(bb), o());
                    m = vec![Modulus::real("theta", t), Modulus::real("a", a.norm()), Modulus::real("b", bb)];
                }
            }
            let am = CMat::diag(&[al, de]);
            finish(&n, &p, n.clone(), pn, form, m, re(1.0), am, snap.boundary)
        }
        RCase::Tau(t) if t > 0.0 => tau_normal(t, &n, &p, &mut snap),
        RCase::Tau(_) => nil_normal(&n, &p, &mut snap),
        RCase::Cusp => cusp_normal(&n, &p, &mut snap),
        RCase::RankOneHermitian => rank_one_normal(&n, &p, &mut snap),
        RCase::Zero => {
            let tk = takagi(&p)?;
            let vals = tk.values();
            let nz: Vec<bool> = vals.iter().map(|&s| !snap.zero(s, ps)).collect();
            let sc: Vec<C64> = vals.iter().zip(&nz).map(|(&s, &z)| re(if z { 1.0 / s.sqrt() } else { 1.0 })).collect();
            let am = &tk.u.conj() * &CMat::diag(&sc);
            let (form, pn) = match (nz[0], nz[1]) {
                (true, true) => (Form::ZeroId, CMat::identity(2)),
                (true, false) => (Form::ZeroE11, CMat::diag_real(&[1.0, 0.0])),
                _ => (Form::ZeroZero, CMat::zeros(2, 2)),
            };
            finish(&n, &p, n.clone(), pn, form, vec![], re(1.0), am, snap.boundary)
        }
    }
}

fn indefinite(n: &CMat, p: &CMat, snap: &mut Snap) -> Result<PNormal> {
    let ps = p.norm().max(1.0);
    let swap_n = CMat::m2(o(), re(1.0), re(1.0), o());
    if snap.zero(p.norm(), ps) {
        let m = vec![Modulus::real("a", 0.0), Modulus::real("d", 0.0)];
        return finish(n, p, n.clone(), CMat::zeros(2, 2), Form::IndefDiag, m, re(1.0), CMat::identity(2), snap.boundary);
    }
    let t = &(&(n * &p.conj()) * n) * p;
    let tn = p.norm() * p.norm();
    let (l1, l2, disc) = eig2(&t);
    if snap.zero(disc.norm(), tn * tn) {
        let lam = (t.trace() / 2.0).re;
        let defect = (&t - &CMat::identity(2).scale(re(lam))).norm() / tn;
        let scalar = if defect <= SILENT {
            true
        } else if defect <= JORDAN_SNAP {
            snap.boundary = true;
            true
        } else {
            false
        };
        let (n_out, p_out, form, m) = if scalar {
            if snap.zero(lam, tn) {
                let one = re(1.0);
                (n.clone(), sym(one, one, one), Form::IndefRankOne, vec![])
            } else if lam > 0.0 {
                let s = lam.sqrt();
                (n.clone(), sym(re(s), o(), re(s)), Form::IndefDiag, vec![Modulus::real("a", s), Modulus::real("d", s)])
            } else {
                let s = (-lam).sqrt();
                (n.clone(), sym(o(), re(s), o()), Form::IndefOff, vec![Modulus::real("b", s)])
            }
        } else {
            if lam <= 0.0 {
                return Err(NormalFormError::StabilizerSolveFailed(format!(
                    "Jordan block with non-positive eigenvalue {lam:.3e}"
                )));
            }
            let s = lam.sqrt();
            (swap_n.clone(), sym(o(), re(s), re(1.0)), Form::SwapJordan, vec![Modulus::real("b", s)])
        };
        let (c, a) = solve_group(n, p, &n_out, &p_out)?;
        return finish(n, p, n_out, p_out, form, m, c, a, snap.boundary);
    }
    if disc.re > 0.0 && disc.im.abs() <= 1e-6 * disc.re {
        // distinct real eigenvalues, N-orthogonal eigenvectors
        let mut v = [evec2(&t, l1), evec2(&t, l2)];
        let s: Vec<f64> = v.iter().map(|x| form_quad(x, n, x).re).collect();
        for k in 0..2 {
            let q = s[k].abs().sqrt();
            v[k] = [v[k][0] / q, v[k][1] / q];
        }
        if s[0] < 0.0 {
            v.swap(0, 1);
        }
        let a1 = cols(v[0], v[1]);
        let p1 = sym_congruence(re(1.0), &a1, p)?;
        let (q1, q2) = (p1[(0, 0)], p1[(1, 1)]);
        let a2 = CMat::diag(&[half_phase(q1.conj()), half_phase(q2.conj())]);
        let (mut x, mut y) = (q1.norm(), q2.norm());
        let mut c = re(1.0);
        let mut am = &a1 * &a2;
        if x > y {
            let sw = CMat::m2(o(), I, I, o());
            am = &am * &sw;
            c = re(-1.0);
            std::mem::swap(&mut x, &mut y);
        }
        let m = vec![Modulus::real("a", x), Modulus::real("d", y)];
        return finish(n, p, n.clone(), sym(re(x), o(), re(y)), Form::IndefDiag, m, c, am, snap.boundary);
    }
    // complex-conjugate pair: isotropic eigenvectors
    let (lm, lp) = if l1.im < l2.im { (l1, l2) } else { (l2, l1) };
    let vm = evec2(&t, lm);
    let vp = evec2(&t, lp);
    let kappa = form_quad(&vm, n, &vp).inv();
    let a1 = cols(vm, [vp[0] * kappa, vp[1] * kappa]);
    let p1 = sym_congruence(re(1.0), &a1, p)?;
    let q11 = p1[(0, 0)];
    let xi = half_phase(q11.conj());
    let am = &a1.scale(xi) * &CMat::diag(&[re(1.0 / q11.norm()), re(1.0)]);
    let dd = p1[(1, 1)] * q11.conj();
    let m = vec![Modulus::cx("d", dd)];
    finish(n, p, swap_n, sym(re(1.0), o(), dd), Form::SwapComplex, m, re(q11.norm()), am, snap.boundary)
}

fn tau_normal(t: f64, n: &CMat, p: &CMat, snap: &mut Snap) -> Result<PNormal> {
    // A = diag(e^{iψ}ρ, e^{iψ}), c = 1/ρ: P ↦ ω[[ρa, b], [b, d/ρ]], ω = e^{2iψ}
    let ps = p.norm().max(1.0);
    let (a, b, d) = (p[(0, 0)], p[(0, 1)], p[(1, 1)]);
    let (za, zb, zd) = (snap.zero(a.norm(), ps), snap.zero(b.norm(), ps), snap.zero(d.norm(), ps));
    let tm = Modulus::real("tau", t);
    let (omega, rho, form, pn, m);
    if !zb {
        omega = phase(b.conj());
        let bb = b.norm();
        if !za {
            let r0 = 1.0 / a.norm();
            let s = half_plane_sign(omega * a, ps);
            rho = s * r0;
            let aa = omega * a * rho;
            let dd = if zd { o() } else { omega * d / rho };
            form = Form::TauGeneric;
            pn = sym(aa, re(bb), dd);
            m = vec![tm, Modulus::unit("a", aa), Modulus::real("b", bb), Modulus::cx("d", dd)];
        } else if !zd {
            let s = half_plane_sign(omega * d, ps);
            rho = s * d.norm();
            let dd = omega * d / rho;
            form = Form::TauA0;
            pn = sym(o(), re(bb), dd);
            m = vec![tm, Modulus::real("b", bb), Modulus::unit("d", dd)];
        } else {
            rho = 1.0;
            form = Form::TauOff;
            pn = sym(o(), re(bb), o());
            m = vec![tm, Modulus::real("b", bb)];
        }
    } else if !za {
        omega = phase(a.conj());
        rho = 1.0 / a.norm();
        let dd = if zd { o() } else { a.conj() * d };
        form = Form::TauDiag;
        pn = sym(re(1.0), o(), dd);
        m = vec![tm, Modulus::cx("d", dd)];
    } else if !zd {
        omega = phase(d.conj());
        rho = d.norm();
        form = Form::TauE22;
        pn = sym(o(), o(), re(1.0));
        m = vec![tm];
    } else {
        omega = re(1.0);
        rho = 1.0;
        form = Form::TauZero;
        pn = CMat::zeros(2, 2);
        m = vec![tm];
    }
    let e = omega.sqrt();
    let am = CMat::diag(&[e * rho, e]);
    finish(n, p, n.clone(), pn, form, m, re(1.0 / rho), am, snap.boundary)
}

fn nil_normal(n: &CMat, p: &CMat, snap: &mut Snap) -> Result<PNormal> {
    // A = diag(α, δ), c = 1/(ᾱδ): P ↦ [[aα/δ̄, bδ/δ̄], [·, dδ²/(αδ̄)]]
    let ps = p.norm().max(1.0);
    let (a, b, d) = (p[(0, 0)], p[(0, 1)], p[(1, 1)]);
    let (za, zb, zd) = (snap.zero(a.norm(), ps), snap.zero(b.norm(), ps), snap.zero(d.norm(), ps));
    let (al, de, form, pn, m);
    if !zb {
        de = half_phase(b.conj());
        let bb = b.norm();
        if !zd {
            al = d * de * de / de.conj();
            let aa = if za { o() } else { a * al / de.conj() };
            form = Form::NilGeneric;
            pn = sym(aa, re(bb), re(1.0));
            m = vec![Modulus::cx("a", aa), Modulus::real("b", bb)];
        } else if !za {
            al = de.conj() / a;
            form = Form::NilD0;
            pn = sym(re(1.0), re(bb), o());
            m = vec![Modulus::real("b", bb)];
        } else {
            al = re(1.0);
            form = Form::NilOff;
            pn = sym(o(), re(bb), o());
            m = vec![Modulus::real("b", bb)];
        }
    } else if !zd {
        // a' = a·d·(δ/δ̄)²: choose the phase of δ to make it non-negative
        de = if za { re(1.0) } else { C64::from_polar(1.0, -(a * d).arg() / 4.0) };
        al = d * de * de / de.conj();
        let aa = if za { 0.0 } else { (a * d).norm() };
        form = Form::NilDiag;
        pn = sym(re(aa), o(), re(1.0));
        m = vec![Modulus::real("a", aa)];
    } else if !za {
        de = re(1.0);
        al = a.inv();
        form = Form::NilE11;
        pn = sym(re(1.0), o(), o());
        m = vec![];
    } else {
        de = re(1.0);
        al = re(1.0);
        form = Form::NilZero;
        pn = CMat::zeros(2, 2);
        m = vec![];
    }
    let c = (al.conj() * de).inv();
    finish(n, p, n.clone(), pn, form, m, c, CMat::diag(&[al, de]), snap.boundary)
}

fn cusp_normal(n: &CMat, p: &CMat, snap: &mut Snap) -> Result<PNormal> {
    // A = e^{iφ}[[1, is], [0, 1]], c = 1:
    // P ↦ e^{2iφ}[[a, b + isa], [·, d + 2isb − s²a]]
    let ps = p.norm().max(1.0);
    let (a, b, d) = (p[(0, 0)], p[(0, 1)], p[(1, 1)]);
    let (za, zb) = (snap.zero(a.norm(), ps), snap.zero(b.norm(), ps));
    let (w, s, form, m);
    let image = |w: C64, s: f64| {
        let is = I * s;
        (w * a, w * (b + is * a), w * (d + is * b * 2.0 - a * s * s))
    };
    if !za {
        w = phase(a.conj());
        s = -(w * b).im / a.norm();
        let (aa, bb, dd) = image(w, s);
        form = Form::CuspGeneric;
        m = vec![Modulus::real("a", aa.re), Modulus::real("b", bb.re), Modulus::cx("d", dd)];
    } else if !zb {
        w = phase(b.conj());
        s = -(w * d).im / (2.0 * b.norm());
        let (_, bb, dd) = image(w, s);
        form = Form::CuspA0;
        m = vec![Modulus::real("b", bb.re), Modulus::real("d", dd.re)];
    } else {
        w = phase(d.conj());
        s = 0.0;
        form = Form::CuspE22;
        m = vec![Modulus::real("d", d.norm())];
    }
    let (aa, bb, dd) = image(w, s);
    let pn = match form {
        Form::CuspGeneric => sym(re(aa.re), re(bb.re), dd),
        Form::CuspA0 => sym(o(), re(bb.re), re(dd.re)),
        _ => sym(o(), o(), re(dd.norm())),
    };
    let e = w.sqrt();
    let am = CMat::m2(e, e * I * s, o(), e);
    finish(n, p, n.clone(), pn, form, m, re(1.0), am, snap.boundary)
}

fn rank_one_normal(n: &CMat, p: &CMat, snap: &mut Snap) -> Result<PNormal> {
    // A = [[α, 0], [γ, δ]], |α| = 1, c = 1:
    // P ↦ [[aα² + 2bαγ + dγ², δ(bα + dγ)], [·, dδ²]]
    let ps = p.norm().max(1.0);
    let (a, b, d) = (p[(0, 0)], p[(0, 1)], p[(1, 1)]);
    let (zb, zd) = (snap.zero(b.norm(), ps), snap.zero(d.norm(), ps));
    let (al, ga, de, form, pn, m);
    if !zd {
        let q = a - b * b / d;
        al = half_phase(q.conj());
        ga = -b * al / d;
        de = d.sqrt().inv();
        let aa = q.norm();
        let aa = if snap.zero(aa, ps) { 0.0 } else { aa };
        form = Form::RankOneDiag;
        pn = sym(re(aa), o(), re(1.0));
        m = vec![Modulus::real("a", aa)];
    } else if !zb {
        al = re(1.0);
        ga = -a / (b * 2.0);
        de = b.inv();
        form = Form::RankOneOff;
        pn = sym(o(), re(1.0), o());
        m = vec![];
    } else {
        al = half_phase(a.conj());
        ga = o();
        de = re(1.0);
        let aa = if snap.zero(a.norm(), ps) { 0.0 } else { a.norm() };
        form = Form::RankOneE11;
        pn = sym(re(aa), o(), o());
        m = vec![Modulus::real("a", aa)];
    }
    finish(n, p, n.clone(), pn, form, m, re(1.0), CMat::m2(al, o(), ga, de), snap.boundary)
}

// ---------------------------------------------------------------------------
// numerical group solve

fn unpack(x: &DVector<f64>) -> (C64, CMat) {
    let c = C64::new(x[0], x[1]);
    let a = CMat::m2(
        C64::new(x[2], x[3]),
        C64::new(x[4], x[5]),
        C64::new(x[6], x[7]),
        C64::new(x[8], x[9]),
    );
    (c, a)
}

fn group_residual(x: &DVector<f64>, n: &CMat, p: &CMat, n_out: &CMat, p_out: &CMat) -> DVector<f64> {
    let (c, a) = unpack(x);
    let rn = &(&(&a.adjoint() * n) * &a).scale(c) - n_out;
    let pn = &(&(&a.transpose() * p) * &a).scale(c.conj()) - p_out;
    let mut f = DVector::zeros(16);
    for (k, z) in rn.entries().iter().chain(pn.entries()).enumerate() {
        f[2 * k] = z.re;
        f[2 * k + 1] = z.im;
    }
    f
}

/// Finds `(c, A)` with `c·Āᵀ·N·A = N'` and `c̄·Aᵀ·P·A = P'` by
/// Levenberg–Marquardt from deterministic random starts.
fn solve_group(n: &CMat, p: &CMat, n_out: &CMat, p_out: &CMat) -> Result<(C64, CMat)> {
    let scale = 1.0 + n.norm() + p.norm() + n_out.norm() + p_out.norm();
    let target = 1e-13 * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut best = f64::INFINITY;
    for _ in 0..200 {
        let mut x = DVector::from_fn(10, |_, _| rng.gen_range(-1.5..1.5));
        let mut f = group_residual(&x, n, p, n_out, p_out);
        let mut fnorm = f.norm();
        let mut lambda = 1e-3;
        for _ in 0..300 {
            if fnorm <= target {
                break;
            }
            let mut jac = DMatrix::zeros(16, 10);
            for k in 0..10 {
                let h = 1e-7 * x[k].abs().max(1.0);
                let mut xp = x.clone();
                xp[k] += h;
                let mut xm = x.clone();
                xm[k] -= h;
                let df = (group_residual(&xp, n, p, n_out, p_out) - group_residual(&xm, n, p, n_out, p_out)) / (2.0 * h);
                jac.set_column(k, &df);
            }
            let g = jac.transpose() * &f;
            let h = jac.transpose() * &jac;
            let mut improved = false;
            for _ in 0..20 {
                let mut hd = h.clone();
                for k in 0..10 {
                    hd[(k, k)] += lambda * (h[(k, k)] + 1e-12);
                }
                let Some(step) = hd.lu().solve(&(-&g)) else {
                    lambda *= 10.0;
                    continue;
                };
                let xn = &x + step;
                let fn_ = group_residual(&xn, n, p, n_out, p_out);
                if fn_.norm() < fnorm {
                    x = xn;
                    f = fn_;
                    fnorm = f.norm();
                    lambda = (lambda / 3.0).max(1e-15);
                    improved = true;
                    break;
                }
                lambda *= 4.0;
            }
            if !improved {
                break;
            }
        }
        best = best.min(fnorm);
        if fnorm <= 1e-10 * scale {
            let (c, a) = unpack(&x);
            if c.norm() > 0.0 && a.det().map(|z| z.norm() > 1e-12).unwrap_or(false) {
                return Ok((c, a));
            }
        }
    }
    Err(NormalFormError::StabilizerSolveFailed(format!("no group element found (best residual {best:.3e})")))
}

// ---------------------------------------------------------------------------
// pairs

fn table_row(case: RCase, pn: PNormal, witness: Witness, boundary: bool) -> Result<TableRow> {
    let n = pn.n.clone();
    let p = pn.p.clone();
    let gamma = build_gamma(&n, &p)?;
    let (det_gamma, det_sign) = crate::matcore::gamma_det_sign(&gamma)?;
    let sigma_n = if n.is_hermitian() { Some(hermitian_signature(&n)?.sigma()) } else { None };
    let sigma_gamma = if gamma.is_hermitian() { Some(hermitian_signature(&gamma)?.sigma()) } else { None };
    Ok(TableRow {
        r_case: case,
        form: pn.form,
        rho_n: rank(&n),
        sigma_n,
        rho_p: rank(&p),
        rho_np: rank(&n.hcat(&p)?),
        rho_gamma: rank(&gamma),
        sigma_gamma,
        det_gamma,
        det_sign,
        n,
        p,
        moduli: pn.moduli,
        witness,
        boundary,
    })
}

/// Classifies the quadratic part `(R, S)`; the pair acted on is `(R, 2S̄)`.
pub fn classify_pair(r: &CMat, s: &CMat) -> Result<TableRow> {
    check2(r, "R")?;
    check2(s, "S")?;
    let defect = s.symmetric_defect();
    if defect > s.tol() * s.norm().max(1.0) {
        return Err(MatError::NotSymmetric { defect }.into());
    }
    let p = s.symmetrized().conj().scale(re(2.0)).with_tol(s.tol());
    let rc = classify_R(r)?;
    let p1 = sym_congruence(rc.witness.c.conj(), &rc.witness.a, &p)?.with_tol(s.tol());
    let pn = normalize_P(&rc.case, &p1)?;
    let mut w = rc.witness.then(pn.witness.c, &pn.witness.a);
    w.residual = pair_residual(&w, r, &p, &pn.n, &pn.p);
    let scale = 1.0 + r.norm() + p.norm();
    if !(w.residual <= 1e-8 * scale) {
        return Err(NormalFormError::WitnessNotConverged { case: rc.case.label(), residual: w.residual });
    }
    let boundary = rc.boundary || pn.boundary;
    table_row(rc.case, pn, w, boundary)
}

/// `(ρ(Γ), σ(Γ))` for a flat quadratic part with `R` Hermitian.
pub fn flat_invariants(r: &CMat, p: &CMat) -> Result<(usize, usize)> {
    let dr = r.hermitian_defect();
    if dr > r.tol() * r.norm().max(1.0) {
        return Err(MatError::NotHermitian { defect: dr }.into());
    }
    let ds = p.symmetric_defect();
    if ds > p.tol() * p.norm().max(1.0) {
        return Err(MatError::NotSymmetric { defect: ds }.into());
    }
    let gamma = build_gamma(r, p)?;
    let sig = hermitian_signature(&gamma)?;
    Ok((rank(&gamma), sig.sigma()))
}

/// Normal form of the complexified quadric `Q(z, w) = zᵀRw + wᵀSw`-type
/// invariants, determined by `rank S` and `rank (R | S)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadric {
    W1SqW2Sq,
    Z2W2W1Sq,
    W1Sq,
    Z1W1Z2W2,
    Z1W1,
    Zero,
}

impl Quadric {
    pub fn expr(self) -> &'static str {
        match self {
            Quadric::W1SqW2Sq => "w1^2+w2^2",
            Quadric::Z2W2W1Sq => "z2w2+w1^2",
            Quadric::W1Sq => "w1^2",
            Quadric::Z1W1Z2W2 => "z1w1+z2w2",
            Quadric::Z1W1 => "z1w1",
            Quadric::Zero => "0",
        }
    }
}

/// Class of the complexification from `(rank S, rank (R|S))`.
pub fn complexification_class(r: &CMat, s: &CMat) -> Result<Quadric> {
    check2(r, "R")?;
    check2(s, "S")?;
    let rs = rank(s);
    let rrs = rank(&r.hcat(s)?);
    Ok(match (rs, rrs) {
        (2, _) => Quadric::W1SqW2Sq,
        (1, 2) => Quadric::Z2W2W1Sq,
        (1, _) => Quadric::W1Sq,
        (0, 2) => Quadric::Z1W1Z2W2,
        (0, 1) => Quadric::Z1W1,
        _ => Quadric::Zero,
    })
}

/// Simultaneous `*`-congruence normal form of Hermitian `(N, B)` with `N`
/// invertible and indefinite.
pub fn hermitian_pair_normalize(nh: &CMat, b: &CMat) -> Result<HermPairForm> {
    check2(nh, "N")?;
    check2(b, "B")?;
    for m in [nh, b] {
        let d = m.hermitian_defect();
        if d > m.tol() * m.norm().max(1.0) {
            return Err(MatError::NotHermitian { defect: d }.into());
        }
    }
    let sig = hermitian_signature(nh)?;
    if sig.p != 1 || sig.q != 1 {
        return Err(NormalFormError::NCongruenceFailed(format!(
            "N must be invertible and indefinite, signature ({}, {})",
            sig.p, sig.q
        )));
    }
    let t = &nh.inverse()? * b;
    let tn = t.norm().max(1e-300);
    let (l1, l2, disc) = eig2(&t);
    let tol = b.tol();
    if disc.norm() <= tol * tn * tn {
        let lam = (t.trace() / 2.0).re;
        if (&t - &CMat::identity(2).scale(re(lam))).norm() <= JORDAN_SNAP * tn.max(1.0) {
            return Ok(HermPairForm::DiagDiag(lam, -lam));
        }
        // B − kN is rank-one semidefinite; its sign is the sign characteristic
        let eps = if (b - &nh.scale(re(lam))).trace().re >= 0.0 { 1 } else { -1 };
        return Ok(HermPairForm::OffK { k: lam, eps });
    }
    if disc.re > 0.0 && disc.im.abs() <= 1e-6 * disc.re {
        let v1 = evec2(&t, l1);
        let v2 = evec2(&t, l2);
        let (n1, n2) = (form_quad(&v1, nh, &v1).re, form_quad(&v2, nh, &v2).re);
        let (k1, k2) = (form_quad(&v1, b, &v1).re / n1.abs(), form_quad(&v2, b, &v2).re / n2.abs());
        return Ok(if n1 > 0.0 { HermPairForm::DiagDiag(k1, k2) } else { HermPairForm::DiagDiag(k2, k1) });
    }
    let lp = if l1.im > 0.0 { l1 } else { l2 };
    Ok(HermPairForm::OffXY(lp.re, lp.im))
}

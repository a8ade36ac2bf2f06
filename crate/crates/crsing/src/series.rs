//! Truncated power series for defining functions `w = h(z, z̄)`.
//!
//! `Poly` is a sparse polynomial over an arbitrary list of slots, truncated
//! at a total degree; `PSeries` views a `Poly` over `2k` slots as a series
//! in `(z₁…z_k, z̄₁…z̄_k)`.  Coordinate changes are composed formally: the
//! tangential part is inverted by fixed-point iteration, each pass fixing
//! one more degree.

use crate::matcore::{build_gamma, lstsq, r, CMat, MatError, Sign, C64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use thiserror::Error;

pub const DEFAULT_TRUNC: usize = 4;
const CLEANUP_REL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series is not in standard position: {0}")]
    NotStandardPosition(String),
    #[error("truncation degree {0} is too low")]
    TruncationTooLow(usize),
    #[error("the linear part of the change is not invertible")]
    NonInvertibleC,
    #[error("invalid coordinate change: {0}")]
    InvalidChange(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("flattening stage failed: {0}")]
    StageFailed(String),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Sparse polynomial over `nslots` variables, truncated at total degree `trunc`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    nslots: usize,
    trunc: usize,
    terms: BTreeMap<Vec<u8>, C64>,
}

fn deg(e: &[u8]) -> usize {
    e.iter().map(|&x| x as usize).sum()
}

impl Poly {
    pub fn zero(nslots: usize, trunc: usize) -> Self {
        Poly { nslots, trunc, terms: BTreeMap::new() }
    }

    pub fn constant(nslots: usize, trunc: usize, v: C64) -> Self {
        let mut p = Self::zero(nslots, trunc);
        p.add_term(vec![0; nslots], v);
        p
    }

    pub fn var(nslots: usize, trunc: usize, i: usize) -> Self {
        let mut e = vec![0u8; nslots];
        e[i] = 1;
        let mut p = Self::zero(nslots, trunc);
        p.add_term(e, r(1.0));
        p
    }

    pub fn nslots(&self) -> usize {
        self.nslots
    }
    pub fn trunc(&self) -> usize {
        self.trunc
    }

    /// Adds `v·x^e`; terms beyond the truncation are dropped.
    pub fn add_term(&mut self, e: Vec<u8>, v: C64) {
        assert_eq!(e.len(), self.nslots, "exponent length");
        if deg(&e) > self.trunc || v == C64::new(0.0, 0.0) {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(slot) => {
                *slot += v;
                if *slot == C64::new(0.0, 0.0) {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, v);
            }
        }
    }

    pub fn coeff(&self, e: &[u8]) -> C64 {
        self.terms.get(e).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &C64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().map(|e| deg(e)).min()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().map(|e| deg(e)).max()
    }

    pub fn with_trunc(&self, trunc: usize) -> Poly {
        let mut p = Poly::zero(self.nslots, trunc);
        for (e, v) in &self.terms {
            p.add_term(e.clone(), *v);
        }
        p
    }

    /// Homogeneous part of degree `d`.
    pub fn part(&self, d: usize) -> Poly {
        let mut p = Poly::zero(self.nslots, self.trunc);
        for (e, v) in self.terms.iter().filter(|(e, _)| deg(e) == d) {
            p.terms.insert(e.clone(), *v);
        }
        p
    }

    /// Terms of degree at least `d`.
    pub fn from_degree(&self, d: usize) -> Poly {
        let mut p = Poly::zero(self.nslots, self.trunc);
        for (e, v) in self.terms.iter().filter(|(e, _)| deg(e) >= d) {
            p.terms.insert(e.clone(), *v);
        }
        p
    }

    pub fn scale(&self, s: C64) -> Poly {
        let mut p = Poly::zero(self.nslots, self.trunc);
        for (e, v) in &self.terms {
            p.add_term(e.clone(), v * s);
        }
        p
    }

    pub fn add(&self, o: &Poly) -> Poly {
        assert_eq!(self.nslots, o.nslots, "slot count");
        let mut p = self.with_trunc(self.trunc.min(o.trunc));
        for (e, v) in &o.terms {
            p.add_term(e.clone(), *v);
        }
        p
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(r(-1.0)))
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        assert_eq!(self.nslots, o.nslots, "slot count");
        let trunc = self.trunc.min(o.trunc);
        let mut acc: BTreeMap<Vec<u8>, C64> = BTreeMap::new();
        for (e1, v1) in &self.terms {
            let d1 = deg(e1);
            for (e2, v2) in &o.terms {
                if d1 + deg(e2) > trunc {
                    continue;
                }
                let e: Vec<u8> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *acc.entry(e).or_insert(C64::new(0.0, 0.0)) += v1 * v2;
            }
        }
        acc.retain(|_, v| *v != C64::new(0.0, 0.0));
        Poly { nslots: self.nslots, trunc, terms: acc }
    }

    /// `self(g₁, …, g_m)`; all substitutes share slot count and truncation.
    pub fn compose(&self, subs: &[Poly]) -> Poly {
        assert_eq!(subs.len(), self.nslots, "one substitute per slot");
        let ns = subs[0].nslots;
        let trunc = subs.iter().map(|g| g.trunc).min().unwrap();
        let maxe: Vec<usize> = (0..self.nslots)
            .map(|i| self.terms.keys().map(|e| e[i] as usize).max().unwrap_or(0))
            .collect();
        let mut pows: Vec<Vec<Poly>> = Vec::with_capacity(self.nslots);
        for (i, g) in subs.iter().enumerate() {
            let g = g.with_trunc(trunc);
            let mut v = vec![Poly::constant(ns, trunc, r(1.0))];
            for k in 1..=maxe[i] {
                let next = v[k - 1].mul(&g);
                v.push(next);
            }
            pows.push(v);
        }
        let mut out = Poly::zero(ns, trunc);
        for (e, coef) in &self.terms {
            let mut term = Poly::constant(ns, trunc, *coef);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = term.mul(&pows[i][k as usize]);
                }
            }
            for (te, tv) in term.terms {
                *out.terms.entry(te).or_insert(C64::new(0.0, 0.0)) += tv;
            }
        }
        out.terms.retain(|_, v| *v != C64::new(0.0, 0.0));
        out
    }

    pub fn eval(&self, x: &[C64]) -> C64 {
        assert_eq!(x.len(), self.nslots, "point dimension");
        self.terms
            .iter()
            .map(|(e, v)| e.iter().enumerate().fold(*v, |acc, (i, &k)| acc * x[i].powi(k as i32)))
            .sum()
    }

    /// Partial derivative with respect to slot `i`.
    pub fn diff(&self, i: usize) -> Poly {
        let mut p = Poly::zero(self.nslots, self.trunc);
        for (e, v) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                p.add_term(e2, v * r(e[i] as f64));
            }
        }
        p
    }

    /// Drops terms below `rel × max|coef|`.
    pub fn cleaned(&self, rel: f64) -> Poly {
        let thr = rel * self.max_abs();
        let mut p = self.clone();
        p.terms.retain(|_, v| v.norm() >= thr && v.norm() > 0.0);
        p
    }
}

/// Truncated series in `(z₁…z_k, z̄₁…z̄_k)`; exponent `(α, β)` with `α` on `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct PSeries {
    nvars: usize,
    poly: Poly,
}

impl PSeries {
    pub fn zero(nvars: usize, trunc: usize) -> Self {
        PSeries { nvars, poly: Poly::zero(2 * nvars, trunc) }
    }

    pub fn from_poly(nvars: usize, poly: Poly) -> Self {
        assert_eq!(poly.nslots(), 2 * nvars, "slot count");
        PSeries { nvars, poly }
    }

    /// Builds from `(α, β, coefficient)` triples.
    pub fn from_terms(nvars: usize, trunc: usize, terms: &[(&[u8], &[u8], C64)]) -> Self {
        let mut s = Self::zero(nvars, trunc);
        for (a, b, v) in terms {
            s.add_term(a, b, *v);
        }
        s
    }

    /// `zᵀQz + z̄ᵀRz + z̄ᵀSz̄` (row index of `R` is the conjugated variable).
    pub fn from_quadratic(q: &CMat, rm: &CMat, s: &CMat, trunc: usize) -> Self {
        let k = rm.rows();
        let mut h = Self::zero(k, trunc);
        for i in 0..k {
            for j in 0..k {
                let mut a = vec![0u8; k];
                a[i] += 1;
                a[j] += 1;
                h.add_term(&a, &vec![0u8; k], q[(i, j)]);
                h.add_term(&vec![0u8; k], &a, s[(i, j)]);
                let mut a1 = vec![0u8; k];
                let mut b1 = vec![0u8; k];
                a1[j] = 1;
                b1[i] = 1;
                h.add_term(&a1, &b1, rm[(i, j)]);
            }
        }
        h
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }
    pub fn trunc(&self) -> usize {
        self.poly.trunc()
    }
    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    fn key(&self, a: &[u8], b: &[u8]) -> Vec<u8> {
        assert!(a.len() == self.nvars && b.len() == self.nvars, "multi-index length");
        a.iter().chain(b).copied().collect()
    }

    pub fn add_term(&mut self, a: &[u8], b: &[u8], v: C64) {
        let k = self.key(a, b);
        self.poly.add_term(k, v);
    }

    pub fn coeff(&self, a: &[u8], b: &[u8]) -> C64 {
        self.poly.coeff(&self.key(a, b))
    }

    /// Iterates `(α, β, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (&[u8], &[u8], C64)> + '_ {
        self.poly.terms().map(move |(e, v)| (&e[..self.nvars], &e[self.nvars..], *v))
    }

    /// Complex conjugate series: `(α, β) ↦ (β, α)` with conjugated coefficients.
    pub fn conj(&self) -> PSeries {
        PSeries { nvars: self.nvars, poly: conj_slots(&self.poly, self.nvars) }
    }

    pub fn part(&self, d: usize) -> PSeries {
        PSeries { nvars: self.nvars, poly: self.poly.part(d) }
    }

    pub fn from_degree(&self, d: usize) -> PSeries {
        PSeries { nvars: self.nvars, poly: self.poly.from_degree(d) }
    }

    pub fn add(&self, o: &PSeries) -> PSeries {
        assert_eq!(self.nvars, o.nvars);
        PSeries { nvars: self.nvars, poly: self.poly.add(&o.poly) }
    }

    pub fn sub(&self, o: &PSeries) -> PSeries {
        assert_eq!(self.nvars, o.nvars);
        PSeries { nvars: self.nvars, poly: self.poly.sub(&o.poly) }
    }

    pub fn max_abs(&self) -> f64 {
        self.poly.max_abs()
    }

    /// Largest `|e^{αβ} − conj(e^{βα})|` over terms of degree `d`.
    pub fn reality_defect(&self, d: usize) -> f64 {
        let p = self.part(d);
        p.sub(&p.conj()).max_abs()
    }

    /// Zero constant and linear parts (up to `tol × max|coef|`).
    pub fn is_standard_position(&self, tol: f64) -> bool {
        self.low_order_defect() <= tol * self.max_abs().max(1.0)
    }

    fn low_order_defect(&self) -> f64 {
        self.poly.terms().filter(|(e, _)| deg(e) <= 1).map(|(_, v)| v.norm()).fold(0.0, f64::max)
    }

    fn require_standard(&self) -> Result<(), SeriesError> {
        let d = self.low_order_defect();
        if d > 1e-10 * self.max_abs().max(1.0) {
            return Err(SeriesError::NotStandardPosition(format!("constant/linear coefficient of size {d:.3e}")));
        }
        Ok(())
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        let x: Vec<C64> = z.iter().copied().chain(z.iter().map(|v| v.conj())).collect();
        self.poly.eval(&x)
    }
}

fn conj_slots(p: &Poly, k: usize) -> Poly {
    let mut out = Poly::zero(p.nslots(), p.trunc());
    for (e, v) in p.terms() {
        let e2: Vec<u8> = e[k..].iter().chain(&e[..k]).copied().collect();
        out.add_term(e2, v.conj());
    }
    out
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    alpha: Vec<u8>,
    beta: Vec<u8>,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct PSeriesJson {
    nvars: usize,
    trunc: usize,
    terms: Vec<TermJson>,
}

impl Serialize for PSeries {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PSeriesJson {
            nvars: self.nvars,
            trunc: self.trunc(),
            terms: self
                .terms()
                .map(|(a, b, v)| TermJson { alpha: a.to_vec(), beta: b.to_vec(), re: v.re, im: v.im })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PSeries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = PSeriesJson::deserialize(d)?;
        if j.nvars == 0 {
            return Err(serde::de::Error::custom("nvars must be positive"));
        }
        let mut s = PSeries::zero(j.nvars, j.trunc);
        for t in j.terms {
            if t.alpha.len() != j.nvars || t.beta.len() != j.nvars {
                return Err(serde::de::Error::custom("multi-index length differs from nvars"));
            }
            if deg(&t.alpha) + deg(&t.beta) > j.trunc {
                return Err(serde::de::Error::custom("term exceeds truncation degree"));
            }
            s.add_term(&t.alpha, &t.beta, C64::new(t.re, t.im));
        }
        Ok(s)
    }
}

/// `z̃ = C·z + p(z)` on `Cⁿ` with `z_n = w` the graph coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoloChange {
    pub c: CMat,
    /// Holomorphic parts: series over `n` variables with `β = 0`, degree ≥ 2.
    pub p: Vec<PSeries>,
}

impl HoloChange {
    pub fn identity(n: usize, trunc: usize) -> Self {
        HoloChange { c: CMat::identity(n), p: (0..n).map(|_| PSeries::zero(n, trunc)).collect() }
    }

    pub fn linear(cm: CMat, trunc: usize) -> Self {
        let n = cm.rows();
        HoloChange { c: cm, p: (0..n).map(|_| PSeries::zero(n, trunc)).collect() }
    }

    pub fn n(&self) -> usize {
        self.c.rows()
    }

    pub fn c_nn(&self) -> C64 {
        let n = self.n();
        self.c[(n - 1, n - 1)]
    }

    /// Adds `v·z^α` to component `i`.
    pub fn add_p(&mut self, i: usize, alpha: &[u8], v: C64) {
        let n = self.n();
        self.p[i].add_term(alpha, &vec![0u8; n], v);
    }

    /// The `(n−1)×(n−1)` block `A` of `C⁻¹`, which acts on the quadratic part.
    pub fn a_block(&self) -> Result<CMat, SeriesError> {
        let n = self.n();
        let inv = self.c.inverse().map_err(|_| SeriesError::NonInvertibleC)?;
        let mut a = CMat::zeros(n - 1, n - 1);
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                a[(i, j)] = inv[(i, j)];
            }
        }
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), SeriesError> {
        let n = self.n();
        if n < 2 || !self.c.is_square() {
            return Err(SeriesError::InvalidChange("C must be square with n >= 2".into()));
        }
        if self.p.len() != n {
            return Err(SeriesError::InvalidChange(format!("expected {n} polynomial components")));
        }
        for j in 0..n - 1 {
            if self.c[(n - 1, j)].norm() != 0.0 {
                return Err(SeriesError::InvalidChange("last row of C must be (0,…,0,c_nn)".into()));
            }
        }
        if self.c_nn().norm() == 0.0 {
            return Err(SeriesError::NonInvertibleC);
        }
        let mut l = CMat::zeros(n - 1, n - 1);
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                l[(i, j)] = self.c[(i, j)];
            }
        }
        l.inverse().map_err(|_| SeriesError::NonInvertibleC)?;
        for (i, p) in self.p.iter().enumerate() {
            if p.nvars() != n {
                return Err(SeriesError::InvalidChange(format!("p_{} has {} variables", i + 1, p.nvars())));
            }
            for (a, b, _) in p.terms() {
                if b.iter().any(|&x| x != 0) {
                    return Err(SeriesError::InvalidChange(format!("p_{} is not holomorphic", i + 1)));
                }
                if deg(a) < 2 {
                    return Err(SeriesError::InvalidChange(format!("p_{} has terms of degree < 2", i + 1)));
                }
            }
        }
        Ok(())
    }

    fn holo_polys(&self) -> Vec<Poly> {
        let n = self.n();
        self.p
            .iter()
            .map(|s| {
                let mut q = Poly::zero(n, s.trunc());
                for (a, _, v) in s.terms() {
                    q.add_term(a.to_vec(), v);
                }
                q
            })
            .collect()
    }

    /// `other ∘ self`: first apply `self`, then `other`.
    pub fn then(&self, other: &HoloChange) -> HoloChange {
        let n = self.n();
        let trunc = self.p.iter().chain(&other.p).map(|s| s.trunc()).min().unwrap_or(DEFAULT_TRUNC);
        let p1 = self.holo_polys();
        let p2 = other.holo_polys();
        // first map as polynomials in n slots
        let first: Vec<Poly> = (0..n)
            .map(|i| {
                let mut f = p1[i].with_trunc(trunc);
                for j in 0..n {
                    f = f.add(&Poly::var(n, trunc, j).scale(self.c[(i, j)]));
                }
                f
            })
            .collect();
        let c = &other.c * &self.c;
        let mut out = HoloChange::linear(c, trunc);
        for i in 0..n {
            let mut q = p2[i].with_trunc(trunc).compose(&first);
            for j in 0..n {
                q = q.add(&p1[j].with_trunc(trunc).scale(other.c[(i, j)]));
            }
            for (e, v) in q.terms() {
                if deg(e) >= 2 {
                    out.p[i].add_term(e, &vec![0u8; n], *v);
                }
            }
        }
        out
    }
}

/// Quadratic coefficient matrices of a series in standard position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadData {
    pub q: CMat,
    pub r: CMat,
    pub s: CMat,
}

#[allow(non_snake_case)]
pub fn extract_QRS(h: &PSeries) -> Result<QuadData, SeriesError> {
    h.require_standard()?;
    let k = h.nvars();
    let mut q = CMat::zeros(k, k);
    let mut rm = CMat::zeros(k, k);
    let mut s = CMat::zeros(k, k);
    for (a, b, v) in h.terms() {
        match (deg(a), deg(b)) {
            (2, 0) => add_sym(&mut q, a, v),
            (0, 2) => add_sym(&mut s, b, v),
            (1, 1) => {
                let j = a.iter().position(|&x| x == 1).unwrap();
                let i = b.iter().position(|&x| x == 1).unwrap();
                rm[(i, j)] += v;
            }
            _ => {}
        }
    }
    Ok(QuadData { q, r: rm, s })
}

fn add_sym(m: &mut CMat, e: &[u8], v: C64) {
    let idx: Vec<usize> = e.iter().enumerate().flat_map(|(i, &x)| std::iter::repeat(i).take(x as usize)).collect();
    let (i, j) = (idx[0], idx[1]);
    if i == j {
        m[(i, i)] += v;
    } else {
        m[(i, j)] += v * 0.5;
        m[(j, i)] += v * 0.5;
    }
}

/// Replaces `Q` by `S̄` via `w̃ = w + zᵀ(S̄ − Q)z`; higher terms are untouched.
#[allow(non_snake_case)]
pub fn eliminate_Q(h: &PSeries) -> Result<PSeries, SeriesError> {
    let qd = extract_QRS(h)?;
    let k = h.nvars();
    let target = qd.s.conj();
    let mut out = h.clone();
    let zero = vec![0u8; k];
    for i in 0..k {
        for j in i..k {
            let mut a = vec![0u8; k];
            a[i] += 1;
            a[j] += 1;
            let want = if i == j { target[(i, i)] } else { target[(i, j)] + target[(j, i)] };
            let have = h.coeff(&a, &zero);
            if want != have {
                out.add_term(&a, &zero, want - have);
                // pin the exact value rather than accumulate roundoff
                let key = out.key(&a, &zero);
                out.poly.terms.remove(&key);
                if want != C64::new(0.0, 0.0) {
                    out.poly.terms.insert(key, want);
                }
            }
        }
    }
    Ok(out)
}

/// Defining function of the same germ in the coordinates `z̃ = t(z)`.
pub fn apply_change(h: &PSeries, t: &HoloChange) -> Result<PSeries, SeriesError> {
    let trunc = h.trunc();
    if trunc < 2 {
        return Err(SeriesError::TruncationTooLow(trunc));
    }
    t.validate()?;
    h.require_standard()?;
    let k = h.nvars();
    let n = t.n();
    if n != k + 1 {
        return Err(SeriesError::InvalidChange(format!("change acts on C^{n}, series has {k} base variables")));
    }
    let m = 2 * k;
    let hp = h.poly().clone();
    let zvars: Vec<Poly> = (0..k).map(|j| Poly::var(m, trunc, j)).collect();
    let mut graph: Vec<Poly> = zvars.clone();
    graph.push(hp.clone());
    let pz: Vec<Poly> = t.holo_polys().iter().map(|p| p.with_trunc(trunc).compose(&graph)).collect();

    // nonlinear part of the tangential map
    let nl: Vec<Poly> = (0..k).map(|j| hp.scale(t.c[(j, n - 1)]).add(&pz[j])).collect();
    let w_new = hp.scale(t.c_nn()).add(&pz[n - 1]);

    let mut l = CMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            l[(i, j)] = t.c[(i, j)];
        }
    }
    let linv = l.inverse().map_err(|_| SeriesError::NonInvertibleC)?;

    let lin = |v: &[Poly]| -> Vec<Poly> {
        (0..k)
            .map(|i| {
                let mut acc = Poly::zero(m, trunc);
                for j in 0..k {
                    acc = acc.add(&v[j].scale(linv[(i, j)]));
                }
                acc
            })
            .collect()
    };
    let mut phi = lin(&zvars);
    for _ in 0..trunc {
        let subs: Vec<Poly> = phi.iter().cloned().chain(phi.iter().map(|p| conj_slots(p, k))).collect();
        let rhs: Vec<Poly> = (0..k).map(|j| zvars[j].sub(&nl[j].compose(&subs))).collect();
        phi = lin(&rhs);
    }
    let subs: Vec<Poly> = phi.iter().cloned().chain(phi.iter().map(|p| conj_slots(p, k))).collect();
    let out = w_new.compose(&subs).cleaned(CLEANUP_REL);
    Ok(PSeries::from_poly(k, out))
}

/// Real matrix `Hf¹ + J·Hf²` built from second Wirtinger derivatives at 0.
pub fn hessian_matrix(h: &PSeries) -> Result<DMatrix<f64>, SeriesError> {
    h.require_standard()?;
    let k = h.nvars();
    let m = 2 * k;
    // second Wirtinger derivatives over slots (z…, z̄…)
    let mut d = vec![vec![C64::new(0.0, 0.0); m]; m];
    for (e, v) in h.poly().terms().filter(|(e, _)| deg(e) == 2) {
        let idx: Vec<usize> = e.iter().enumerate().flat_map(|(i, &x)| std::iter::repeat(i).take(x as usize)).collect();
        let (s, t) = (idx[0], idx[1]);
        if s == t {
            d[s][s] += v * 2.0;
        } else {
            d[s][t] += v;
            d[t][s] += v;
        }
    }
    // entries involve only h_{z_k z̄_j} and h_{z̄_j z̄_k}, never h_{z_j z_k}
    let mut out = DMatrix::<f64>::zeros(m, m);
    for j in 0..k {
        for kk in 0..k {
            let mixed = d[kk][k + j];
            let anti = d[k + j][k + kk];
            out[(2 * j, 2 * kk)] = 2.0 * (mixed + anti).re;
            out[(2 * j, 2 * kk + 1)] = 2.0 * (anti - mixed).im;
            out[(2 * j + 1, 2 * kk)] = 2.0 * (mixed + anti).im;
            out[(2 * j + 1, 2 * kk + 1)] = 2.0 * (mixed - anti).re;
        }
    }
    Ok(out)
}

/// Determinant of `Hf¹ + J·Hf²` and its sign (the intersection index).
pub fn hessian_index(h: &PSeries) -> Result<(f64, Sign), SeriesError> {
    let hm = hessian_matrix(h)?;
    let det = hm.determinant();
    let scale = hm.norm().powi(hm.nrows() as i32);
    Ok((det, Sign::of(det, 1e-9 * scale.max(f64::MIN_POSITIVE))))
}

/// `Γ(R, 2S̄)` of the quadratic part.
pub fn gamma_of(h: &PSeries) -> Result<CMat, SeriesError> {
    let qd = extract_QRS(h)?;
    Ok(build_gamma(&qd.r, &qd.s.conj().scale(r(2.0)))?)
}

/// Coefficient `e^{a₁b₁a₂b₂}` of `z₁^{a₁} z̄₁^{b₁} z₂^{a₂} z̄₂^{b₂}`.
pub fn e2(h: &PSeries, idx: [u8; 4]) -> C64 {
    h.coeff(&[idx[0], idx[2]], &[idx[1], idx[3]])
}

fn ename(idx: [u8; 4]) -> String {
    format!("e{}{}{}{}", idx[0], idx[1], idx[2], idx[3])
}

/// The reality conditions required for cubic flattening, as `(lhs, rhs)` index pairs
/// meaning `e^{lhs} = conj(e^{rhs})`.
pub const CUBIC_CONDITIONS: [([u8; 4], [u8; 4]); 6] = [
    ([1, 2, 0, 0], [2, 1, 0, 0]),
    ([0, 0, 2, 1], [0, 0, 1, 2]),
    ([1, 1, 1, 0], [1, 1, 0, 1]),
    ([2, 0, 0, 1], [0, 2, 1, 0]),
    ([1, 0, 1, 1], [0, 1, 1, 1]),
    ([1, 0, 0, 2], [0, 1, 2, 0]),
];

const MIXED: [[u8; 4]; 8] = [
    [1, 1, 1, 0],
    [1, 1, 0, 1],
    [2, 0, 0, 1],
    [0, 2, 1, 0],
    [1, 0, 1, 1],
    [0, 1, 1, 1],
    [1, 0, 0, 2],
    [0, 1, 2, 0],
];

/// The four monomials that survive flattening.
pub const FLAT_CUBIC: [[u8; 4]; 4] = [[2, 0, 1, 0], [0, 2, 0, 1], [1, 0, 2, 0], [0, 1, 0, 2]];

#[derive(Clone, Copy, Debug)]
enum Param {
    C(usize, usize),
    P(usize, [u8; 3]),
}

fn change_from(params: &[Param], x: &[f64], trunc: usize) -> HoloChange {
    let mut t = HoloChange::identity(3, trunc);
    for (i, p) in params.iter().enumerate() {
        let v = C64::new(x[2 * i], x[2 * i + 1]);
        match *p {
            Param::C(a, b) => t.c[(a, b)] += v,
            Param::P(comp, alpha) => t.add_p(comp, &alpha, v),
        }
    }
    t
}

/// Solves one real-affine stage `targets(apply_change(h, t(x))) = 0` by least squares.
fn solve_stage(
    h: &PSeries,
    params: &[Param],
    targets: &dyn Fn(&PSeries) -> Vec<C64>,
    label: &str,
) -> Result<(PSeries, HoloChange), SeriesError> {
    let trunc = h.trunc();
    let nx = 2 * params.len();
    let zero = vec![0.0; nx];
    let f0 = targets(&apply_change(h, &change_from(params, &zero, trunc))?);
    let nr = 2 * f0.len();
    let scale = h.part(3).max_abs().max(1.0);
    let mut jac = DMatrix::<f64>::zeros(nr, nx);
    for col in 0..nx {
        let mut x = zero.clone();
        x[col] = 1.0;
        let f = targets(&apply_change(h, &change_from(params, &x, trunc))?);
        for (i, (a, b)) in f.iter().zip(&f0).enumerate() {
            let d = a - b;
            jac[(2 * i, col)] = d.re;
            jac[(2 * i + 1, col)] = d.im;
        }
    }
    let rhs = DVector::from_iterator(nr, f0.iter().flat_map(|z| [-z.re, -z.im]));
    let x = lstsq(&jac, &rhs, 1e-12);
    let t = change_from(params, x.as_slice(), trunc);
    let out = apply_change(h, &t)?;
    let res = targets(&out).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if res > 1e-10 * scale {
        return Err(SeriesError::StageFailed(format!("{label}: residual {res:.3e} after solve")));
    }
    Ok((out, t))
}

fn check_mixed_reality(h: &PSeries, after: &str) -> Result<(), SeriesError> {
    let scale = h.part(3).max_abs().max(1.0);
    for (lhs, rhs) in CUBIC_CONDITIONS[2..].iter() {
        if (e2(h, *lhs) - e2(h, *rhs).conj()).norm() > 1e-10 * scale {
            return Err(SeriesError::StageFailed(format!(
                "{} = conj({}) no longer holds after {after}",
                ename(*lhs),
                ename(*rhs)
            )));
        }
    }
    Ok(())
}

/// Flat quadratic parameters `(γ₁, γ₂)` if `h` has the required quadratic part.
fn flat_gammas(h: &PSeries) -> Result<(f64, f64), SeriesError> {
    if h.nvars() != 2 {
        return Err(SeriesError::PreconditionViolated("cubic flattening needs two base variables".into()));
    }
    let qd = extract_QRS(h)?;
    let g1 = qd.s[(0, 0)];
    let g2 = qd.s[(1, 1)];
    let want = PSeries::from_quadratic(
        &CMat::diag(&[g1, g2]),
        &CMat::identity(2),
        &CMat::diag(&[g1, g2]),
        h.trunc(),
    );
    if h.part(2).sub(&want).max_abs() > 1e-12 || g1.im.abs() > 1e-12 || g2.im.abs() > 1e-12 {
        return Err(SeriesError::PreconditionViolated(
            "quadratic part is not z1z̄1 + γ1(z1² + z̄1²) + z2z̄2 + γ2(z2² + z̄2²)".into(),
        ));
    }
    let (g1, g2) = (g1.re, g2.re);
    if !(0.0 < g1 && g1 < g2) {
        return Err(SeriesError::PreconditionViolated(format!("need 0 < γ1 < γ2, got γ1={g1}, γ2={g2}")));
    }
    for g in [g1, g2] {
        if (g - 0.5).abs() < 1e-9 {
            return Err(SeriesError::PreconditionViolated("γ = 1/2 is excluded".into()));
        }
    }
    Ok((g1, g2))
}

/// Brings the cubic part into the real four-monomial normal form
/// `ē₀₂₀₁ z₁²z₂ + e₀₂₀₁ z̄₁²z̄₂ + ē₀₁₀₂ z₁z₂² + e₀₁₀₂ z̄₁z̄₂²`.
///
/// Three stages: cubic terms in `z₁, z̄₁` only (via `c₁₃, p₁²⁰, p₃³⁰⁰`),
/// then `z₂, z̄₂` only (via `c₂₃, p₂⁰², p₃⁰³⁰`), then the eight mixed
/// coefficients and the holomorphic pair (via `p₁¹¹, p₁⁰², p₂²⁰, p₂¹¹,
/// p₃²¹⁰, p₃¹²⁰`).  `p₃` never receives `z₁z₃` or `z₂z₃` terms.  Every stage
/// is affine in its parameters, so it is solved by least squares and its
/// residual checked.
pub fn cubic_flatten(h: &PSeries) -> Result<(PSeries, HoloChange), SeriesError> {
    if h.trunc() < 3 {
        return Err(SeriesError::TruncationTooLow(h.trunc()));
    }
    flat_gammas(h)?;
    let scale = h.part(3).max_abs().max(1.0);
    for (lhs, rhs) in CUBIC_CONDITIONS {
        if (e2(h, lhs) - e2(h, rhs).conj()).norm() > 1e-10 * scale {
            return Err(SeriesError::PreconditionViolated(format!("{} = conj({}) fails", ename(lhs), ename(rhs))));
        }
    }
    let quad = h.part(2);

    let z1_only: [[u8; 4]; 4] = [[3, 0, 0, 0], [2, 1, 0, 0], [1, 2, 0, 0], [0, 3, 0, 0]];
    let z2_only: [[u8; 4]; 4] = [[0, 0, 3, 0], [0, 0, 2, 1], [0, 0, 1, 2], [0, 0, 0, 3]];

    let t1_targets = move |s: &PSeries| z1_only.iter().map(|&i| e2(s, i)).collect::<Vec<_>>();
    let (h1, t1) = solve_stage(
        h,
        &[Param::C(0, 2), Param::P(0, [2, 0, 0]), Param::P(2, [3, 0, 0])],
        &t1_targets,
        "z1-only cubic terms",
    )?;
    check_mixed_reality(&h1, "the z1 stage")?;

    let t2_targets = move |s: &PSeries| z2_only.iter().chain(&z1_only).map(|&i| e2(s, i)).collect::<Vec<_>>();
    let (h2, t2) = solve_stage(
        &h1,
        &[Param::C(1, 2), Param::P(1, [0, 2, 0]), Param::P(2, [0, 3, 0])],
        &t2_targets,
        "z2-only cubic terms",
    )?;
    check_mixed_reality(&h2, "the z2 stage")?;

    let t3_targets = |s: &PSeries| {
        let mut v: Vec<C64> = MIXED.iter().map(|&i| e2(s, i)).collect();
        v.push(e2(s, [2, 0, 1, 0]) - e2(s, [0, 2, 0, 1]).conj());
        v.push(e2(s, [1, 0, 2, 0]) - e2(s, [0, 1, 0, 2]).conj());
        v
    };
    let (h3, t3) = solve_stage(
        &h2,
        &[
            Param::P(0, [1, 1, 0]),
            Param::P(0, [0, 2, 0]),
            Param::P(1, [2, 0, 0]),
            Param::P(1, [1, 1, 0]),
            Param::P(2, [2, 1, 0]),
            Param::P(2, [1, 2, 0]),
        ],
        &t3_targets,
        "mixed cubic terms",
    )?;

    let qdiff = h3.part(2).sub(&quad).max_abs();
    if qdiff > 1e-12 {
        return Err(SeriesError::StageFailed(format!("quadratic part moved by {qdiff:.3e}")));
    }
    // restore the (mathematically unchanged) quadratic part exactly and drop
    // the verified-negligible cubic monomials outside the normal form
    let mut out = h3.from_degree(4).add(&quad);
    let cubic = h3.part(3);
    let cscale = cubic.max_abs().max(1.0);
    for (a, b, v) in cubic.terms() {
        let idx = [a[0], b[0], a[1], b[1]];
        if FLAT_CUBIC.contains(&idx) {
            out.add_term(a, b, v);
        } else if v.norm() > 1e-10 * cscale {
            return Err(SeriesError::StageFailed(format!("{} = {v} survives", ename(idx))));
        }
    }
    let t = t1.then(&t2).then(&t3);
    Ok((out, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{c, star_congruence, I};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rc(rng: &mut ChaCha8Rng) -> C64 {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    fn rand_series(rng: &mut ChaCha8Rng, trunc: usize) -> PSeries {
        let mut h = PSeries::zero(2, trunc);
        for a1 in 0..=trunc as u8 {
            for a2 in 0..=trunc as u8 {
                for b1 in 0..=trunc as u8 {
                    for b2 in 0..=trunc as u8 {
                        let d = (a1 + a2 + b1 + b2) as usize;
                        if (2..=trunc).contains(&d) {
                            h.add_term(&[a1, a2], &[b1, b2], rc(rng));
                        }
                    }
                }
            }
        }
        h
    }

    fn rand_change(rng: &mut ChaCha8Rng, trunc: usize) -> HoloChange {
        let mut cm = CMat::identity(3);
        for i in 0..2 {
            for j in 0..3 {
                cm[(i, j)] += rc(rng) * 0.3;
            }
        }
        cm[(2, 2)] = r(1.0) + rc(rng) * 0.3;
        let mut t = HoloChange::linear(cm, trunc);
        for comp in 0..3 {
            for a in 0..=trunc as u8 {
                for b in 0..=trunc as u8 {
                    for w in 0..=trunc as u8 {
                        let d = (a + b + w) as usize;
                        if (2..=trunc).contains(&d) {
                            t.add_p(comp, &[a, b, w], rc(rng) * 0.3);
                        }
                    }
                }
            }
        }
        t
    }

    fn max_diff(a: &PSeries, b: &PSeries) -> f64 {
        a.sub(b).max_abs()
    }

    #[test]
    fn extract_examples() {
        let h = PSeries::from_terms(2, 4, &[(&[1, 0], &[1, 0], r(1.0)), (&[0, 1], &[0, 1], r(1.0))]);
        let q = extract_QRS(&h).unwrap();
        assert!(q.q.is_zero() && q.s.is_zero());
        assert_eq!(q.r, CMat::identity(2));

        let g = 0.3;
        let h = PSeries::from_terms(1, 4, &[(&[2], &[0], r(g)), (&[0], &[2], r(g)), (&[1], &[1], r(1.0))]);
        let q = extract_QRS(&h).unwrap();
        assert_eq!((q.q[(0, 0)], q.r[(0, 0)], q.s[(0, 0)]), (r(g), r(1.0), r(g)));

        let h = PSeries::from_terms(2, 4, &[(&[2, 1], &[0, 0], r(2.0)), (&[1, 0], &[1, 1], r(-1.0))]);
        let q = extract_QRS(&h).unwrap();
        assert!(q.q.is_zero() && q.r.is_zero() && q.s.is_zero());

        let bad = PSeries::from_terms(2, 4, &[(&[1, 0], &[0, 0], r(1.0))]);
        assert!(matches!(extract_QRS(&bad), Err(SeriesError::NotStandardPosition(_))));
    }

    #[test]
    fn quadratic_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = || CMat::m2(rc(&mut rng), rc(&mut rng), rc(&mut rng), rc(&mut rng));
        let (q, rm, s) = (m().symmetrized(), m(), m().symmetrized());
        let qd = extract_QRS(&PSeries::from_quadratic(&q, &rm, &s, 3)).unwrap();
        assert!(qd.q.approx_eq(&q, 1e-15) && qd.r.approx_eq(&rm, 1e-15) && qd.s.approx_eq(&s, 1e-15));
    }

    #[test]
    fn eliminate_q_examples() {
        let h = PSeries::from_terms(1, 4, &[(&[1], &[1], r(1.0))]);
        assert_eq!(eliminate_Q(&h).unwrap(), h);

        let h = PSeries::from_terms(1, 4, &[(&[2], &[0], r(1.0)), (&[1], &[1], r(1.0))]);
        assert_eq!(eliminate_Q(&h).unwrap(), PSeries::from_terms(1, 4, &[(&[1], &[1], r(1.0))]));

        let h = PSeries::from_terms(1, 4, &[(&[0], &[2], r(1.0)), (&[1], &[1], r(1.0))]);
        let out = eliminate_Q(&h).unwrap();
        let qd = extract_QRS(&out).unwrap();
        assert_eq!(qd.q, qd.s.conj());
        assert_eq!(out.coeff(&[2], &[0]), r(1.0));
    }

    #[test]
    fn eliminate_q_keeps_higher_terms_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let h = rand_series(&mut rng, 4);
            let out = eliminate_Q(&h).unwrap();
            assert_eq!(out.from_degree(3), h.from_degree(3));
            let qd = extract_QRS(&out).unwrap();
            assert!(qd.q.approx_eq(&qd.s.conj(), 1e-15));
        }
    }

    #[test]
    fn apply_identity_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = rand_series(&mut rng, 4);
        let out = apply_change(&h, &HoloChange::identity(3, 4)).unwrap();
        assert!(max_diff(&out, &h) < 1e-15);
    }

    #[test]
    fn apply_pure_q_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = rand_series(&mut rng, 4);
        let mut t = HoloChange::identity(3, 4);
        let qp = [[c(0.5, 0.1), c(-0.2, 0.3)], [c(-0.2, 0.3), c(1.5, 0.0)]];
        t.add_p(2, &[2, 0, 0], qp[0][0]);
        t.add_p(2, &[1, 1, 0], qp[0][1] * 2.0);
        t.add_p(2, &[0, 2, 0], qp[1][1]);
        let out = apply_change(&h, &t).unwrap();
        let a = extract_QRS(&h).unwrap();
        let b = extract_QRS(&out).unwrap();
        let qpm = CMat::m2(qp[0][0], qp[0][1], qp[1][0], qp[1][1]);
        assert!(b.q.approx_eq(&(&a.q + &qpm), 1e-14));
        assert!(b.r.approx_eq(&a.r, 1e-14) && b.s.approx_eq(&a.s, 1e-14));
        assert!(max_diff(&out.from_degree(3), &h.from_degree(3)) < 1e-14);
    }

    #[test]
    fn apply_linear_matches_star_congruence() {
        let h = PSeries::from_terms(2, 4, &[(&[1, 0], &[1, 0], r(1.0))]);
        let a = CMat::m2(c(1.0, 0.5), r(0.2), c(0.0, -0.3), r(2.0));
        let cnn = c(0.7, -0.4);
        let ainv = a.inverse().unwrap();
        let mut cm = CMat::zeros(3, 3);
        for i in 0..2 {
            for j in 0..2 {
                cm[(i, j)] = ainv[(i, j)];
            }
        }
        cm[(2, 2)] = cnn;
        let out = apply_change(&h, &HoloChange::linear(cm, 4)).unwrap();
        let want = star_congruence(cnn, &a, &extract_QRS(&h).unwrap().r).unwrap();
        assert!(extract_QRS(&out).unwrap().r.approx_eq(&want, 1e-13));
    }

    #[test]
    fn apply_change_errors() {
        let h = PSeries::from_terms(2, 1, &[]);
        assert!(matches!(apply_change(&h, &HoloChange::identity(3, 1)), Err(SeriesError::TruncationTooLow(1))));
        let h = PSeries::from_terms(2, 4, &[(&[1, 0], &[1, 0], r(1.0))]);
        let mut cm = CMat::identity(3);
        cm[(2, 2)] = r(0.0);
        assert!(matches!(apply_change(&h, &HoloChange::linear(cm, 4)), Err(SeriesError::NonInvertibleC)));
    }

    #[test]
    fn group_law_and_quadratic_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trunc in [3usize, 4, 5] {
            for _ in 0..3 {
                let h = rand_series(&mut rng, trunc);
                let t1 = rand_change(&mut rng, trunc);
                let t2 = rand_change(&mut rng, trunc);
                let two_step = apply_change(&apply_change(&h, &t1).unwrap(), &t2).unwrap();
                let once = apply_change(&h, &t1.then(&t2)).unwrap();
                let scale = once.max_abs().max(1.0);
                assert!(max_diff(&two_step, &once) <= 1e-10 * scale, "trunc {trunc}");

                let qa = extract_QRS(&h).unwrap();
                let qb = extract_QRS(&apply_change(&h, &t1).unwrap()).unwrap();
                let a = t1.a_block().unwrap();
                let want_r = star_congruence(t1.c_nn(), &a, &qa.r).unwrap();
                let want_s = (&(&a.adjoint() * &qa.s) * &a.conj()).scale(t1.c_nn());
                assert!(qb.r.approx_eq(&want_r, 1e-9));
                assert!(qb.s.approx_eq(&want_s, 1e-9));
            }
        }
    }

    #[test]
    fn hessian_examples() {
        let h = PSeries::from_terms(2, 4, &[(&[1, 0], &[1, 0], r(1.0)), (&[0, 1], &[0, 1], r(1.0))]);
        let (d, s) = hessian_index(&h).unwrap();
        assert!((d - 16.0).abs() < 1e-12);
        assert_eq!(s, Sign::Plus);

        let h = PSeries::from_terms(2, 4, &[(&[2, 0], &[0, 0], r(1.0)), (&[2, 1], &[0, 0], r(1.0))]);
        assert_eq!(hessian_index(&h).unwrap(), (0.0, Sign::Zero));

        let bishop = |g: f64| PSeries::from_terms(1, 3, &[(&[1], &[1], r(1.0)), (&[2], &[0], r(g)), (&[0], &[2], r(g))]);
        assert_eq!(hessian_index(&bishop(1.0)).unwrap().1, Sign::Minus);
        assert_eq!(hessian_index(&bishop(0.25)).unwrap().1, Sign::Plus);
        assert_eq!(hessian_index(&bishop(0.5)).unwrap().1, Sign::Zero);
        let (d, _) = hessian_index(&bishop(0.6)).unwrap();
        assert!((d - 4.0 * (1.0 - 4.0 * 0.36)).abs() < 1e-12);
    }

    #[test]
    fn hessian_bridge_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let h = rand_series(&mut rng, 3);
            let (d, _) = hessian_index(&h).unwrap();
            let g = gamma_of(&h).unwrap().det().unwrap();
            assert!((d - 16.0 * g.re).abs() <= 1e-9 * (1.0 + d.abs()));
            assert!(g.im.abs() <= 1e-10 * (1.0 + g.norm()));
        }
    }

    /// Builds `Hf¹ + J·Hf²` literally from the real Hessian of `h = f¹ + i f²`.
    fn hessian_oracle(h: &PSeries) -> DMatrix<f64> {
        let k = h.nvars();
        let m = 2 * k;
        // real coordinates: z_j = x_j + i y_j, evaluate second differences exactly on the quadratic part
        let q = h.part(2);
        let f = |x: &[f64]| -> C64 {
            let z: Vec<C64> = (0..k).map(|j| c(x[2 * j], x[2 * j + 1])).collect();
            q.eval(&z)
        };
        let mut hc = vec![vec![C64::new(0.0, 0.0); m]; m];
        for a in 0..m {
            for b in 0..m {
                // polarisation of the quadratic form: ∂a∂b q = q(ea+eb) − q(ea) − q(eb)
                let mut ea = vec![0.0; m];
                ea[a] = 1.0;
                let mut eb = vec![0.0; m];
                eb[b] = 1.0;
                let eab: Vec<f64> = ea.iter().zip(&eb).map(|(x, y)| x + y).collect();
                hc[a][b] = f(&eab) - f(&ea) - f(&eb);
            }
        }
        let mut out = DMatrix::<f64>::zeros(m, m);
        for j in 0..k {
            for col in 0..m {
                out[(2 * j, col)] = hc[2 * j][col].re - hc[2 * j + 1][col].im;
                out[(2 * j + 1, col)] = hc[2 * j + 1][col].re + hc[2 * j][col].im;
            }
        }
        out
    }

    #[test]
    fn hessian_matches_real_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let h = rand_series(&mut rng, 3);
            let got = hessian_matrix(&h).unwrap();
            let want = hessian_oracle(&h);
            assert!((got - want).norm() < 1e-12);
        }
    }

    #[test]
    fn hessian_ignores_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = rand_series(&mut rng, 3);
        let mut h2 = h.clone();
        h2.add_term(&[2, 0], &[0, 0], c(0.25, -3.0));
        h2.add_term(&[1, 1], &[0, 0], c(-1.0, 0.5));
        assert_eq!(hessian_matrix(&h).unwrap(), hessian_matrix(&h2).unwrap());
    }

    fn flat_quadratic(g1: f64, g2: f64, trunc: usize) -> PSeries {
        PSeries::from_quadratic(&CMat::diag_real(&[g1, g2]), &CMat::identity(2), &CMat::diag_real(&[g1, g2]), trunc)
    }

    /// Random cubic satisfying all six reality conditions.
    pub(crate) fn admissible_cubic(rng: &mut ChaCha8Rng) -> Vec<([u8; 4], C64)> {
        let mut out = Vec::new();
        let all: Vec<[u8; 4]> = (0..4u8)
            .flat_map(|a| (0..4u8).flat_map(move |b| (0..4u8).flat_map(move |cc| (0..4u8).map(move |d| [a, b, cc, d]))))
            .filter(|i| i.iter().sum::<u8>() == 3)
            .collect();
        let mut paired = std::collections::HashSet::new();
        for (l, rr) in CUBIC_CONDITIONS {
            let v = rc(rng);
            out.push((l, v.conj()));
            out.push((rr, v));
            paired.insert(l);
            paired.insert(rr);
        }
        for i in all {
            if !paired.contains(&i) {
                out.push((i, rc(rng)));
            }
        }
        out
    }

    fn with_cubic(base: &PSeries, cubic: &[([u8; 4], C64)]) -> PSeries {
        let mut h = base.clone();
        for (i, v) in cubic {
            h.add_term(&[i[0], i[2]], &[i[1], i[3]], *v);
        }
        h
    }

    #[test]
    fn flatten_zero_cubic_is_identity() {
        let h = flat_quadratic(0.2, 0.4, 4);
        let (out, t) = cubic_flatten(&h).unwrap();
        assert_eq!(out, h);
        assert!(t.c.approx_eq(&CMat::identity(3), 1e-14));
        assert!(t.p.iter().all(|p| p.max_abs() < 1e-14));
    }

    #[test]
    fn flatten_single_mixed_pair() {
        // only e1110 = E and its conjugate partner: the mixed pair is removed
        // by p₁¹¹ = E, which feeds −2γ₁Ē into z̄₁²z̄₂ (and its conjugate)
        let (g1, g2) = (0.2, 0.4);
        let e = c(0.3, -0.7);
        let h = with_cubic(&flat_quadratic(g1, g2, 4), &[([1, 1, 1, 0], e), ([1, 1, 0, 1], e.conj())]);
        let (out, _) = cubic_flatten(&h).unwrap();
        let cubic = out.part(3);
        assert!((e2(&cubic, [0, 2, 0, 1]) - e.conj() * (-2.0 * g1)).norm() < 1e-12);
        assert!((e2(&cubic, [2, 0, 1, 0]) - e * (-2.0 * g1)).norm() < 1e-12);
        assert!(e2(&cubic, [1, 0, 2, 0]).norm() < 1e-12 && e2(&cubic, [0, 1, 0, 2]).norm() < 1e-12);
        assert_eq!(cubic.terms().count(), 2);
    }

    #[test]
    fn flatten_random_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let h = with_cubic(&flat_quadratic(0.2, 0.4, 4), &admissible_cubic(&mut rng));
            let (out, t) = cubic_flatten(&h).unwrap();
            assert_eq!(out.part(2), h.part(2));
            let cubic = out.part(3);
            for (a, b, _) in cubic.terms() {
                assert!(FLAT_CUBIC.contains(&[a[0], b[0], a[1], b[1]]));
            }
            assert!(cubic.reality_defect(3) < 1e-10);
            // the returned change reproduces the output
            let again = apply_change(&h, &t).unwrap();
            assert!(again.part(3).sub(&cubic).max_abs() < 1e-9);
            // no z₁z₃ / z₂z₃ terms in p₃
            assert_eq!(t.p[2].coeff(&[1, 0, 1], &[0, 0, 0]), r(0.0));
            assert_eq!(t.p[2].coeff(&[0, 1, 1], &[0, 0, 0]), r(0.0));
        }
    }

    #[test]
    fn flatten_many_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xf1a7);
        for _ in 0..300 {
            let h = with_cubic(&flat_quadratic(0.2, 0.4, 4), &admissible_cubic(&mut rng));
            let (out, _) = cubic_flatten(&h).unwrap();
            assert!(out.part(3).reality_defect(3) < 1e-10);
        }
    }

    #[test]
    fn flatten_accepts_gamma_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = with_cubic(&flat_quadratic(0.3, 1.0, 4), &admissible_cubic(&mut rng));
        assert!(cubic_flatten(&h).is_ok());
    }

    #[test]
    fn flatten_rejections_name_the_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cubic = admissible_cubic(&mut rng);
        for (lhs, rhs) in CUBIC_CONDITIONS {
            let mut bad = cubic.clone();
            for (i, v) in bad.iter_mut() {
                if *i == lhs {
                    *v += c(0.1, 0.05);
                }
            }
            let h = with_cubic(&flat_quadratic(0.2, 0.4, 4), &bad);
            match cubic_flatten(&h) {
                Err(SeriesError::PreconditionViolated(msg)) => {
                    assert!(msg.contains(&ename(lhs)) && msg.contains(&ename(rhs)), "{msg}")
                }
                other => panic!("expected rejection, got {other:?}"),
            }
        }
        for (g1, g2) in [(0.5, 0.7), (0.4, 0.2), (0.0, 0.3), (0.3, 0.5)] {
            let h = flat_quadratic(g1, g2, 4);
            assert!(matches!(cubic_flatten(&h), Err(SeriesError::PreconditionViolated(_))));
        }
    }

    #[test]
    fn pseries_json_roundtrip() {
        let h = PSeries::from_terms(2, 3, &[(&[1, 0], &[0, 1], c(1.0, -0.5)), (&[0, 0], &[2, 0], I)]);
        let s = serde_json::to_string(&h).unwrap();
        let back: PSeries = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
        assert!(serde_json::from_str::<PSeries>(r#"{"nvars":2,"trunc":2,"terms":[{"alpha":[3,0],"beta":[0,0],"re":1,"im":0}]}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_eliminate_q_idempotent(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = rand_series(&mut rng, 3);
            let once = eliminate_Q(&h).unwrap();
            prop_assert_eq!(eliminate_Q(&once).unwrap(), once);
        }

        #[test]
        fn prop_quadratic_law(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = rand_series(&mut rng, 3);
            let t = rand_change(&mut rng, 3);
            let qa = extract_QRS(&h).unwrap();
            let qb = extract_QRS(&apply_change(&h, &t).unwrap()).unwrap();
            let want = star_congruence(t.c_nn(), &t.a_block().unwrap(), &qa.r).unwrap();
            prop_assert!(qb.r.approx_eq(&want, 1e-9));
        }
    }
}

//! Dense complex matrices and the handful of linear-algebra primitives the
//! classifier needs: numerical rank, Hermitian signature, Takagi
//! factorization, congruence actions, the Γ block matrix and the
//! realification used to compare complex and real determinants.
//!
//! Heavy lifting (SVD, Hermitian eigenproblems, LU) is delegated to
//! `nalgebra`; `CMat` is a thin row-major value type that carries its own
//! comparison tolerance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};
use thiserror::Error;

pub type C64 = Complex64;

/// Default relative tolerance for ranks and structural checks.
pub const DEFAULT_TOL: f64 = 1e-9;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is not symmetric (defect {defect:.3e})")]
    NotSymmetric { defect: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("Takagi reconstruction error {0:.3e} exceeds tolerance")]
    TakagiFailed(f64),
    #[error("invalid matrix: {0}")]
    Invalid(String),
}

/// Row-major dense complex matrix with a comparison tolerance in (0,1).
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
    tol: f64,
}

impl CMat {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, MatError> {
        if rows == 0 || cols == 0 {
            return Err(MatError::Invalid("empty matrix".into()));
        }
        if data.len() != rows * cols {
            return Err(MatError::Invalid(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MatError::Invalid("non-finite entry".into()));
        }
        Ok(CMat { rows, cols, data, tol: DEFAULT_TOL })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols], tol: DEFAULT_TOL }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = r(1.0);
        }
        m
    }

    pub fn diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, z) in d.iter().enumerate() {
            m[(i, i)] = *z;
        }
        m
    }

    pub fn diag_real(d: &[f64]) -> Self {
        Self::diag(&d.iter().map(|&x| r(x)).collect::<Vec<_>>())
    }

    /// Builds from nested rows; panics on ragged input (test/fixture helper).
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let nr = rows.len();
        let nc = rows[0].len();
        assert!(rows.iter().all(|row| row.len() == nc), "ragged rows");
        CMat { rows: nr, cols: nc, data: rows.concat(), tol: DEFAULT_TOL }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<C64>> = rows.iter().map(|row| row.iter().map(|&x| r(x)).collect()).collect();
        Self::from_rows(&rows)
    }

    /// 2×2 helper: `[[a, b], [c, d]]`.
    pub fn m2(a: C64, b: C64, c_: C64, d: C64) -> Self {
        CMat { rows: 2, cols: 2, data: vec![a, b, c_, d], tol: DEFAULT_TOL }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        assert!(tol > 0.0 && tol < 1.0, "tol must lie in (0,1)");
        self.tol = tol;
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn entries(&self) -> &[C64] {
        &self.data
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect(), tol: self.tol }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn transpose(&self) -> Self {
        let mut t = CMat::zeros(self.cols, self.rows).with_tol(self.tol);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.norm() == 0.0)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &CMat) -> Result<CMat, MatError> {
        if self.cols != other.rows {
            return Err(MatError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CMat::zeros(self.rows, other.cols).with_tol(self.tol);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn to_na(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_na(m: &DMatrix<C64>) -> Self {
        let mut out = CMat::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }

    pub fn det(&self) -> Result<C64, MatError> {
        if !self.is_square() {
            return Err(MatError::DimensionMismatch("determinant of a non-square matrix".into()));
        }
        Ok(match self.rows {
            1 => self.data[0],
            2 => self.data[0] * self.data[3] - self.data[1] * self.data[2],
            _ => self.to_na().determinant(),
        })
    }

    pub fn inverse(&self) -> Result<CMat, MatError> {
        if !self.is_square() {
            return Err(MatError::DimensionMismatch("inverse of a non-square matrix".into()));
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return Err(MatError::Singular);
        }
        let inv = self.to_na().try_inverse().ok_or(MatError::Singular)?;
        let out = CMat::from_na(&inv).with_tol(self.tol);
        if out.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MatError::Singular);
        }
        Ok(out)
    }

    /// Horizontal concatenation `(self | other)`.
    pub fn hcat(&self, other: &CMat) -> Result<CMat, MatError> {
        if self.rows != other.rows {
            return Err(MatError::DimensionMismatch("hcat row counts differ".into()));
        }
        let mut out = CMat::zeros(self.rows, self.cols + other.cols).with_tol(self.tol);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
            for j in 0..other.cols {
                out[(i, self.cols + j)] = other[(i, j)];
            }
        }
        Ok(out)
    }

    /// `‖self − other‖_F`; dimensions must agree.
    pub fn dist(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.dist(&self.adjoint())
    }

    pub fn symmetric_defect(&self) -> f64 {
        self.dist(&self.transpose())
    }

    pub fn is_hermitian(&self) -> bool {
        self.is_square() && self.hermitian_defect() <= self.tol * self.norm().max(f64::MIN_POSITIVE)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && self.symmetric_defect() <= self.tol * self.norm().max(f64::MIN_POSITIVE)
    }

    /// Symmetric part `(M + Mᵀ)/2`.
    pub fn symmetrized(&self) -> CMat {
        (&(self + &self.transpose())).scale(r(0.5))
    }

    pub fn approx_eq(&self, other: &CMat, tol: f64) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols) && self.dist(other) <= tol
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        assert!(i < self.rows && j < self.cols, "index out of range");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        assert!(i < self.rows && j < self.cols, "index out of range");
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Add<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn add(self, o: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "add: shape mismatch");
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect();
        CMat { rows: self.rows, cols: self.cols, data, tol: self.tol }
    }
}

impl<'a> Sub<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn sub(self, o: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "sub: shape mismatch");
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect();
        CMat { rows: self.rows, cols: self.cols, data, tol: self.tol }
    }
}

impl<'a> Mul<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn mul(self, o: &CMat) -> CMat {
        self.matmul(o).expect("mul: shape mismatch")
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.map(|z| -z)
    }
}

#[derive(Serialize, Deserialize)]
struct CMatJson {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for CMat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CMatJson {
            rows: self.rows,
            cols: self.cols,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = CMatJson::deserialize(d)?;
        if j.re.len() != j.im.len() {
            return Err(serde::de::Error::custom("re and im lengths differ"));
        }
        let data = j.re.iter().zip(&j.im).map(|(&a, &b)| C64::new(a, b)).collect();
        CMat::new(j.rows, j.cols, data).map_err(serde::de::Error::custom)
    }
}

/// Sign of a real determinant, with an explicit degenerate value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "0")]
    Zero,
}

impl Sign {
    /// `Zero` when `|x| <= thr`.
    pub fn of(x: f64, thr: f64) -> Sign {
        if x.abs() <= thr {
            Sign::Zero
        } else if x > 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
            Sign::Zero => 0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
            Sign::Zero => "0",
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Sign of `det Γ`, which is real; degenerate when `|det| <= tol·‖Γ‖^dim`.
pub fn gamma_det_sign(gamma: &CMat) -> Result<(f64, Sign), MatError> {
    let d = gamma.det()?;
    let scale = gamma.norm().powi(gamma.rows() as i32);
    Ok((d.re, Sign::of(d.re, gamma.tol() * scale.max(f64::MIN_POSITIVE))))
}

/// Serde adapter rendering a complex number as `{"re": x, "im": y}`.
pub mod cjson {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct ReIm {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        ReIm { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let v = ReIm::deserialize(d)?;
        Ok(C64::new(v.re, v.im))
    }
}

/// Serde adapter for a list of complex numbers as `[{"re", "im"}, …]`.
pub mod cjson_vec {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct ReIm {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| ReIm { re: z.re, im: z.im }).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        Ok(Vec::<ReIm>::deserialize(d)?.into_iter().map(|v| C64::new(v.re, v.im)).collect())
    }
}

/// Minimum-norm least-squares solution of `a·x ≈ b` for real `a`.
///
/// Goes through the symmetric eigenproblem of `aᵀa` (eigenvalues below
/// `rcond² × λ_max` are dropped) followed by one step of iterative
/// refinement.  nalgebra's `SVD::solve` was observed to return residuals of
/// order 1e-2 on consistent, well-conditioned tall systems with repeated
/// singular values.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> DVector<f64> {
    let at = a.transpose();
    let eig = SymmetricEigen::new(&at * a);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = rcond * rcond * lmax;
    let pinv = |rhs: &DVector<f64>| {
        let y = eig.eigenvectors.transpose() * (&at * rhs);
        let y = DVector::from_iterator(y.len(), y.iter().zip(eig.eigenvalues.iter()).map(|(v, l)| if *l > cut { v / l } else { 0.0 }));
        &eig.eigenvectors * y
    };
    let x = pinv(b);
    let r = b - a * &x;
    x + pinv(&r)
}

/// Singular values, descending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.to_na().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Numerical rank: singular values above `tol × σ_max`.
pub fn rank(m: &CMat) -> usize {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > m.tol * smax).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub p: usize,
    pub q: usize,
    pub rank: usize,
}

impl Signature {
    /// `|p − q|`.
    pub fn sigma(&self) -> usize {
        self.p.abs_diff(self.q)
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &CMat) -> Vec<f64> {
    let sym = (&(h + &h.adjoint())).scale(r(0.5));
    let mut e: Vec<f64> = SymmetricEigen::new(sym.to_na()).eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

pub fn hermitian_signature(h: &CMat) -> Result<Signature, MatError> {
    if !h.is_square() {
        return Err(MatError::DimensionMismatch("signature of a non-square matrix".into()));
    }
    let nrm = h.norm();
    let defect = h.hermitian_defect();
    if defect > h.tol * nrm {
        return Err(MatError::NotHermitian { defect });
    }
    let e = hermitian_eigenvalues(h);
    let scale = e.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let thr = h.tol * scale;
    let p = e.iter().filter(|&&x| x > thr).count();
    let q = e.iter().filter(|&&x| x < -thr).count();
    Ok(Signature { p, q, rank: p + q })
}

/// `S = U·D·Uᵀ` with `U` unitary and `D` real, non-negative, descending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TakagiFactors {
    pub u: CMat,
    pub d: CMat,
}

impl TakagiFactors {
    pub fn reconstruct(&self) -> CMat {
        &(&self.u * &self.d) * &self.u.transpose()
    }
    pub fn values(&self) -> Vec<f64> {
        (0..self.d.rows()).map(|i| self.d[(i, i)].re).collect()
    }
}

/// Takagi factorization of a complex symmetric matrix.
///
/// Writing `S = A + iB`, a column `u = x + iy` satisfies `S·ū = σu` iff
/// `(x, y)` is a σ-eigenvector of the real symmetric matrix
/// `[[A, B], [B, −A]]`, whose spectrum is `±σ_k`.  Taking the eigenvectors
/// of the positive half therefore yields an orthonormal Takagi basis even
/// when singular values cluster; the null space is completed by complex
/// Gram–Schmidt.  The reconstruction is checked before returning.
pub fn takagi(s: &CMat) -> Result<TakagiFactors, MatError> {
    if !s.is_square() {
        return Err(MatError::DimensionMismatch("Takagi of a non-square matrix".into()));
    }
    let n = s.rows();
    let nrm = s.norm();
    let defect = s.symmetric_defect();
    if defect > s.tol * nrm {
        return Err(MatError::NotSymmetric { defect });
    }
    if nrm == 0.0 {
        return Ok(TakagiFactors { u: CMat::identity(n).with_tol(s.tol), d: CMat::zeros(n, n).with_tol(s.tol) });
    }
    let sym = s.symmetrized();
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = sym[(i, j)];
            m[(i, j)] = z.re;
            m[(i, n + j)] = z.im;
            m[(n + i, j)] = z.im;
            m[(n + i, n + j)] = -z.re;
        }
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let smax = eig.eigenvalues[order[0]].max(0.0);
    let thr = s.tol * smax;

    let mut cols: Vec<Vec<C64>> = Vec::new();
    let mut sig: Vec<f64> = Vec::new();
    for &k in order.iter().take(n) {
        let lam = eig.eigenvalues[k];
        if lam <= thr {
            break;
        }
        let v: Vec<C64> = (0..n).map(|i| C64::new(eig.eigenvectors[(i, k)], eig.eigenvectors[(n + i, k)])).collect();
        cols.push(orient_sign(v));
        sig.push(lam);
    }
    // Complete with an orthonormal basis of the remaining space.
    let mut e = 0;
    while cols.len() < n {
        let mut best: Option<Vec<C64>> = None;
        let mut best_norm = 0.0;
        for cand in e..n {
            let mut v: Vec<C64> = (0..n).map(|i| if i == cand { r(1.0) } else { r(0.0) }).collect();
            for _ in 0..2 {
                for u in &cols {
                    let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for i in 0..n {
                        v[i] -= proj * u[i];
                    }
                }
            }
            let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nv > best_norm {
                best_norm = nv;
                best = Some(v.into_iter().map(|z| z / nv).collect());
            }
        }
        e = 0;
        let v = best.ok_or(MatError::TakagiFailed(f64::NAN))?;
        cols.push(orient_phase(v));
        sig.push(0.0);
    }
    let mut u = CMat::zeros(n, n).with_tol(s.tol);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..n {
            u[(i, j)] = col[i];
        }
    }
    let d = CMat::diag_real(&sig).with_tol(s.tol);
    let f = TakagiFactors { u, d };
    let err = f.reconstruct().dist(s);
    if err > s.tol * (1.0 + nrm) {
        return Err(MatError::TakagiFailed(err));
    }
    Ok(f)
}

fn first_significant(v: &[C64]) -> Option<C64> {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    v.iter().copied().find(|z| z.norm() > 1e-10 * scale)
}

/// Sign choice for a Takagi column with σ > 0 (only ±1 keeps `S·ū = σu`).
fn orient_sign(v: Vec<C64>) -> Vec<C64> {
    match first_significant(&v) {
        Some(z) if z.re < -1e-12 || (z.re.abs() <= 1e-12 && z.im < 0.0) => v.into_iter().map(|x| -x).collect(),
        _ => v,
    }
}

/// Full phase choice for a null-space column: first significant entry real positive.
fn orient_phase(v: Vec<C64>) -> Vec<C64> {
    match first_significant(&v) {
        Some(z) => {
            let ph = z.conj() / z.norm();
            v.into_iter().map(|x| x * ph).collect()
        }
        None => v,
    }
}

fn check_square_same(a: &CMat, m: &CMat) -> Result<(), MatError> {
    if !a.is_square() || !m.is_square() || a.rows() != m.rows() {
        return Err(MatError::DimensionMismatch(format!(
            "A is {}x{}, M is {}x{}",
            a.rows(),
            a.cols(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// `c·Āᵀ·M·A`.
pub fn star_congruence(c: C64, a: &CMat, m: &CMat) -> Result<CMat, MatError> {
    check_square_same(a, m)?;
    Ok((&(&a.adjoint() * m) * a).scale(c))
}

/// `c·Aᵀ·M·A`.
pub fn sym_congruence(c: C64, a: &CMat, m: &CMat) -> Result<CMat, MatError> {
    check_square_same(a, m)?;
    Ok((&(&a.transpose() * m) * a).scale(c))
}

/// `Γ = [[R, P̄], [P, R̄]]`.
pub fn build_gamma(rm: &CMat, p: &CMat) -> Result<CMat, MatError> {
    block2(rm, &p.conj(), p, &rm.conj())
}

/// `[[A, B], [C, D]]` for equal square blocks.
pub fn block2(a: &CMat, b: &CMat, c_: &CMat, d: &CMat) -> Result<CMat, MatError> {
    let n = a.rows();
    for m in [a, b, c_, d] {
        if m.rows() != n || m.cols() != n {
            return Err(MatError::DimensionMismatch("blocks must be equal square matrices".into()));
        }
    }
    let mut g = CMat::zeros(2 * n, 2 * n).with_tol(a.tol());
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = a[(i, j)];
            g[(i, n + j)] = b[(i, j)];
            g[(n + i, j)] = c_[(i, j)];
            g[(n + i, n + j)] = d[(i, j)];
        }
    }
    Ok(g)
}

/// Real 2n×2n images of complex n×n matrices: `R ↦ R′` with blocks
/// `[[Re, −Im], [Im, Re]]`, `S ↦ S′` with blocks `[[Re, Im], [Im, −Re]]`.
pub fn realify(rm: &CMat, s: &CMat) -> Result<(DMatrix<f64>, DMatrix<f64>), MatError> {
    if !rm.is_square() || !s.is_square() || rm.rows() != s.rows() {
        return Err(MatError::DimensionMismatch("realify needs equal square matrices".into()));
    }
    let n = rm.rows();
    let mut rp = DMatrix::<f64>::zeros(2 * n, 2 * n);
    let mut sp = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = rm[(i, j)];
            rp[(2 * i, 2 * j)] = z.re;
            rp[(2 * i, 2 * j + 1)] = -z.im;
            rp[(2 * i + 1, 2 * j)] = z.im;
            rp[(2 * i + 1, 2 * j + 1)] = z.re;
            let w = s[(i, j)];
            sp[(2 * i, 2 * j)] = w.re;
            sp[(2 * i, 2 * j + 1)] = w.im;
            sp[(2 * i + 1, 2 * j)] = w.im;
            sp[(2 * i + 1, 2 * j + 1)] = -w.re;
        }
    }
    Ok((rp, sp))
}

/// The unitary `K` with `K·R′·K̄ᵀ = blockdiag(R, R̄)` and
/// `K·S′·K̄ᵀ = [[0, S], [S̄, 0]]`.
pub fn kappa_matrix(n: usize) -> CMat {
    assert!(n >= 1, "kappa_matrix needs n >= 1");
    let h = r(std::f64::consts::SQRT_2 / 2.0);
    let mut k = CMat::zeros(2 * n, 2 * n);
    for j in 0..n {
        k[(j, 2 * j)] = h;
        k[(j, 2 * j + 1)] = h * I;
        k[(n + j, 2 * j)] = h;
        k[(n + j, 2 * j + 1)] = -h * I;
    }
    k
}

pub fn real_to_cmat(m: &DMatrix<f64>) -> CMat {
    let mut out = CMat::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(i, j)] = r(m[(i, j)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_on_sparse_tall_systems() {
        // consistent 20×12 system: paired ±1 rows plus an identity block,
        // perturbed by tiny entries
        let mut a = DMatrix::<f64>::zeros(20, 12);
        for k in 0..8 {
            a[(2 * k, k)] = -1.0;
            a[(2 * k + 1, k)] = if k % 2 == 0 { -1.0 } else { 1.0 };
        }
        for k in 0..4 {
            a[(16 + k, 8 + k)] = 1.0;
        }
        a[(17, 1)] = -3e-17;
        a[(19, 3)] = -2e-17;
        let x0 = DVector::from_iterator(12, (0..12).map(|i| (i as f64 * 0.37).sin() * 5.0));
        let b = &a * &x0;
        let x = lstsq(&a, &b, 1e-12);
        assert!((&a * &x - &b).norm() < 1e-12);
        // rank-deficient: the minimum-norm solution
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        let x = lstsq(&m, &DVector::from_vec(vec![2.0, 2.0, 0.0]), 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&CMat::zeros(2, 2)), 0);
        assert_eq!(rank(&CMat::diag_real(&[1.0, 0.0])), 1);
        // det = −τ ≠ 0
        let m = CMat::from_real_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]);
        assert!((m.det().unwrap() - r(-0.5)).norm() < 1e-15);
        assert_eq!(rank(&m), 2);
    }

    #[test]
    fn signature_examples() {
        let s = hermitian_signature(&CMat::identity(4)).unwrap();
        assert_eq!((s.p, s.q, s.rank), (4, 0, 4));
        let s = hermitian_signature(&CMat::diag_real(&[1.0, -1.0])).unwrap();
        assert_eq!((s.p, s.q), (1, 1));
        let g = build_gamma(&CMat::identity(2), &CMat::diag_real(&[0.0, 2.0])).unwrap();
        let s = hermitian_signature(&g).unwrap();
        assert_eq!((s.rank, s.sigma()), (4, 2));
        assert_eq!((s.p, s.q), (3, 1));
        let nh = CMat::m2(r(0.0), r(1.0), r(0.0), r(0.0));
        assert!(matches!(hermitian_signature(&nh), Err(MatError::NotHermitian { .. })));
    }

    #[test]
    fn takagi_examples() {
        let f = takagi(&CMat::zeros(2, 2)).unwrap();
        assert_eq!(f.u, CMat::identity(2));
        assert!(f.d.is_zero());

        let f = takagi(&CMat::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])).unwrap();
        assert!((f.values()[0] - 1.0).abs() < 1e-12 && (f.values()[1] - 1.0).abs() < 1e-12);

        let s = CMat::diag_real(&[2.0, 3.0]);
        let f = takagi(&s).unwrap();
        assert!((f.values()[0] - 3.0).abs() < 1e-12 && (f.values()[1] - 2.0).abs() < 1e-12);
        assert!(f.reconstruct().approx_eq(&s, 1e-12));
        // a permutation up to signs
        for i in 0..2 {
            for j in 0..2 {
                let a = f.u[(i, j)].norm();
                assert!(a < 1e-12 || (a - 1.0).abs() < 1e-12);
            }
        }

        let bad = CMat::m2(r(0.0), r(1.0), r(2.0), r(0.0));
        assert!(matches!(takagi(&bad), Err(MatError::NotSymmetric { .. })));
    }

    #[test]
    fn takagi_rank_one_and_complex() {
        let v = [c(1.0, 2.0), c(-0.5, 0.25)];
        let mut s = CMat::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                s[(i, j)] = v[i] * v[j];
            }
        }
        let f = takagi(&s).unwrap();
        assert!(f.reconstruct().approx_eq(&s, 1e-12));
        assert!(f.values()[1].abs() < 1e-12);
        let uu = &f.u * &f.u.adjoint();
        assert!(uu.approx_eq(&CMat::identity(2), 1e-12));
        // null column has its first significant entry real positive
        let z = f.u[(0, 1)];
        assert!(z.re > 0.0 && z.im.abs() < 1e-12);
    }

    #[test]
    fn congruence_examples() {
        let m = CMat::m2(c(1.0, 2.0), c(0.0, 1.0), c(3.0, -1.0), c(0.5, 0.0));
        assert_eq!(star_congruence(r(1.0), &CMat::identity(2), &m).unwrap(), m);
        let lam = 1.7;
        let a = CMat::identity(2).scale(r(lam));
        assert!(star_congruence(r(lam.powi(-2)), &a, &m).unwrap().approx_eq(&m, 1e-14));
        let phi: f64 = 0.9;
        let a = CMat::diag(&[C64::from_polar(1.0, phi), r(1.0)]);
        let dm = CMat::diag_real(&[0.3, 0.8]);
        assert!(star_congruence(r(1.0), &a, &dm).unwrap().approx_eq(&dm, 1e-15));
        assert!(matches!(
            star_congruence(r(1.0), &CMat::identity(3), &m),
            Err(MatError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn gamma_examples() {
        let g = build_gamma(&CMat::diag_real(&[1.0]), &CMat::diag_real(&[0.6])).unwrap();
        assert!(g.approx_eq(&CMat::from_real_rows(&[vec![1.0, 0.6], vec![0.6, 1.0]]), 1e-15));
        assert!((g.det().unwrap().re - (1.0 - 4.0 * 0.09)).abs() < 1e-15);
        assert!(build_gamma(&CMat::zeros(2, 2), &CMat::zeros(2, 2)).unwrap().is_zero());
        let g = build_gamma(&CMat::diag(&[r(1.0), I]), &CMat::zeros(2, 2)).unwrap();
        assert_eq!(g[(3, 3)], -I);
        assert_eq!(g[(1, 1)], I);
        assert_eq!(g[(0, 2)], r(0.0));
    }

    #[test]
    fn realify_examples() {
        let (rp, sp) = realify(&CMat::identity(2), &CMat::zeros(2, 2)).unwrap();
        assert_eq!(rp, DMatrix::<f64>::identity(4, 4));
        assert_eq!(sp, DMatrix::<f64>::zeros(4, 4));
        let (rp, _) = realify(&CMat::diag(&[I]), &CMat::zeros(1, 1)).unwrap();
        assert_eq!(rp, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let (_, sp) = realify(&CMat::zeros(1, 1), &CMat::diag_real(&[1.0])).unwrap();
        assert_eq!(sp, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
    }

    #[test]
    fn kappa_examples() {
        let h = std::f64::consts::SQRT_2 / 2.0;
        let k1 = kappa_matrix(1);
        assert!(k1.approx_eq(&CMat::m2(r(h), c(0.0, h), r(h), c(0.0, -h)), 1e-15));
        let k2 = kappa_matrix(2);
        let want = CMat::from_rows(&[
            vec![r(h), c(0.0, h), r(0.0), r(0.0)],
            vec![r(0.0), r(0.0), r(h), c(0.0, h)],
            vec![r(h), c(0.0, -h), r(0.0), r(0.0)],
            vec![r(0.0), r(0.0), r(h), c(0.0, -h)],
        ]);
        assert!(k2.approx_eq(&want, 1e-15));
        for n in 1..5 {
            let k = kappa_matrix(n);
            assert!((&k * &k.adjoint()).approx_eq(&CMat::identity(2 * n), 1e-14));
            // unimodular always; exactly 1 for even n (the 4×4 case)
            let d = k.det().unwrap();
            assert!((d.norm() - 1.0).abs() < 1e-12);
            if n % 2 == 0 {
                assert!((d - r(1.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn json_roundtrip() {
        let m = CMat::m2(c(1.0, -2.0), r(0.5), c(0.0, 3.0), r(-1.0));
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":2,"cols":2,"re":[1.0,0.5,0.0,-1.0],"im":[-2.0,0.0,3.0,0.0]}"#);
        let back: CMat = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<CMat>(r#"{"rows":2,"cols":2,"re":[1],"im":[1]}"#).is_err());
    }
}

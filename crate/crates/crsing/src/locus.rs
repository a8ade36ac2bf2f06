//! CR singular points of charted real 4-manifolds in `C³` or `CP³`.
//!
//! A chart is the graph `z₃ = F(z₁, z̄₁, z₂, z̄₂)` of a rational or radical
//! function over a box in the base.  CR singular points are the common
//! zeros of `∂F/∂z̄₁` and `∂F/∂z̄₂`; each is located by damped Newton from a
//! seed grid, Taylor-expanded into standard position and classified.

use crate::matcore::{cjson_vec, gamma_det_sign, lstsq, Sign, C64};
use crate::normalform::{classify_pair, NormalFormError, TableRow};
use crate::series::{extract_QRS, gamma_of, hessian_index, PSeries, Poly, SeriesError};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default seeds per real axis.
pub const DEFAULT_SEEDS: usize = 12;
/// Newton solutions closer than this are the same point.
pub const DEDUPE_DIST: f64 = 1e-6;
/// Largest accepted `max |∂F/∂z̄ₖ|` at a reported point.
pub const MAX_RESIDUAL: f64 = 1e-10;
const POLISH_TARGET: f64 = 1e-14;
const SNAP_DIST: f64 = 1e-6;
/// Truncation of the local models.
pub const MODEL_TRUNC: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocusError {
    #[error("denominator vanishes in chart {chart} near {at}")]
    DenominatorVanishes { chart: String, at: String },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("Wirtinger residual {0:.3e} too large for a local model")]
    ResidualTooLarge(f64),
    #[error("no expected topology attached to this manifold")]
    NoExpectedTopology,
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
}

type Result<T> = std::result::Result<T, LocusError>;

/// `F = w·√g` summand; `g` is real-valued and positive on the chart.
#[derive(Clone, Debug, PartialEq)]
pub struct RadicalTerm {
    pub weight: C64,
    pub g: Poly,
    g_bar: [Poly; 2],
}

impl RadicalTerm {
    pub fn new(weight: C64, g: Poly) -> Self {
        let g_bar = [g.diff(2), g.diff(3)];
        RadicalTerm { weight, g, g_bar }
    }
}

/// Chart function over slots `[z₁, z₂, z̄₁, z̄₂]`.
#[derive(Clone, Debug, PartialEq)]
pub enum ChartFn {
    Rational { num: Poly, den: Poly, num_bar: [Poly; 2], den_bar: [Poly; 2] },
    Radical { terms: Vec<RadicalTerm>, collar: f64 },
}

impl ChartFn {
    pub fn rational(num: Poly, den: Poly) -> Self {
        let num_bar = [num.diff(2), num.diff(3)];
        let den_bar = [den.diff(2), den.diff(3)];
        ChartFn::Rational { num, den, num_bar, den_bar }
    }
    /// `Σ wᵢ√gᵢ`, defined where every `gᵢ > collar`.
    pub fn radical(terms: Vec<(C64, Poly)>, collar: f64) -> Self {
        ChartFn::Radical { terms: terms.into_iter().map(|(w, g)| RadicalTerm::new(w, g)).collect(), collar }
    }
}

/// How chart coordinates map to a point of the ambient manifold, used for
/// deduplication across charts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AmbientMap {
    /// `(z₁, z₂, F)`.
    Graph,
    /// Affine chart of `CP²` where homogeneous coordinate `index` is 1; the
    /// key is the homogeneous point scaled so its largest entry is 1.
    Projective { index: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub id: String,
    pub f: ChartFn,
    /// Bounds for `(Re z₁, Im z₁, Re z₂, Im z₂)`.
    pub domain_box: [[f64; 2]; 4],
    /// `+1` when the manifold orientation agrees with the complex orientation
    /// of the base.
    pub orientation: i8,
    /// Base variables held at zero during the search.
    pub fixed_zero: Vec<usize>,
    pub ambient: AmbientMap,
    /// Exact coordinate values that polished roots are snapped to.
    pub snap: Vec<C64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ExpectedTopology {
    /// Immersion in `C³`: `I₊ + I₋ = χ`, `I₊ − I₋ = −p₁`.
    C3 { chi: i64, p1: i64 },
    /// Isotopic to a degree-`d` hypersurface of `CP³`:
    /// `I₊ − I₋ = 6d + d³`, `I₊ + I₋ = χ + 4d²`.
    Cp3Hypersurface { d: i64, chi: i64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChartedManifold {
    pub name: String,
    pub charts: Vec<Chart>,
    pub dedupe_dist: f64,
    pub expected: Option<ExpectedTopology>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrientationClass {
    #[serde(rename = "N2+")]
    Plus,
    #[serde(rename = "N2-")]
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Index {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
    #[serde(rename = "degenerate")]
    Degenerate,
}

impl Index {
    pub fn as_i32(self) -> i32 {
        match self {
            Index::Plus => 1,
            Index::Minus => -1,
            Index::Degenerate => 0,
        }
    }
    pub fn from_sign(s: Sign) -> Self {
        match s {
            Sign::Plus => Index::Plus,
            Sign::Minus => Index::Minus,
            Sign::Zero => Index::Degenerate,
        }
    }
}

/// Sign convention for the orientation of the anticomplex locus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    #[default]
    Lai,
    /// Opposite orientation: indices at `N₂⁻` points change sign, which
    /// exchanges the roles of `I₊ + I₋` and `I₊ − I₋`.
    Switched,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CRPoint {
    pub chart: String,
    #[serde(with = "cjson_vec")]
    pub location: Vec<C64>,
    #[serde(with = "cjson_vec")]
    pub ambient: Vec<C64>,
    pub orientation_class: OrientationClass,
    pub index: Index,
    pub table_row: TableRow,
    pub residual: f64,
    /// Within `1e-9` of the chart's box boundary.
    pub on_boundary: bool,
}

/// Raw outcome of the Newton search in one chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Search {
    pub locations: Vec<[C64; 2]>,
    pub residuals: Vec<f64>,
    pub on_boundary: Vec<bool>,
    pub diverged: usize,
    /// The Wirtinger system vanishes identically (the chart is a complex
    /// graph); no point list is meaningful.
    pub identically_critical: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub manifold: String,
    pub points: Vec<CRPoint>,
    pub i_plus: i64,
    pub i_minus: i64,
    pub convention: Convention,
    pub degenerate: usize,
    pub diverged_seeds: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub expected: i64,
    pub computed: i64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub checks: Vec<IdentityCheck>,
    pub pass: bool,
}

// ---------------------------------------------------------------------------
// chart evaluation

fn slots(z: &[C64; 2]) -> [C64; 4] {
    [z[0], z[1], z[0].conj(), z[1].conj()]
}

impl Chart {
    /// `F` at a base point, if inside the chart's domain of definition.
    pub fn eval(&self, z: &[C64; 2]) -> Option<C64> {
        let x = slots(z);
        match &self.f {
            ChartFn::Rational { num, den, .. } => {
                let d = den.eval(&x);
                (d.norm() > 1e-12).then(|| num.eval(&x) / d)
            }
            ChartFn::Radical { terms, collar } => {
                let mut f = C64::new(0.0, 0.0);
                for t in terms {
                    let g = t.g.eval(&x).re;
                    if g <= *collar {
                        return None;
                    }
                    f += t.weight * g.sqrt();
                }
                Some(f)
            }
        }
    }

    /// `(∂F/∂z̄₁, ∂F/∂z̄₂)`.
    pub fn wirtinger(&self, z: &[C64; 2]) -> Option<[C64; 2]> {
        let x = slots(z);
        match &self.f {
            ChartFn::Rational { num, den, num_bar, den_bar } => {
                let d = den.eval(&x);
                if d.norm() <= 1e-12 {
                    return None;
                }
                let n = num.eval(&x);
                let mut w = [C64::new(0.0, 0.0); 2];
                for k in 0..2 {
                    w[k] = (num_bar[k].eval(&x) * d - n * den_bar[k].eval(&x)) / (d * d);
                }
                Some(w)
            }
            ChartFn::Radical { terms, collar } => {
                let mut w = [C64::new(0.0, 0.0); 2];
                for t in terms {
                    let g = t.g.eval(&x).re;
                    if g <= *collar {
                        return None;
                    }
                    for k in 0..2 {
                        w[k] += t.weight * t.g_bar[k].eval(&x) / (2.0 * g.sqrt());
                    }
                }
                Some(w)
            }
        }
    }

    fn identically_critical(&self) -> bool {
        match &self.f {
            ChartFn::Rational { num, den, num_bar, den_bar } => {
                (0..2).all(|k| {
                    let w = num_bar[k].mul(den).sub(&num.mul(&den_bar[k]));
                    w.max_abs() <= 1e-13 * (num.max_abs() * den.max_abs()).max(1.0)
                })
            }
            ChartFn::Radical { terms, .. } => {
                terms.iter().all(|t| t.weight.norm() == 0.0 || t.g_bar.iter().all(|p| p.is_zero()))
            }
        }
    }

    fn free_vars(&self) -> Vec<usize> {
        (0..2).filter(|v| !self.fixed_zero.contains(v)).collect()
    }

    fn point(&self, free: &[usize], x: &[f64]) -> [C64; 2] {
        let mut z = [C64::new(0.0, 0.0); 2];
        for (k, &v) in free.iter().enumerate() {
            z[v] = C64::new(x[2 * k], x[2 * k + 1]);
        }
        z
    }

    fn residual_vec(&self, free: &[usize], x: &[f64]) -> Option<DVector<f64>> {
        let w = self.wirtinger(&self.point(free, x))?;
        Some(DVector::from_vec(vec![w[0].re, w[0].im, w[1].re, w[1].im]))
    }

    fn in_box(&self, free: &[usize], x: &[f64], margin: f64) -> bool {
        free.iter().enumerate().all(|(k, &v)| {
            (0..2).all(|c| {
                let [lo, hi] = self.domain_box[2 * v + c];
                let m = margin * (hi - lo);
                x[2 * k + c] >= lo - m && x[2 * k + c] <= hi + m
            })
        })
    }

    fn check_denominator(&self) -> Result<()> {
        let ChartFn::Rational { den, .. } = &self.f else {
            return Ok(());
        };
        let free = self.free_vars();
        let n = 9usize;
        let dims = 2 * free.len();
        for idx in 0..n.pow(dims as u32) {
            let x = grid_point(&self.domain_box, &free, n, idx, false);
            let z = self.point(&free, &x);
            if den.eval(&slots(&z)).norm() <= 1e-12 {
                return Err(LocusError::DenominatorVanishes { chart: self.id.clone(), at: format!("{z:?}") });
            }
        }
        Ok(())
    }

    /// Ambient key of a base point.
    pub fn ambient_point(&self, z: &[C64; 2]) -> Vec<C64> {
        match self.ambient {
            AmbientMap::Graph => vec![z[0], z[1], self.eval(z).unwrap_or(C64::new(f64::NAN, 0.0))],
            AmbientMap::Projective { index } => {
                let mut h = vec![z[0], z[1]];
                h.insert(index, C64::new(1.0, 0.0));
                let m = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
                let k = h.iter().position(|v| v.norm() >= m * (1.0 - 1e-9)).unwrap();
                let s = h[k];
                h.iter().map(|v| v / s).collect()
            }
        }
    }
}

fn grid_point(bx: &[[f64; 2]; 4], free: &[usize], n: usize, mut idx: usize, centred: bool) -> Vec<f64> {
    let mut x = Vec::with_capacity(2 * free.len());
    for &v in free {
        for c in 0..2 {
            let [lo, hi] = bx[2 * v + c];
            let i = idx % n;
            idx /= n;
            let t = if centred { (i as f64 + 0.5) / n as f64 } else { i as f64 / (n - 1).max(1) as f64 };
            x.push(lo + t * (hi - lo));
        }
    }
    x
}

fn jacobian(chart: &Chart, free: &[usize], x: &[f64]) -> Option<DMatrix<f64>> {
    let n = x.len();
    let mut j = DMatrix::zeros(4, n);
    for k in 0..n {
        let h = 1e-7 * x[k].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        let d = (chart.residual_vec(free, &xp)? - chart.residual_vec(free, &xm)?) / (2.0 * h);
        j.set_column(k, &d);
    }
    Some(j)
}

/// Damped Gauss–Newton from `x0`; returns the final point and residual norm.
fn newton(chart: &Chart, free: &[usize], x0: &[f64]) -> Option<(Vec<f64>, f64)> {
    let mut x = x0.to_vec();
    let mut r = chart.residual_vec(free, &x)?;
    let mut rn = r.norm();
    for _ in 0..80 {
        if rn <= POLISH_TARGET {
            break;
        }
        let j = jacobian(chart, free, &x)?;
        let step = lstsq(&j, &(-&r), 1e-10);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + alpha * s).collect();
            if let Some(rn_vec) = chart.residual_vec(free, &xn) {
                if rn_vec.norm() < rn {
                    x = xn;
                    r = rn_vec;
                    rn = r.norm();
                    accepted = true;
                    break;
                }
            }
            alpha /= 2.0;
        }
        if !accepted || alpha * step.norm() < 1e-16 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            break;
        }
    }
    Some((x, rn))
}

fn max_wirtinger(chart: &Chart, z: &[C64; 2]) -> f64 {
    chart.wirtinger(z).map(|w| w[0].norm().max(w[1].norm())).unwrap_or(f64::INFINITY)
}

/// All zeros of the Wirtinger system inside the chart box.
pub fn find_cr_points(chart: &Chart, seeds_per_axis: usize) -> Result<Search> {
    if seeds_per_axis < 2 {
        return Err(LocusError::BadParams("seeds_per_axis must be at least 2".into()));
    }
    chart.check_denominator()?;
    if chart.identically_critical() {
        return Ok(Search {
            locations: vec![],
            residuals: vec![],
            on_boundary: vec![],
            diverged: 0,
            identically_critical: true,
        });
    }
    let free = chart.free_vars();
    let dims = 2 * free.len();
    let total = seeds_per_axis.pow(dims as u32);
    // the grid plus the box centre, which a narrow basin may otherwise miss
    let raw: Vec<Option<Vec<f64>>> = (0..=total)
        .into_par_iter()
        .map(|idx| {
            let x0 = if idx == total {
                grid_point(&chart.domain_box, &free, 1, 0, true)
            } else {
                grid_point(&chart.domain_box, &free, seeds_per_axis, idx, true)
            };
            let (x, rn) = newton(chart, &free, &x0)?;
            (rn <= MAX_RESIDUAL && chart.in_box(&free, &x, 1e-9)).then_some(x)
        })
        .collect();
    let diverged = raw.iter().filter(|x| x.is_none()).count();
    let mut found: Vec<Vec<f64>> = raw.into_iter().flatten().collect();
    found.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut uniq: Vec<Vec<f64>> = Vec::new();
    for x in found {
        let dup = uniq.iter().any(|u| u.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() < DEDUPE_DIST);
        if !dup {
            uniq.push(x);
        }
    }
    let mut out: Vec<([C64; 2], f64, bool)> = Vec::new();
    for x in uniq {
        let (x, _) = newton(chart, &free, &x).unwrap_or((x.clone(), f64::INFINITY));
        let mut z = chart.point(&free, &x);
        let mut res = max_wirtinger(chart, &z);
        let snapped = snap_point(&z, &chart.snap);
        if snapped != z {
            let rs = max_wirtinger(chart, &snapped);
            if rs <= MAX_RESIDUAL {
                z = snapped;
                res = rs;
            }
        }
        if res > MAX_RESIDUAL {
            continue;
        }
        let boundary = !chart.in_box(&free, &x, -1e-9);
        out.push((z, res, boundary));
    }
    out.sort_by(|a, b| {
        let ka = [a.0[0].re, a.0[0].im, a.0[1].re, a.0[1].im];
        let kb = [b.0[0].re, b.0[0].im, b.0[1].re, b.0[1].im];
        ka.partial_cmp(&kb).unwrap()
    });
    Ok(Search {
        locations: out.iter().map(|p| p.0).collect(),
        residuals: out.iter().map(|p| p.1).collect(),
        on_boundary: out.iter().map(|p| p.2).collect(),
        diverged,
        identically_critical: false,
    })
}

fn snap_point(z: &[C64; 2], values: &[C64]) -> [C64; 2] {
    let mut out = *z;
    for v in out.iter_mut() {
        if let Some(s) = values.iter().find(|s| (*v - **s).norm() <= SNAP_DIST) {
            *v = *s;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// local models

fn shift_subs(z: &[C64; 2], trunc: usize) -> Vec<Poly> {
    let x = slots(z);
    (0..4)
        .map(|k| Poly::var(4, trunc, k).add(&Poly::constant(4, trunc, x[k])))
        .collect()
}

fn binom_half(j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (0.5 - i as f64) / (i as f64 + 1.0))
}

/// Taylor series of `F` about `z` (in shifted coordinates).
pub fn taylor(chart: &Chart, z: &[C64; 2], trunc: usize) -> Poly {
    let subs = shift_subs(z, trunc);
    match &chart.f {
        ChartFn::Rational { num, den, .. } => {
            let n = num.compose(&subs);
            let d = den.compose(&subs);
            let d0 = d.coeff(&[0, 0, 0, 0]);
            let u = d.from_degree(1).scale(-1.0 / d0);
            let mut inv = Poly::constant(4, trunc, C64::new(1.0, 0.0));
            let mut pw = inv.clone();
            for _ in 0..trunc {
                pw = pw.mul(&u);
                inv = inv.add(&pw);
            }
            n.mul(&inv).scale(1.0 / d0)
        }
        ChartFn::Radical { terms, .. } => {
            let mut f = Poly::zero(4, trunc);
            for t in terms {
                let g = t.g.compose(&subs);
                let g0 = g.coeff(&[0, 0, 0, 0]);
                let u = g.from_degree(1).scale(1.0 / g0);
                let mut s = Poly::constant(4, trunc, C64::new(1.0, 0.0));
                let mut pw = s.clone();
                for j in 1..=trunc {
                    pw = pw.mul(&u);
                    s = s.add(&pw.scale(C64::new(binom_half(j), 0.0)));
                }
                f = f.add(&s.scale(t.weight * g0.sqrt()));
            }
            f
        }
    }
}

/// Standard-position model of the chart at a CR point: the Taylor series
/// minus its constant, with the holomorphic linear term removed by the
/// shear `z̃₃ = z₃ − c·z`, which leaves all higher terms unchanged.
pub fn local_model(chart: &Chart, z: &[C64; 2]) -> Result<PSeries> {
    let f = taylor(chart, z, MODEL_TRUNC);
    let mut out = Poly::zero(4, MODEL_TRUNC);
    let scale = f.from_degree(1).max_abs().max(1.0);
    for (e, v) in f.terms() {
        let d: u8 = e.iter().sum();
        if d == 0 {
            continue;
        }
        if d == 1 {
            if e[2] + e[3] == 1 && v.norm() > 1e-9 * scale {
                return Err(LocusError::ResidualTooLarge(v.norm()));
            }
            continue;
        }
        out.add_term(e.clone(), *v);
    }
    Ok(PSeries::from_poly(2, out))
}

/// The model seen with the base orientation reversed: `z₂ ↔ z̄₂`.
pub fn orientation_reversed(model: &PSeries) -> PSeries {
    let mut out = Poly::zero(4, model.trunc());
    for (e, v) in model.poly().terms() {
        let mut f = e.clone();
        f.swap(1, 3);
        out.add_term(f, *v);
    }
    PSeries::from_poly(2, out)
}

fn oriented_model(model: &PSeries, class: OrientationClass) -> PSeries {
    match class {
        OrientationClass::Plus => model.clone(),
        OrientationClass::Minus => orientation_reversed(model),
    }
}

/// Intersection index: the sign of `det Γ` for the (orientation-corrected)
/// quadratic part.
pub fn point_index(model: &PSeries, class: OrientationClass) -> Result<Index> {
    let gamma = gamma_of(&oriented_model(model, class))?;
    let (_, s) = gamma_det_sign(&gamma).map_err(SeriesError::Mat)?;
    Ok(Index::from_sign(s))
}

/// Index recomputed from the real Hessian of the model.
pub fn hessian_point_index(model: &PSeries, class: OrientationClass) -> Result<Index> {
    let (_, s) = hessian_index(&oriented_model(model, class))?;
    Ok(Index::from_sign(s))
}

fn orientation_class(chart: &Chart) -> OrientationClass {
    // graph charts: the tangent frame at a CR point is the base frame,
    // so its orientation relative to the complex one is the chart sign
    if chart.orientation > 0 {
        OrientationClass::Plus
    } else {
        OrientationClass::Minus
    }
}

/// Locates, classifies and indexes the CR points of one chart.
pub fn chart_points(chart: &Chart, seeds_per_axis: usize) -> Result<(Vec<CRPoint>, Search)> {
    let search = find_cr_points(chart, seeds_per_axis)?;
    let class = orientation_class(chart);
    let mut pts = Vec::new();
    for (k, z) in search.locations.iter().enumerate() {
        let model = local_model(chart, z)?;
        let m = oriented_model(&model, class);
        let qrs = extract_QRS(&m)?;
        let row = classify_pair(&qrs.r, &qrs.s)?;
        let index = point_index(&model, class)?;
        pts.push(CRPoint {
            chart: chart.id.clone(),
            location: z.to_vec(),
            ambient: chart.ambient_point(z),
            orientation_class: class,
            index,
            table_row: row,
            residual: search.residuals[k],
            on_boundary: search.on_boundary[k],
        });
    }
    Ok((pts, search))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub seeds_per_axis: usize,
    pub convention: Convention,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { seeds_per_axis: DEFAULT_SEEDS, convention: Convention::Lai }
    }
}

/// All CR points of the manifold with the signed index sums.
pub fn enumerate(m: &ChartedManifold, opts: SearchOptions) -> Result<Enumeration> {
    let mut points: Vec<CRPoint> = Vec::new();
    let mut diverged = 0;
    let mut warnings = Vec::new();
    for chart in &m.charts {
        let (pts, search) = chart_points(chart, opts.seeds_per_axis)?;
        diverged += search.diverged;
        if search.identically_critical {
            warnings.push(format!("chart {} is identically critical", chart.id));
        }
        for p in pts {
            let dup = points.iter().any(|q| {
                q.ambient.len() == p.ambient.len()
                    && q.ambient.iter().zip(&p.ambient).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() < m.dedupe_dist
            });
            if !dup {
                if p.on_boundary {
                    warnings.push(format!("point {:?} in chart {} lies on the box boundary", p.location, p.chart));
                }
                points.push(p);
            }
        }
    }
    let degenerate = points.iter().filter(|p| p.index == Index::Degenerate).count();
    if degenerate > 0 {
        warnings.push(format!("{degenerate} degenerate point(s): not in general position, sums are unreliable"));
    }
    let mut i_plus = 0i64;
    let mut i_minus = 0i64;
    for p in &points {
        let v = p.index.as_i32() as i64;
        match (p.orientation_class, opts.convention) {
            (OrientationClass::Plus, _) => i_plus += v,
            (OrientationClass::Minus, Convention::Lai) => i_minus += v,
            (OrientationClass::Minus, Convention::Switched) => i_minus -= v,
        }
    }
    Ok(Enumeration {
        manifold: m.name.clone(),
        points,
        i_plus,
        i_minus,
        convention: opts.convention,
        degenerate,
        diverged_seeds: diverged,
        warnings,
    })
}

/// Compares index sums with the characteristic-number identities.
pub fn topology_check(m: &ChartedManifold, i_plus: i64, i_minus: i64, convention: Convention) -> Result<TopologyReport> {
    let exp = m.expected.ok_or(LocusError::NoExpectedTopology)?;
    let (sum_target, diff_target) = match exp {
        ExpectedTopology::C3 { chi, p1 } => (("chi", chi), ("-p1", -p1)),
        ExpectedTopology::Cp3Hypersurface { d, chi } => (("chi+4d^2", chi + 4 * d * d), ("6d+d^3", 6 * d + d * d * d)),
    };
    let (sum, diff) = (i_plus + i_minus, i_plus - i_minus);
    let (a, b) = match convention {
        Convention::Lai => (("I+ + I-", sum), ("I+ - I-", diff)),
        Convention::Switched => (("I+ - I-", diff), ("I+ + I-", sum)),
    };
    let checks = vec![
        IdentityCheck { name: format!("{} = {}", a.0, sum_target.0), expected: sum_target.1, computed: a.1, pass: a.1 == sum_target.1 },
        IdentityCheck { name: format!("{} = {}", b.0, diff_target.0), expected: diff_target.1, computed: b.1, pass: b.1 == diff_target.1 },
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(TopologyReport { checks, pass })
}

// ---------------------------------------------------------------------------
// built-in manifolds

const T: usize = 8;

fn z(k: usize) -> Poly {
    Poly::var(4, T, k)
}
fn zb(k: usize) -> Poly {
    Poly::var(4, T, 2 + k)
}
fn cst(v: f64) -> Poly {
    Poly::constant(4, T, C64::new(v, 0.0))
}
fn x2(k: usize) -> Poly {
    let s = z(k).add(&zb(k)).scale(C64::new(0.5, 0.0));
    s.mul(&s)
}
fn y2(k: usize) -> Poly {
    let s = z(k).sub(&zb(k)).scale(C64::new(0.0, -0.5));
    s.mul(&s)
}

fn positive(params: &[f64], n: usize, what: &str) -> Result<()> {
    if params.len() != n || params.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(LocusError::BadParams(format!("{what} needs {n} positive parameters, got {params:?}")));
    }
    Ok(())
}

const COLLAR: f64 = 1e-6;

/// Ellipsoid `d₁x₁² + d₂y₁² + d₃x₂² + d₄y₂² + d₅x₃² = 1` in `y₃ = 0`.
pub fn s4_ellipsoid(d: &[f64]) -> Result<ChartedManifold> {
    positive(d, 5, "s4")?;
    let g = cst(1.0)
        .sub(&x2(0).scale(C64::new(d[0], 0.0)))
        .sub(&y2(0).scale(C64::new(d[1], 0.0)))
        .sub(&x2(1).scale(C64::new(d[2], 0.0)))
        .sub(&y2(1).scale(C64::new(d[3], 0.0)));
    let bx = [
        [-1.0 / d[0].sqrt(), 1.0 / d[0].sqrt()],
        [-1.0 / d[1].sqrt(), 1.0 / d[1].sqrt()],
        [-1.0 / d[2].sqrt(), 1.0 / d[2].sqrt()],
        [-1.0 / d[3].sqrt(), 1.0 / d[3].sqrt()],
    ];
    let charts = [("upper", 1i8), ("lower", -1i8)]
        .iter()
        .map(|&(id, eta)| Chart {
            id: id.into(),
            f: ChartFn::radical(vec![(C64::new(eta as f64 / d[4].sqrt(), 0.0), g.clone())], COLLAR),
            domain_box: bx,
            orientation: eta,
            fixed_zero: vec![],
            ambient: AmbientMap::Graph,
            snap: vec![C64::new(0.0, 0.0)],
        })
        .collect();
    Ok(ChartedManifold {
        name: format!("s4_ellipsoid{d:?}"),
        charts,
        dedupe_dist: DEDUPE_DIST,
        expected: Some(ExpectedTopology::C3 { chi: 2, p1: 0 }),
    })
}

/// Product of ellipsoids `a x₁² + b y₁² + c x₃² = 1`, `d x₂² + e y₂² + f y₃² = 1`.
pub fn s2xs2(p: &[f64]) -> Result<ChartedManifold> {
    positive(p, 6, "s2xs2")?;
    let (a, b, c, d, e, f) = (p[0], p[1], p[2], p[3], p[4], p[5]);
    let g1 = cst(1.0).sub(&x2(0).scale(C64::new(a, 0.0))).sub(&y2(0).scale(C64::new(b, 0.0)));
    let g2 = cst(1.0).sub(&x2(1).scale(C64::new(d, 0.0))).sub(&y2(1).scale(C64::new(e, 0.0)));
    let bx = [
        [-1.0 / a.sqrt(), 1.0 / a.sqrt()],
        [-1.0 / b.sqrt(), 1.0 / b.sqrt()],
        [-1.0 / d.sqrt(), 1.0 / d.sqrt()],
        [-1.0 / e.sqrt(), 1.0 / e.sqrt()],
    ];
    let mut charts = Vec::new();
    for e1 in [1i8, -1] {
        for e2 in [1i8, -1] {
            charts.push(Chart {
                id: format!("eta({e1:+},{e2:+})"),
                f: ChartFn::radical(
                    vec![(C64::new(e1 as f64 / c.sqrt(), 0.0), g1.clone()), (C64::new(0.0, e2 as f64 / f.sqrt()), g2.clone())],
                    COLLAR,
                ),
                domain_box: bx,
                orientation: e1 * e2,
                fixed_zero: vec![],
                ambient: AmbientMap::Graph,
                snap: vec![C64::new(0.0, 0.0)],
            });
        }
    }
    Ok(ChartedManifold {
        name: format!("s2xs2{p:?}"),
        charts,
        dedupe_dist: DEDUPE_DIST,
        expected: Some(ExpectedTopology::C3 { chi: 4, p1: 0 }),
    })
}

/// `[z₀𝒫 : z₁𝒫 : z₂𝒫 : t𝒬]` with `𝒫 = 6|z₀|² + |z₁|² + 6|z₂|²` and
/// `𝒬 = 2z₀²z̄₁ + 2z₀z₁z̄₂ − z₀z₂z̄₁ + 2z₁z₂z̄₀`, in the three affine charts.
/// The second and third charts are searched only on the line `z₀ = 0`
/// (and the point `z₀ = z₁ = 0`), which the first chart does not cover.
pub fn cp2_iota(t: f64) -> Result<ChartedManifold> {
    if t == 0.0 || !t.is_finite() {
        return Err(LocusError::BadParams("t must be non-zero (t = 0 is the complex embedding)".into()));
    }
    // homogeneous variables as chart slots: (a, b) are the two free coordinates
    let hom = |index: usize| -> [(Poly, Poly); 3] {
        let one = (cst(1.0), cst(1.0));
        let va = (z(0), zb(0));
        let vb = (z(1), zb(1));
        match index {
            0 => [one, va, vb],
            1 => [va, one, vb],
            _ => [va, vb, one],
        }
    };
    let sr = 3f64.sqrt();
    let snap = vec![
        C64::new(0.0, 0.0),
        C64::new(2.0, 0.0),
        C64::new(sr, 0.0),
        C64::new(-sr, 0.0),
        C64::new(0.0, 3.0),
        C64::new(0.0, -3.0),
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
    ];
    let mut charts = Vec::new();
    for index in 0..3 {
        let [(z0, z0b), (z1, z1b), (z2, z2b)] = hom(index);
        let p = z0.mul(&z0b).scale(C64::new(6.0, 0.0)).add(&z1.mul(&z1b)).add(&z2.mul(&z2b).scale(C64::new(6.0, 0.0)));
        let q = z0.mul(&z0).mul(&z1b).scale(C64::new(2.0, 0.0))
            .add(&z0.mul(&z1).mul(&z2b).scale(C64::new(2.0, 0.0)))
            .sub(&z0.mul(&z2).mul(&z1b))
            .add(&z1.mul(&z2).mul(&z0b).scale(C64::new(2.0, 0.0)));
        charts.push(Chart {
            id: format!("z{index}=1"),
            f: ChartFn::rational(q.scale(C64::new(t, 0.0)), p),
            domain_box: [[-4.0, 4.0]; 4],
            orientation: 1,
            fixed_zero: match index {
                0 => vec![],
                1 => vec![0],
                _ => vec![0, 1],
            },
            ambient: AmbientMap::Projective { index },
            snap: snap.clone(),
        });
    }
    Ok(ChartedManifold {
        name: format!("cp2_iota(t={t})"),
        charts,
        dedupe_dist: DEDUPE_DIST,
        expected: Some(ExpectedTopology::Cp3Hypersurface { d: 1, chi: 3 }),
    })
}

/// Built-in manifold by name: `s4`, `s2xs2` or `cp2` (long names accepted).
pub fn builtin(name: &str, params: &[f64]) -> Result<ChartedManifold> {
    match name {
        "s4" | "s4_ellipsoid" => s4_ellipsoid(params),
        "s2xs2" => s2xs2(params),
        "cp2" | "cp2_iota" => {
            if params.len() != 1 {
                return Err(LocusError::BadParams("cp2 takes the single parameter t".into()));
            }
            cp2_iota(params[0])
        }
        other => Err(LocusError::BadParams(format!("unknown builtin {other:?}"))),
    }
}

// ---------------------------------------------------------------------------
// manifests

/// One rational graph chart of a user manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub id: String,
    pub num: PSeries,
    pub den: PSeries,
    pub domain_box: [[f64; 2]; 4],
    #[serde(default = "one_i8")]
    pub orientation: i8,
    #[serde(default)]
    pub fixed_zero: Vec<usize>,
}

fn one_i8() -> i8 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub charts: Vec<ChartSpec>,
    #[serde(default)]
    pub expected_topology: Option<ExpectedTopology>,
}

impl Manifest {
    pub fn build(&self) -> Result<ChartedManifold> {
        let mut charts = Vec::new();
        for c in &self.charts {
            if c.num.nvars() != 2 || c.den.nvars() != 2 {
                return Err(LocusError::Manifest(format!("chart {} must be in two variables", c.id)));
            }
            if c.orientation.abs() != 1 || c.fixed_zero.iter().any(|&v| v > 1) {
                return Err(LocusError::Manifest(format!("chart {}: bad orientation or constraint", c.id)));
            }
            if c.domain_box.iter().any(|[lo, hi]| !(lo < hi)) {
                return Err(LocusError::Manifest(format!("chart {}: empty domain box", c.id)));
            }
            charts.push(Chart {
                id: c.id.clone(),
                f: ChartFn::rational(c.num.poly().with_trunc(T.max(c.num.trunc())), c.den.poly().with_trunc(T.max(c.den.trunc()))),
                domain_box: c.domain_box,
                orientation: c.orientation,
                fixed_zero: c.fixed_zero.clone(),
                ambient: AmbientMap::Graph,
                snap: vec![],
            });
        }
        Ok(ChartedManifold { name: self.name.clone(), charts, dedupe_dist: DEDUPE_DIST, expected: self.expected_topology })
    }
}

#[cfg(test)]
mod tests;

//! Command-line front end shared by the `crclassify` binary and its tests.
//!
//! Every command renders into an [`Outcome`] instead of printing, so the
//! exit-code protocol can be tested in process:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | bad arguments, unreadable input, failed precondition |
//! | 2 | a value was snapped onto a classification boundary |
//! | 3 | a located CR point is degenerate (not in general position) |
//! | 4 | the verification suite reported a failure |

use crate::locus::{
    builtin, enumerate, topology_check, Convention, Enumeration, Index, Manifest, SearchOptions, TopologyReport,
    DEFAULT_SEEDS,
};
use crate::matcore::{CMat, C64};
use crate::normalform::{classify_pair, TableRow};
use crate::series::{cubic_flatten, HoloChange, PSeries};
use crate::verify::{run_all, CriterionResult, VerifyOptions};
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_BOUNDARY: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Classify,
    Flatten,
    Locate,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Builtin {
    S4,
    S2xs2,
    Cp2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Output {
    #[default]
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    #[default]
    Lai,
    Switched,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Lai => Convention::Lai,
            ConventionArg::Switched => Convention::Switched,
        }
    }
}

/// Classify CR singularities of real 4-manifolds in C³, flatten cubic
/// terms, locate CR points of embeddings and run the verification suite.
#[derive(Clone, Debug, Parser)]
#[command(name = "crclassify", version)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON input: `{"R", "S"}` for classify, a series for flatten, a
    /// manifest for locate; `-` reads stdin.
    #[arg(long = "input")]
    pub input_path: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Parameter of the CP² family.
    #[arg(long = "t", allow_hyphen_values = true)]
    pub t_param: Option<f64>,
    /// Semi-axes of the S⁴ ellipsoid, comma separated (five values).
    #[arg(long, value_delimiter = ',')]
    pub d: Vec<f64>,
    /// Parameters a,b,c,d,e,f of the S²×S² product.
    #[arg(long, value_delimiter = ',')]
    pub abc: Vec<f64>,
    /// Numerical tolerance in (0, 1e-3].
    #[arg(long, env = "CRCLASSIFY_TOL", value_parser = parse_tol)]
    pub tol: Option<f64>,
    /// Newton seeds per real axis of each chart box (at least 2).
    #[arg(long = "seeds", default_value_t = DEFAULT_SEEDS, value_parser = parse_seeds)]
    pub seed_grid: usize,
    #[arg(long, value_enum, default_value_t)]
    pub convention: ConventionArg,
    #[arg(long, value_enum, default_value_t)]
    pub output: Output,
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if t > 0.0 && t <= 1e-3 {
        Ok(t)
    } else {
        Err(format!("tolerance must lie in (0, 1e-3], got {t}"))
    }
}

fn parse_seeds(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n >= 2 {
        Ok(n)
    } else {
        Err(format!("seed grid must be at least 2, got {n}"))
    }
}

/// Rendered result of one invocation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
}

fn fail(cfg_output: Output, kind: &str, message: String) -> Outcome {
    let mut o = Outcome { code: EXIT_INPUT, ..Default::default() };
    match cfg_output {
        Output::Json => o.stdout = json(&ErrorReport { error: kind, message }),
        Output::Text => o.stderr = format!("error ({kind}): {message}\n"),
    }
    o
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable report");
    s.push('\n');
    s
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(cfg) => dispatch(&cfg),
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Outcome { code: EXIT_OK, stdout: text, stderr: String::new() }
                }
                _ => Outcome { code: EXIT_INPUT, stdout: String::new(), stderr: text },
            }
        }
    }
}

pub fn dispatch(cfg: &RunConfig) -> Outcome {
    match cfg.command {
        Command::Classify => run_classify(cfg),
        Command::Flatten => run_flatten(cfg),
        Command::Locate => run_locate(cfg),
        Command::Verify => run_verify(cfg),
    }
}

fn read_input(cfg: &RunConfig) -> Result<String, String> {
    let path = cfg.input_path.as_ref().ok_or("--input is required")?;
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s).map_err(|e| e.to_string())?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
    }
}

// ---------------------------------------------------------------------------
// number formatting

/// `%.12g`: twelve significant digits, trailing zeros removed.
pub fn g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..12).contains(&e) {
        let s = format!("{:.*}", (11 - e).max(0) as usize, x);
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{:.11e}", x);
        let (m, ex) = s.split_once('e').unwrap();
        let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
        format!("{m}e{ex}")
    }
}

/// `a+bi` with twelve significant digits per part.
pub fn fmt_c(z: C64) -> String {
    let im = g12(z.im);
    if im.starts_with('-') {
        format!("{}{}i", g12(z.re), im)
    } else {
        format!("{}+{}i", g12(z.re), im)
    }
}

fn fmt_m(m: &CMat) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|i| {
            let row: Vec<String> = (0..m.cols()).map(|j| fmt_c(m[(i, j)])).collect();
            format!("[{}]", row.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map_or("-".into(), |x| x.to_string())
}

// ---------------------------------------------------------------------------
// classify

#[derive(Deserialize)]
struct PairInput {
    #[serde(rename = "R")]
    r: CMat,
    #[serde(rename = "S")]
    s: CMat,
}

fn row_text(out: &mut String, row: &TableRow) {
    let _ = writeln!(out, "case          {}", row.r_case.label());
    let _ = writeln!(out, "form          {:?}", row.form);
    let _ = writeln!(out, "N             {}", fmt_m(&row.n));
    let _ = writeln!(out, "P             {}", fmt_m(&row.p));
    if row.moduli.is_empty() {
        let _ = writeln!(out, "moduli        none");
    } else {
        let ms: Vec<String> = row.moduli.iter().map(|m| format!("{} = {}", m.name, fmt_c(m.value))).collect();
        let _ = writeln!(out, "moduli        {}", ms.join(", "));
    }
    let _ = writeln!(out, "rho(N)        {}   sigma(N) {}", row.rho_n, fmt_opt(row.sigma_n));
    let _ = writeln!(out, "rho(P) rho(N|P) rho(Gamma) sigma(Gamma) det");
    let _ = writeln!(
        out,
        "{}      {}        {}          {}            {}",
        row.rho_p,
        row.rho_np,
        row.rho_gamma,
        fmt_opt(row.sigma_gamma),
        row.det_sign
    );
    let _ = writeln!(out, "det Gamma     {}", g12(row.det_gamma));
    let _ = writeln!(out, "witness       c = {}, A = {}, residual {}", fmt_c(row.witness.c), fmt_m(&row.witness.a), g12(row.witness.residual));
    let _ = writeln!(out, "boundary snap {}", if row.boundary { "yes" } else { "no" });
}

/// Classifies the pair `{"R": …, "S": …}` read from `--input`.
pub fn run_classify(cfg: &RunConfig) -> Outcome {
    let text = match read_input(cfg) {
        Ok(t) => t,
        Err(e) => return fail(cfg.output, "input", e),
    };
    let pair: PairInput = match serde_json::from_str(&text) {
        Ok(p) => p,
        Err(e) => return fail(cfg.output, "parse", e.to_string()),
    };
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let row = match classify_pair(&pair.r.with_tol(tol), &pair.s.with_tol(tol)) {
        Ok(r) => r,
        Err(e) => return fail(cfg.output, "classify", e.to_string()),
    };
    let code = if row.boundary { EXIT_BOUNDARY } else { EXIT_OK };
    let stdout = match cfg.output {
        Output::Json => json(&row),
        Output::Text => {
            let mut s = String::new();
            row_text(&mut s, &row);
            s
        }
    };
    Outcome { code, stdout, stderr: String::new() }
}

// ---------------------------------------------------------------------------
// flatten

#[derive(Serialize)]
struct FlattenReport<'a> {
    series: &'a PSeries,
    change: &'a HoloChange,
}

fn terms_text(out: &mut String, h: &PSeries, degree: usize) {
    for (a, b, v) in h.part(degree).terms() {
        let idx: Vec<String> = a.iter().zip(b).map(|(x, y)| format!("{x}{y}")).collect();
        let _ = writeln!(out, "  e{}  {}", idx.join(""), fmt_c(v));
    }
}

/// Removes all removable cubic terms from a series read from `--input`.
pub fn run_flatten(cfg: &RunConfig) -> Outcome {
    let text = match read_input(cfg) {
        Ok(t) => t,
        Err(e) => return fail(cfg.output, "input", e),
    };
    let h: PSeries = match serde_json::from_str(&text) {
        Ok(h) => h,
        Err(e) => return fail(cfg.output, "parse", e.to_string()),
    };
    let (flat, change) = match cubic_flatten(&h) {
        Ok(v) => v,
        Err(e) => return fail(cfg.output, "precondition", e.to_string()),
    };
    let stdout = match cfg.output {
        Output::Json => json(&FlattenReport { series: &flat, change: &change }),
        Output::Text => {
            let mut s = String::from("quadratic part (e = z1^a z̄1^b z2^c z̄2^d)\n");
            terms_text(&mut s, &flat, 2);
            s.push_str("cubic part\n");
            terms_text(&mut s, &flat, 3);
            let _ = writeln!(s, "linear change C = {}", fmt_m(&change.c));
            for (i, p) in change.p.iter().enumerate() {
                for (a, _, v) in p.terms() {
                    let mono: Vec<String> = a.iter().map(|x| x.to_string()).collect();
                    let _ = writeln!(s, "  p{} z^({})  {}", i + 1, mono.join(","), fmt_c(v));
                }
            }
            s
        }
    };
    Outcome { code: EXIT_OK, stdout, stderr: String::new() }
}

// ---------------------------------------------------------------------------
// locate

#[derive(Serialize)]
struct LocateReport<'a> {
    enumeration: &'a Enumeration,
    topology: Option<&'a TopologyReport>,
}

fn builtin_params(cfg: &RunConfig, b: Builtin) -> (&'static str, Vec<f64>) {
    match b {
        Builtin::S4 => ("s4", if cfg.d.is_empty() { vec![1.0; 5] } else { cfg.d.clone() }),
        Builtin::S2xs2 => ("s2xs2", if cfg.abc.is_empty() { vec![1.0, 2.0, 1.0, 3.0, 5.0, 1.0] } else { cfg.abc.clone() }),
        Builtin::Cp2 => ("cp2", vec![cfg.t_param.unwrap_or(1.0)]),
    }
}

/// Enumerates the CR points of a builtin embedding or a manifest.
pub fn run_locate(cfg: &RunConfig) -> Outcome {
    let manifold = match (cfg.builtin, &cfg.input_path) {
        (Some(_), Some(_)) => return fail(cfg.output, "input", "give either --builtin or --input, not both".into()),
        (Some(b), None) => {
            let (name, params) = builtin_params(cfg, b);
            builtin(name, &params).map_err(|e| e.to_string())
        }
        (None, Some(_)) => read_input(cfg).and_then(|t| {
            let m: Manifest = serde_json::from_str(&t).map_err(|e| e.to_string())?;
            m.build().map_err(|e| e.to_string())
        }),
        (None, None) => return fail(cfg.output, "input", "locate needs --builtin or --input".into()),
    };
    let manifold = match manifold {
        Ok(m) => m,
        Err(e) => return fail(cfg.output, "manifold", e),
    };
    let opts = SearchOptions { seeds_per_axis: cfg.seed_grid, convention: cfg.convention.into() };
    let en = match enumerate(&manifold, opts) {
        Ok(en) => en,
        Err(e) => return fail(cfg.output, "search", e.to_string()),
    };
    let topo = if manifold.expected.is_some() {
        match topology_check(&manifold, en.i_plus, en.i_minus, opts.convention) {
            Ok(t) => Some(t),
            Err(e) => return fail(cfg.output, "topology", e.to_string()),
        }
    } else {
        None
    };
    let code = if en.degenerate > 0 {
        EXIT_DEGENERATE
    } else if en.points.iter().any(|p| p.table_row.boundary || p.on_boundary) {
        EXIT_BOUNDARY
    } else {
        EXIT_OK
    };
    let stdout = match cfg.output {
        Output::Json => json(&LocateReport { enumeration: &en, topology: topo.as_ref() }),
        Output::Text => locate_text(&en, topo.as_ref()),
    };
    Outcome { code, stdout, stderr: String::new() }
}

fn locate_text(en: &Enumeration, topo: Option<&TopologyReport>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "manifold {}  ({} CR points)", en.manifold, en.points.len());
    for (k, p) in en.points.iter().enumerate() {
        let loc: Vec<String> = p.location.iter().map(|&z| fmt_c(z)).collect();
        let amb: Vec<String> = p.ambient.iter().map(|&z| fmt_c(z)).collect();
        let index = match p.index {
            Index::Plus => "+1",
            Index::Minus => "-1",
            Index::Degenerate => "degenerate",
        };
        let class = match p.orientation_class {
            crate::locus::OrientationClass::Plus => "N2+",
            crate::locus::OrientationClass::Minus => "N2-",
        };
        let r = &p.table_row;
        let _ = writeln!(s, "#{}  chart {}  at ({})", k + 1, p.chart, loc.join(", "));
        let _ = writeln!(s, "    ambient ({})", amb.join(", "));
        let _ = writeln!(
            s,
            "    {class}  index {index}  {:?}  N = {}  P = {}",
            r.form,
            fmt_m(&r.n),
            fmt_m(&r.p)
        );
        let _ = writeln!(
            s,
            "    rho(P) {}  rho(N|P) {}  rho(Gamma) {}  sigma(Gamma) {}  det {} ({})  residual {}",
            r.rho_p,
            r.rho_np,
            r.rho_gamma,
            fmt_opt(r.sigma_gamma),
            r.det_sign,
            g12(r.det_gamma),
            g12(p.residual)
        );
    }
    let conv = match en.convention {
        Convention::Lai => "lai",
        Convention::Switched => "switched",
    };
    let _ = writeln!(s, "I+ = {}, I- = {}  (convention {conv})", en.i_plus, en.i_minus);
    let _ = writeln!(s, "degenerate points {}, diverged seeds {}", en.degenerate, en.diverged_seeds);
    for w in &en.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    match topo {
        Some(t) => {
            for c in &t.checks {
                let _ = writeln!(
                    s,
                    "  {}: expected {}, computed {}  {}",
                    c.name,
                    c.expected,
                    c.computed,
                    if c.pass { "ok" } else { "MISMATCH" }
                );
            }
            let _ = writeln!(s, "topology {}", if t.pass { "PASS" } else { "FAIL" });
        }
        None => {
            let _ = writeln!(s, "topology not checked (no expected topology)");
        }
    }
    s
}

// ---------------------------------------------------------------------------
// verify

#[derive(Serialize)]
struct VerifyReport<'a> {
    pass: bool,
    criteria: &'a [CriterionResult],
}

/// Runs the ten verification criteria; exit 4 if any fails.
pub fn run_verify(cfg: &RunConfig) -> Outcome {
    let opts = VerifyOptions { tol: cfg.tol, seeds_per_axis: cfg.seed_grid, convention: cfg.convention.into() };
    let results = run_all(&opts);
    let pass = results.iter().all(|r| r.pass);
    let stdout = match cfg.output {
        Output::Json => json(&VerifyReport { pass, criteria: &results }),
        Output::Text => {
            let mut s = String::new();
            for r in &results {
                let _ = writeln!(s, "[{}] {:>2} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.id, r.name, r.detail);
            }
            let failed = results.iter().filter(|r| !r.pass).count();
            let _ = writeln!(s, "{} of {} criteria passed", results.len() - failed, results.len());
            s
        }
    };
    Outcome { code: if pass { EXIT_OK } else { EXIT_VERIFY }, stdout, stderr: String::new() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(g12(1.0), "1");
        assert_eq!(g12(-0.25), "-0.25");
        assert_eq!(g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(g12(2.0f64.sqrt() * 1e6), "1414213.56237");
        assert_eq!(g12(1.5e-9), "1.5e-9");
        assert_eq!(g12(-1e-17), "-1e-17");
        assert_eq!(fmt_c(C64::new(3.0f64.sqrt(), -1.0)), "1.73205080757-1i");
        assert_eq!(fmt_c(C64::new(0.0, 2.0)), "0+2i");
    }

    #[test]
    fn tolerance_and_seed_bounds() {
        assert!(parse_tol("1e-9").is_ok());
        assert!(parse_tol("1e-3").is_ok());
        assert!(parse_tol("0").is_err());
        assert!(parse_tol("0.01").is_err());
        assert!(parse_seeds("2").is_ok());
        assert!(parse_seeds("1").is_err());
    }

    #[test]
    fn parse_failures_exit_one() {
        assert_eq!(run(["crclassify", "frobnicate"]).code, EXIT_INPUT);
        assert_eq!(run(["crclassify", "verify", "--tol", "0.5"]).code, EXIT_INPUT);
        assert_eq!(run(["crclassify", "locate", "--seeds", "1"]).code, EXIT_INPUT);
        assert_eq!(run(["crclassify", "classify"]).code, EXIT_INPUT);
        assert_eq!(run(["crclassify", "--help"]).code, EXIT_OK);
    }
}

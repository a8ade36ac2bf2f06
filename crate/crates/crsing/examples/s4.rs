//! The ellipsoid `Σ dₖ·xₖ² = 1` in `R⁵ ⊂ C³` (with `y₃ = 0`): two CR points,
//! one complex and one anticomplex, with Bishop-type invariants
//! `|d₁ − d₂|/(d₁ + d₂)` and `|d₃ − d₄|/(d₃ + d₄)`.
//!
//! `cargo run --release --example s4 [d1,d2,d3,d4,d5]`

use crsing::locus::{enumerate, s4_ellipsoid, SearchOptions};

fn main() {
    let d: Vec<f64> = std::env::args()
        .nth(1)
        .map(|s| s.split(',').map(|x| x.parse().expect("numeric axis")).collect())
        .unwrap_or_else(|| vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    let en = enumerate(&s4_ellipsoid(&d).unwrap(), SearchOptions::default()).unwrap();
    for p in &en.points {
        let row = &p.table_row;
        println!(
            "{:>5}: {:?} index {}  N = diag({:.3}, {:.3})  P = diag({:.6}, {:.6})",
            p.chart,
            p.orientation_class,
            p.index.as_i32(),
            row.n[(0, 0)],
            row.n[(1, 1)],
            row.p[(0, 0)].re,
            row.p[(1, 1)].re
        );
    }
    let b = |x: f64, y: f64| (x - y).abs() / (x + y);
    let mut want = [b(d[0], d[1]), b(d[2], d[3])];
    want.sort_by(f64::total_cmp);
    println!("predicted entries {:.6}, {:.6}", want[0], want[1]);
    println!("I+ = {}, I- = {}", en.i_plus, en.i_minus);
}

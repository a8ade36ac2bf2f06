//! A product of two ellipsoidal 2-spheres in `C³`: four CR points of index
//! +1, split two and two between complex and anticomplex points.
//!
//! `cargo run --release --example s2xs2 [a,b,c,d,e,f]`

use crsing::locus::{enumerate, s2xs2, SearchOptions};

fn main() {
    let p: Vec<f64> = std::env::args()
        .nth(1)
        .map(|s| s.split(',').map(|x| x.parse().expect("numeric parameter")).collect())
        .unwrap_or_else(|| vec![1.0, 2.0, 1.0, 3.0, 5.0, 1.0]);
    let en = enumerate(&s2xs2(&p).unwrap(), SearchOptions::default()).unwrap();
    for pt in &en.points {
        let at: Vec<String> = pt.ambient.iter().map(|z| format!("{z:.4}")).collect();
        let mut diag = [pt.table_row.p[(0, 0)].re, pt.table_row.p[(1, 1)].re];
        diag.sort_by(f64::total_cmp);
        println!("({})  {:?}  index {}  P entries {:.6}, {:.6}", at.join(", "), pt.orientation_class, pt.index.as_i32(), diag[0], diag[1]);
    }
    let b = |x: f64, y: f64| (x - y).abs() / (x + y);
    println!("|a-b|/(a+b) = {:.6}, |d-e|/(d+e) = {:.6}", b(p[0], p[1]), b(p[3], p[4]));
    println!("I+ = {}, I- = {}", en.i_plus, en.i_minus);
}

//! The seven CR points of a totally real family of embeddings of CP² in
//! CP³ and the index sums against `6d + d³` and `χ + 4d²` for `d = 1`.
//!
//! `cargo run --release --example locate_cp2 [t]`

use crsing::locus::{cp2_iota, enumerate, topology_check, SearchOptions};

fn main() {
    let t: f64 = std::env::args().nth(1).map_or(1.0, |s| s.parse().expect("t must be a number"));
    let m = cp2_iota(t).unwrap();
    let en = enumerate(&m, SearchOptions::default()).unwrap();
    for p in &en.points {
        let at: Vec<String> = p.location.iter().map(|z| format!("{z:.6}")).collect();
        println!("{:>5}  ({})  {:?}  index {}  {:?}", p.chart, at.join(", "), p.orientation_class, p.index.as_i32(), p.table_row.form);
    }
    println!("I+ = {}, I- = {}", en.i_plus, en.i_minus);
    let rep = topology_check(&m, en.i_plus, en.i_minus, SearchOptions::default().convention).unwrap();
    for c in &rep.checks {
        println!("{}: expected {}, found {}", c.name, c.expected, c.computed);
    }
}

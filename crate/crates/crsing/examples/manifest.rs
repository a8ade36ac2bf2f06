//! CR points of a user-supplied graph chart, given as JSON.
//!
//! `z₃ = |z₁|² + |z₂|² + ¼(z₁² + z̄₁²)` has one elliptic point at the origin;
//! the same document can be fed to `crclassify locate --input`.
//!
//! `cargo run --release --example manifest`

use crsing::locus::{enumerate, Manifest, SearchOptions};

const DOC: &str = r#"{
  "name": "perturbed paraboloid",
  "charts": [{
    "id": "graph",
    "num": {"nvars": 2, "trunc": 4, "terms": [
      {"alpha": [1, 0], "beta": [1, 0], "re": 1.0, "im": 0.0},
      {"alpha": [0, 1], "beta": [0, 1], "re": 1.0, "im": 0.0},
      {"alpha": [2, 0], "beta": [0, 0], "re": 0.25, "im": 0.0},
      {"alpha": [0, 0], "beta": [2, 0], "re": 0.25, "im": 0.0}]},
    "den": {"nvars": 2, "trunc": 4, "terms": [{"alpha": [0, 0], "beta": [0, 0], "re": 1.0, "im": 0.0}]},
    "domain_box": [[-1, 1], [-1, 1], [-1, 1], [-1, 1]]
  }]
}"#;

fn main() {
    let manifest: Manifest = serde_json::from_str(DOC).unwrap();
    let en = enumerate(&manifest.build().unwrap(), SearchOptions { seeds_per_axis: 6, ..Default::default() }).unwrap();
    for p in &en.points {
        let row = &p.table_row;
        let moduli: Vec<String> = row.moduli.iter().map(|m| format!("{} = {:.4}", m.name, m.value.re)).collect();
        println!("{} at ({:.4}, {:.4}): {:?} [{}], index {}", p.chart, p.location[0], p.location[1], row.form, moduli.join(", "), p.index.as_i32());
    }
}

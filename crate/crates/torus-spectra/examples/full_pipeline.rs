//! End-to-end run from a JSON configuration: partition, normal form,
//! labeled spectrum and verification report written to ./pipeline-out.
//!
//! Run with: cargo run --release --example full_pipeline

use torus_spectra::config::RunConfig;
use torus_spectra::pipeline;

fn main() {
    let config = RunConfig::from_json(
        r#"{
        "lattice": {"basis": [[1, 0], [0, 1]], "kappa": [0.3, 0.2]},
        "potential": {"terms": [
            {"k": [1, 0], "re": 1.0}, {"k": [-1, 0], "re": 1.0},
            {"k": [0, 1], "re": 1.0}, {"k": [0, -1], "re": 1.0}
        ]},
        "radius": 12,
        "steps": 2,
        "seed": 7
    }"#,
    )
    .unwrap();

    let out_dir = std::path::Path::new("pipeline-out");
    let files = pipeline::run(&config, out_dir, true, false).unwrap();
    for f in &files {
        println!("wrote {}", f.display());
    }
    let verify = std::fs::read_to_string(out_dir.join("verify.json")).unwrap();
    println!("{verify}");
}

//! Resonance partition of a Fourier box: zones, blocks, invariant classes.
//!
//! Labels every lattice point of the inner ball by its resonance module
//! and coset, prints the class statistics and runs the geometric verifier.
//!
//! Run with: cargo run --release --example resonance_partition

use torus_spectra::partition::extended_partition;
use torus_spectra::{Lattice, ResonanceParams};

fn main() {
    let lattice = Lattice::euclidean(2, vec![0.0, 0.0]).unwrap();
    let params = ResonanceParams::defaults(2).unwrap();
    let part = extended_partition(&lattice, &params, 40.0).unwrap();

    println!("inner radius {}, enlarged to {:.1}", part.inner_radius, part.outer_radius);
    println!("points per level: {:?}", part.summary.level_counts);
    println!("invariant classes: {}", part.summary.class_count);
    println!("boundary-uncertain points: {}", part.summary.uncertain_count);
    if let Some(n) = part.summary.top_block_max_norm {
        println!("top-level block contained in ‖ξ+κ‖ ≤ {n:.3}");
    }
    for (r, d) in &part.summary.e0_density_by_radius {
        println!("density of the nonresonant set within radius {r:>5.1}: {d:.4}");
    }

    // a vertical resonant class and its points
    let module = torus_spectra::saturate(2, &[vec![0, 1]]);
    let key = (module, vec![14, 0]);
    if let Some(points) = part.classes.get(&key) {
        println!("class over β=(14,0): {points:?}");
    }

    let report = part.verify_geometry();
    println!(
        "verifier: {} overlaps, {} separation violations, densities nondecreasing: {}",
        report.overlap_violations, report.separation_violations, report.density_nondecreasing
    );
    for (s, k) in &report.fitted_k {
        println!("observed projection constant at level {s}: {k:.3}");
    }
}

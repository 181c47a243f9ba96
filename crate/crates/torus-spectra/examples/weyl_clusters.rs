//! Eigenvalue counting bounds and spectral cluster extraction.
//!
//! Run with: cargo run --release --example weyl_clusters

use torus_spectra::op::BoxSet;
use torus_spectra::spectra::{find_clusters, weyl_count_check};
use torus_spectra::Lattice;

fn main() {
    for (name, lattice) in [
        ("Euclidean", Lattice::euclidean(2, vec![0.0, 0.0]).unwrap()),
        ("hexagonal", Lattice::hexagonal(vec![0.0, 0.0]).unwrap()),
    ] {
        let box_set = BoxSet::ball(&lattice, 22.0);
        let mut eigs: Vec<f64> = box_set
            .points
            .iter()
            .map(|p| lattice.free_eigenvalue(p))
            .collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for r in [5.0, 10.0, 20.0] {
            let (count, bound) = weyl_count_check(&eigs, &lattice, r, 0.0).unwrap();
            println!("{name}: #{{|λ| ≤ {r}²}} = {count} ≤ {bound:.0}");
        }
        let clusters = find_clusters(&eigs, 1.0, 1.0).unwrap();
        let widest = clusters
            .intervals
            .iter()
            .map(|(a, b)| b - a)
            .fold(0.0f64, f64::max);
        println!(
            "{name}: {} clusters, widest {widest:.3}, smallest inter-cluster gap {:.3e}",
            clusters.intervals.len(),
            clusters.gaps.iter().fold(f64::INFINITY, |a, &b| a.min(b)),
        );
    }
}

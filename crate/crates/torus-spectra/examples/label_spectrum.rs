//! Eigenvalue labeling: the bijection ξ ↦ λ_ξ and its residuals.
//!
//! For −d²/dx² + 2cos x the labeled eigenvalues match the second-order
//! perturbation series ξ² + Σ_{k=±1} 1/(ξ² − (ξ+k)²) away from the
//! resonant blob at the origin.
//!
//! Run with: cargo run --release --example label_spectrum

use std::sync::Arc;

use torus_spectra::normalform::normal_form;
use torus_spectra::op::{laplacian_matrix, weyl_matrix, BoxSet, TruncatedOperator};
use torus_spectra::partition::extended_partition;
use torus_spectra::spectra::label_eigenvalues;
use torus_spectra::{FourierSymbol, Lattice, ResonanceParams};

fn main() {
    let lattice = Lattice::euclidean(1, vec![0.0]).unwrap();
    let params = ResonanceParams::defaults(1).unwrap();
    let potential = FourierSymbol::two_cos(1, &[1]);
    let radius = 40.0;

    let part = extended_partition(&lattice, &params, radius).unwrap();
    let box_set = Arc::new(BoxSet::ball(&lattice, radius));
    let nf = normal_form(&lattice, &potential, box_set.clone(), &params, 2).unwrap();
    let lap = laplacian_matrix(&lattice, box_set.clone());
    let v_op = weyl_matrix(&lattice, &potential, box_set.clone()).unwrap();
    let h = TruncatedOperator {
        box_set,
        matrix: &lap.matrix + &v_op.matrix,
        provenance: "hamiltonian".into(),
    };
    let labeled = label_eigenvalues(&h, &nf, &part).unwrap();

    println!("  xi    lambda        series        |lambda - series|");
    for xi in [2i64, 3, 5, 8, 13, 21, 30] {
        let e = labeled.get(&[xi]).unwrap();
        let f = xi as f64;
        let series = f * f + (1..=1)
            .flat_map(|k| [k as f64, -(k as f64)])
            .map(|k| 1.0 / (f * f - (f + k) * (f + k)))
            .sum::<f64>();
        println!(
            "{:>4}  {:<12.6} {:<12.6} {:.3e}",
            xi,
            e.lambda,
            series,
            (e.lambda - series).abs()
        );
    }
}

//! Dimensional reduction of resonant blocks and the reduction tree.
//!
//! Every nontrivial class W_{M,β} of the two-dimensional operator is
//! reduced to a one-dimensional Schrödinger operator with a reduced
//! Floquet phase and an energy shift ℓ²; the block and reduced spectra
//! agree exactly after the shift.
//!
//! Run with: cargo run --release --example block_reduction

use std::sync::Arc;

use torus_spectra::dimred::{block_operator, iterate_reduction, reduce_block, NodeKind};
use torus_spectra::linalg::eigvalsh;
use torus_spectra::normalform::normal_form;
use torus_spectra::op::BoxSet;
use torus_spectra::partition::extended_partition;
use torus_spectra::{FourierSymbol, Lattice, ResonanceParams};

fn main() {
    let lattice = Lattice::euclidean(2, vec![0.3, 0.2]).unwrap();
    let params = ResonanceParams::defaults(2).unwrap();
    let potential = FourierSymbol::cosine_sum(2, &[vec![1, 0], vec![0, 1]]);
    let radius = 16.0;

    let part = extended_partition(&lattice, &params, radius).unwrap();
    let box_set = Arc::new(BoxSet::ball(&lattice, radius));
    let nf = normal_form(&lattice, &potential, box_set, &params, 2).unwrap();

    for ((module, beta), points) in &part.classes {
        if module.rank() != 1 || points.len() < 3 {
            continue;
        }
        let red = reduce_block(&lattice, &nf, &part, module, beta).unwrap();
        let (_, block) = block_operator(&nf, &lattice, points).unwrap();
        let block_spec = eigvalsh(&block).unwrap();
        let red_spec = red.spectrum().unwrap();
        let worst: f64 = block_spec
            .iter()
            .zip(&red_spec)
            .map(|(a, b)| (a - (b + red.ell_sq)).abs())
            .fold(0.0, f64::max);
        println!(
            "block M basis {:?}, β {:?}: {} points, ℓ² = {:.4}, κ' = {:?}, spectra match to {:.2e}",
            module.basis,
            beta,
            points.len(),
            red.ell_sq,
            red.kappa_prime.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
            worst
        );
    }

    let tree = iterate_reduction(&lattice, &potential, radius, &params, 1, 2).unwrap();
    println!(
        "reduction tree: depth {}, {} multiplier leaves, {} reduced blocks, {} top blocks",
        tree.depth(),
        tree.count_kind(NodeKind::Multiplier),
        tree.count_kind(NodeKind::Reduced),
        tree.count_kind(NodeKind::TopBlock),
    );
}

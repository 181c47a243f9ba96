//! Metric data and lattice constants for the square and hexagonal tori.
//!
//! Run with: cargo run --release --example lattice_info

use torus_spectra::Lattice;

fn report(name: &str, lattice: &Lattice) {
    println!("== {name} ==");
    println!("g      = {:?}", lattice.metric_g);
    println!("g*     = {:?}", lattice.metric_g_star);
    println!(
        "shortest dual vector: ‖k‖² = {:.6} at k = {:?}",
        lattice.coercivity, lattice.coercivity_witness
    );
    println!(
        "min parallelepiped volume: bound {:.6}, exact {:?}",
        lattice.min_volume, lattice.min_volume_exact
    );
    println!();
}

fn main() {
    let euclid = Lattice::euclidean(2, vec![0.0, 0.0]).unwrap();
    report("Euclidean Z^2", &euclid);

    let hex = Lattice::hexagonal(vec![0.0, 0.0]).unwrap();
    report("hexagonal lattice", &hex);

    let skew = Lattice::new(vec![vec![1.0, 0.0], vec![0.3, 1.1]], vec![0.25, 0.5]).unwrap();
    report("skew lattice with Floquet phase", &skew);

    // the volume bound for a pair of integer vectors
    let bound = euclid
        .volume_bound(&[vec![1, 0], vec![1, 2]], 1.0, 5f64.sqrt())
        .unwrap();
    println!("‖w‖ bound for span{{(1,0),(1,2)}}, α=1, N=√5: {bound:.6}");
}

//! Remainder decay of the iterative normal form for −d²/dx² + 2cos x.
//!
//! After N conjugation steps the interior remainder rows shrink like
//! ⟨ξ⟩^{-2δN}; the example prints per-step profiles and the fitted decay
//! exponents.
//!
//! Run with: cargo run --release --example normal_form_decay

use std::sync::Arc;

use torus_spectra::normalform::normal_form;
use torus_spectra::op::BoxSet;
use torus_spectra::spectra::{asymptotic_fit, FitOutcome};
use torus_spectra::{FourierSymbol, Lattice, ResonanceParams};

fn main() {
    let lattice = Lattice::euclidean(1, vec![0.0]).unwrap();
    let params = ResonanceParams::defaults(1).unwrap();
    let potential = FourierSymbol::two_cos(1, &[1]);
    let box_set = Arc::new(BoxSet::ball(&lattice, 40.0));

    for steps in 1..=3 {
        let nf = normal_form(&lattice, &potential, box_set.clone(), &params, steps).unwrap();
        let last = nf.diagnostics.last().unwrap();
        let window: Vec<(f64, f64)> = last
            .profile
            .iter()
            .copied()
            .filter(|(x, _)| *x >= 8.0)
            .collect();
        print!(
            "steps {steps}: unitary dev {:.2e}, max interior row {:.3e}",
            last.unitary_deviation, last.max_interior_row_norm
        );
        match asymptotic_fit(&window) {
            Ok(FitOutcome::Fit(fit)) => println!(
                ", decay slope {:.3} (target {:.1})",
                fit.slope,
                -2.0 * params.delta * steps as f64
            ),
            Ok(FitOutcome::Exact) => println!(", remainder vanished"),
            Err(e) => println!(", fit unavailable: {e}"),
        }
    }
}

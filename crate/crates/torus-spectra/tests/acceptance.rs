//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Run with `cargo test --test acceptance -- --nocapture`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use once_cell::sync::Lazy;

use torus_spectra::dimred::{block_operator, reduce_block};
use torus_spectra::linalg::{eigvalsh, identity_deviation, matmul};
use torus_spectra::normalform::{normal_form, verify_block_invariance, NormalFormOutput};
use torus_spectra::op::{laplacian_matrix, weyl_matrix, BoxSet, TruncatedOperator};
use torus_spectra::partition::{extended_partition, PartitionResult};
use torus_spectra::pipeline::quasimode_suite;
use torus_spectra::spectra::{
    asymptotic_fit, directional_samples, find_clusters, label_eigenvalues,
    weyl_count_check, FitOutcome, LabeledSpectrum,
};
use torus_spectra::{FourierSymbol, Lattice, ResonanceParams};

fn report(criterion: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:02} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn timed_partition(kappa: Vec<f64>, radius: f64) -> (PartitionResult, Duration) {
    let lattice = Lattice::euclidean(2, kappa).unwrap();
    let params = ResonanceParams::defaults(2).unwrap();
    let t = Instant::now();
    let part = extended_partition(&lattice, &params, radius).unwrap();
    (part, t.elapsed())
}

static PART60_K0: Lazy<(PartitionResult, Duration)> =
    Lazy::new(|| timed_partition(vec![0.0, 0.0], 60.0));
static PART60_KF: Lazy<(PartitionResult, Duration)> =
    Lazy::new(|| timed_partition(vec![0.3, 0.2], 60.0));
static PART90_K0: Lazy<(PartitionResult, Duration)> =
    Lazy::new(|| timed_partition(vec![0.0, 0.0], 90.0));

struct D2Fixture {
    lattice: Lattice,
    partition: PartitionResult,
    nf: NormalFormOutput,
    h_op: TruncatedOperator,
}

/// Shared d=2 run: κ=(0.3,0.2), V = 2cos x₁ + 2cos x₂, metric ball of
/// radius 20 (≈ 1257 modes), three conjugation steps.
static D2: Lazy<D2Fixture> = Lazy::new(|| {
    let lattice = Lattice::euclidean(2, vec![0.3, 0.2]).unwrap();
    let params = ResonanceParams::defaults(2).unwrap();
    let potential = FourierSymbol::cosine_sum(2, &[vec![1, 0], vec![0, 1]]);
    let partition = extended_partition(&lattice, &params, 20.0).unwrap();
    let box_set = Arc::new(BoxSet::ball(&lattice, 20.0));
    let nf = normal_form(&lattice, &potential, box_set.clone(), &params, 3).unwrap();
    let lap = laplacian_matrix(&lattice, box_set.clone());
    let v_op = weyl_matrix(&lattice, &potential, box_set.clone()).unwrap();
    let h_op = TruncatedOperator {
        box_set,
        matrix: &lap.matrix + &v_op.matrix,
        provenance: "hamiltonian".into(),
    };
    D2Fixture {
        lattice,
        partition,
        nf,
        h_op,
    }
});

struct D1Fixture {
    labeled: LabeledSpectrum,
}

/// Shared d=1 run: κ=0, V = 2cos x, radius 40, two steps.
static D1: Lazy<D1Fixture> = Lazy::new(|| {
    let lattice = Lattice::euclidean(1, vec![0.0]).unwrap();
    let params = ResonanceParams::defaults(1).unwrap();
    let potential = FourierSymbol::two_cos(1, &[1]);
    let partition = extended_partition(&lattice, &params, 40.0).unwrap();
    let box_set = Arc::new(BoxSet::ball(&lattice, 40.0));
    let nf = normal_form(&lattice, &potential, box_set.clone(), &params, 2).unwrap();
    let lap = laplacian_matrix(&lattice, box_set.clone());
    let v_op = weyl_matrix(&lattice, &potential, box_set.clone()).unwrap();
    let h_op = TruncatedOperator {
        box_set,
        matrix: &lap.matrix + &v_op.matrix,
        provenance: "hamiltonian".into(),
    };
    let labeled = label_eigenvalues(&h_op, &nf, &partition).unwrap();
    D1Fixture { labeled }
});

#[test]
fn criterion_01_partition_soundness() {
    let (p0, t0) = &*PART60_K0;
    let (pf, tf) = &*PART60_KF;
    let tv = Instant::now();
    let r0 = p0.verify_geometry();
    let rf = pf.verify_geometry();
    let verify_time = tv.elapsed();

    let total = *t0 + *tf + verify_time;
    let complete0 = p0.labels.len() == BoxSet::ball(&p0.lattice, 60.0).len();
    let completef = pf.labels.len() == BoxSet::ball(&pf.lattice, 60.0).len();
    let clean = r0.overlap_violations == 0
        && rf.overlap_violations == 0
        && r0.separation_violations == 0
        && rf.separation_violations == 0;
    let pass = complete0 && completef && clean && total <= Duration::from_secs(120);
    report(
        1,
        "partition soundness",
        pass,
        &format!(
            "κ=0: {} labels, κ=(0.3,0.2): {} labels, 0 violations: {clean}, runtime {:.1}s",
            p0.labels.len(),
            pf.labels.len(),
            total.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_finite_top_block() {
    let (p60, _) = &*PART60_K0;
    let (p90, _) = &*PART90_K0;
    let mut e2_60 = p60.points_at_level(2);
    let mut e2_90 = p90.points_at_level(2);
    e2_60.sort();
    e2_90.sort();
    let n60 = p60.summary.top_block_max_norm.unwrap_or(0.0);
    let n90 = p90.summary.top_block_max_norm.unwrap_or(0.0);
    let stable = e2_60 == e2_90;
    let pass = stable && !e2_60.is_empty() && n60.is_finite();
    report(
        2,
        "finite top block",
        pass,
        &format!(
            "{} points, n_obs = {n60:.3} at radius 60, {n90:.3} at radius 90, stable: {stable}",
            e2_60.len()
        ),
    );
}

#[test]
fn criterion_03_density_trend() {
    let (p90, _) = &*PART90_K0;
    let densities: Vec<f64> = [20.0, 40.0, 60.0, 90.0]
        .iter()
        .map(|&r| p90.e0_density(r))
        .collect();
    let nondecreasing = densities.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let pass = nondecreasing && densities[3] >= 0.8;
    report(
        3,
        "density trend of the nonresonant set",
        pass,
        &format!("densities at (20,40,60,90) = {densities:?}"),
    );
}

#[test]
fn criterion_04_unitarity_and_spectral_conservation() {
    let fx = &*D2;
    let unitarity = identity_deviation(&matmul(&fx.nf.u, &fx.nf.u.adjoint()));
    let conj = matmul(&matmul(&fx.nf.u, &fx.h_op.matrix), &fx.nf.u.adjoint());
    let e1 = eigvalsh(&fx.h_op.matrix).unwrap();
    let e2 = eigvalsh(&conj).unwrap();
    let dev: f64 = e1
        .iter()
        .zip(&e2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let pass = unitarity <= 1e-10 && dev <= 1e-10;
    report(
        4,
        "unitarity and spectral conservation",
        pass,
        &format!(
            "{} modes, ‖U*U−I‖ = {unitarity:.2e}, spectral deviation {dev:.2e}",
            fx.h_op.dim()
        ),
    );
}

#[test]
fn criterion_05_structural_block_invariance() {
    let fx = &*D2;
    let violation = verify_block_invariance(&fx.nf, &fx.partition).unwrap();
    let pass = violation == 0.0;
    report(
        5,
        "structural block invariance",
        pass,
        &format!("max off-block entry of −Δ+𝒩 = {violation:.3e}"),
    );
}

#[test]
fn criterion_06_remainder_decay() {
    let lattice = Lattice::euclidean(1, vec![0.0]).unwrap();
    let params = ResonanceParams::defaults(1).unwrap();
    let potential = FourierSymbol::two_cos(1, &[1]);
    let box_set = Arc::new(BoxSet::ball(&lattice, 40.0));
    let mut detail = String::new();
    let mut pass = true;
    for steps in [1usize, 2] {
        let nf = normal_form(&lattice, &potential, box_set.clone(), &params, steps).unwrap();
        let profile: Vec<(f64, f64)> = nf
            .diagnostics
            .last()
            .unwrap()
            .profile
            .iter()
            .copied()
            .filter(|(x, _)| *x >= 8.0)
            .collect();
        let target = -2.0 * params.delta * steps as f64;
        match asymptotic_fit(&profile).unwrap() {
            FitOutcome::Fit(fit) => {
                let ok = (fit.slope - target).abs() <= 0.3 * target.abs();
                pass &= ok;
                detail.push_str(&format!(
                    "steps {steps}: slope {:.3} (target {target:.1}); ",
                    fit.slope
                ));
            }
            FitOutcome::Exact => {
                detail.push_str(&format!("steps {steps}: remainder exactly zero; "));
            }
        }
    }
    report(6, "remainder decay", pass, detail.trim_end());
}

#[test]
fn criterion_07_eigenvalue_asymptotics_oracle() {
    let fx = &*D1;
    let series = |xi: f64| xi * xi + 2.0 / (4.0 * xi * xi - 1.0);
    let mut worst_window: f64 = 0.0;
    for n in 10..=30i64 {
        for xi in [n, -n] {
            let e = fx.labeled.get(&[xi]).unwrap();
            worst_window = worst_window.max((e.lambda - series(xi as f64)).abs());
        }
    }
    let mut worst_five: f64 = 0.0;
    for xi in [5i64, -5] {
        let e = fx.labeled.get(&[xi]).unwrap();
        worst_five = worst_five.max((e.lambda - series(5.0)).abs());
    }
    let pass = worst_window <= 5e-3 && worst_five <= 1e-3;
    report(
        7,
        "eigenvalue asymptotics vs perturbation series",
        pass,
        &format!(
            "max |λ−series| = {worst_window:.2e} on 10 ≤ |ξ| ≤ 30, {worst_five:.2e} at |ξ|=5"
        ),
    );
}

#[test]
fn criterion_08_dimensional_reduction_exactness() {
    let fx = &*D2;
    let mut blocks = 0;
    let mut worst: f64 = 0.0;
    for ((module, beta), points) in &fx.partition.classes {
        if module.rank() != 1 {
            continue;
        }
        let red = reduce_block(&fx.lattice, &fx.nf, &fx.partition, module, beta).unwrap();
        let (_, block) = block_operator(&fx.nf, &fx.lattice, points).unwrap();
        let block_spec = eigvalsh(&block).unwrap();
        let red_spec = red.spectrum().unwrap();
        assert_eq!(block_spec.len(), red_spec.len());
        for (a, b) in block_spec.iter().zip(&red_spec) {
            worst = worst.max((a - (b + red.ell_sq)).abs());
        }
        blocks += 1;
    }
    let pass = blocks > 0 && worst <= 1e-10;
    report(
        8,
        "dimensional reduction exactness",
        pass,
        &format!("{blocks} blocks, worst multiset deviation {worst:.2e}"),
    );
}

#[test]
fn criterion_09_quasimode_property_suite() {
    let (trials, held, failures) = quasimode_suite(20240917, 1000).unwrap();
    let pass = failures == 0 && held > 100;
    report(
        9,
        "quasimode counting suite",
        pass,
        &format!("{trials} trials, hypothesis engaged {held} times, {failures} failures"),
    );
}

#[test]
fn criterion_10_weyl_and_cluster_invariants() {
    let mut pass = true;
    let mut detail = String::new();
    for (name, lattice) in [
        ("euclid", Lattice::euclidean(2, vec![0.0, 0.0]).unwrap()),
        ("hex", Lattice::hexagonal(vec![0.0, 0.0]).unwrap()),
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
            pass &= (count as f64) <= bound;
            detail.push_str(&format!("{name} R={r}: {count} ≤ {bound:.0}; "));
        }
        // cluster invariants on the free spectrum
        let window = 1.0;
        let n_exp = 1.0;
        let clusters = find_clusters(&eigs, window, n_exp).unwrap();
        let widths_ok = clusters
            .intervals
            .iter()
            .all(|(a, b)| b - a <= 2.0 * window + 1e-12);
        let gaps_ok = clusters.gaps.iter().enumerate().all(|(j, g)| {
            *g >= window / clusters.intervals[j].1.abs().max(1.0).powf(n_exp) - 1e-12
        });
        let c_count = (4.0 / lattice.coercivity.sqrt()).powi(2) * 2.0;
        let counts_ok = clusters
            .intervals
            .iter()
            .zip(&clusters.counts)
            .all(|((_, b), &c)| (c as f64) <= c_count * b.abs().max(1.0));
        pass &= widths_ok && gaps_ok && counts_ok;
        detail.push_str(&format!(
            "{name} clusters: widths {widths_ok}, gaps {gaps_ok}, counts {counts_ok}; "
        ));
    }
    // the interacting d=1 spectrum
    let fx = &*D1;
    let mut eigs: Vec<f64> = fx.labeled.entries.iter().map(|e| e.lambda).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let clusters = find_clusters(&eigs, 1.0, 1.0).unwrap();
    let widths_ok = clusters.intervals.iter().all(|(a, b)| b - a <= 2.0 + 1e-12);
    pass &= widths_ok;
    detail.push_str(&format!("d=1 interacting clusters: widths {widths_ok}"));
    report(10, "counting bound and cluster invariants", pass, &detail);
}

/// Perturbative d=2 run for the directional fits: the coupling strength
/// 0.05 keeps every eigenvalue shift far below the local spectral spacing,
/// so the labeling bijection is unambiguous and the residuals isolate the
/// expansion error.
static D2_PERT: Lazy<(Lattice, LabeledSpectrum)> = Lazy::new(|| {
    let lattice = Lattice::euclidean(2, vec![0.3, 0.2]).unwrap();
    let params = ResonanceParams::defaults(2).unwrap();
    let eta = num_complex::Complex64::new(0.05, 0.0);
    let potential = FourierSymbol::from_constants(
        2,
        &[
            (vec![1, 0], eta),
            (vec![-1, 0], eta),
            (vec![0, 1], eta),
            (vec![0, -1], eta),
        ],
    );
    let partition = extended_partition(&lattice, &params, 20.0).unwrap();
    let box_set = Arc::new(BoxSet::ball(&lattice, 20.0));
    let nf = normal_form(&lattice, &potential, box_set.clone(), &params, 2).unwrap();
    let lap = laplacian_matrix(&lattice, box_set.clone());
    let v_op = weyl_matrix(&lattice, &potential, box_set.clone()).unwrap();
    let h_op = TruncatedOperator {
        box_set,
        matrix: &lap.matrix + &v_op.matrix,
        provenance: "hamiltonian".into(),
    };
    let labeled = label_eigenvalues(&h_op, &nf, &partition).unwrap();
    (lattice, labeled)
});

#[test]
fn criterion_11_directional_decay() {
    let (lattice, labeled) = &*D2_PERT;
    let module = torus_spectra::saturate(2, &[vec![0, 1]]);
    let (along, _) = directional_samples(lattice, labeled, &module);
    // isolate the across-class dependence: one representative per class at
    // the smallest in-module component
    let mut per_class: std::collections::BTreeMap<Vec<i64>, (f64, f64, f64)> =
        std::collections::BTreeMap::new();
    for e in &labeled.entries {
        if e.module != module || !e.certain {
            continue;
        }
        let w = lattice.shifted(&e.xi);
        let (w_m, w_perp) = lattice.project_span(&w, &module.basis);
        let bm = (1.0 + lattice.dual_norm_sq(&w_m)).sqrt();
        let bp = (1.0 + lattice.dual_norm_sq(&w_perp)).sqrt();
        per_class
            .entry(e.beta.clone())
            .and_modify(|v| {
                if bm < v.0 {
                    *v = (bm, bp, e.residual.abs());
                }
            })
            .or_insert((bm, bp, e.residual.abs()));
    }
    let across: Vec<(f64, f64)> = per_class.values().map(|v| (v.1, v.2)).collect();

    let along_fit = match asymptotic_fit(&along).unwrap() {
        FitOutcome::Fit(f) => f,
        FitOutcome::Exact => panic!("residuals unexpectedly vanish"),
    };
    let across_fit = match asymptotic_fit(&across).unwrap() {
        FitOutcome::Fit(f) => f,
        FitOutcome::Exact => panic!("residuals unexpectedly vanish"),
    };
    let pass = along_fit.slope < 0.0 && across_fit.slope.abs() < 0.3;
    report(
        11,
        "directional decay of residuals",
        pass,
        &format!(
            "along-module slope {:.3} ({} samples), across slope {:.3} ({} samples)",
            along_fit.slope,
            along.len(),
            across_fit.slope,
            across.len()
        ),
    );
}

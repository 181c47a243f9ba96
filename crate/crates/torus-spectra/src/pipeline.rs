//! Pipeline orchestration and artifact emission.
//!
//! `run` executes lattice → partition → normal form → spectrum → verify
//! and writes JSON/CSV artifacts; outputs are byte-identical across runs
//! with the same configuration and seed. Every artifact embeds the config
//! hash and the library version.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{identity_deviation, matmul};
use crate::normalform::{normal_form, verify_block_invariance, NormalFormOutput};
use crate::op::{laplacian_matrix, weyl_matrix, BoxSet, CMatrix, TruncatedOperator};
use crate::partition::{extended_partition, PartitionResult};
use crate::spectra::{
    eigensolve, find_clusters, label_eigenvalues, neg_sobolev_norm, quasimode_match,
    LabeledSpectrum,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Apply the TORUS_SPECTRA_THREADS cap to the global worker pool.
pub fn init_thread_cap() {
    if let Ok(v) = std::env::var("TORUS_SPECTRA_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn meta(config: &RunConfig) -> serde_json::Value {
    json!({ "config_hash": config.hash(), "version": VERSION })
}

pub fn lattice_info_json(lattice: &Lattice) -> serde_json::Value {
    json!({
        "dimension": lattice.dim,
        "basis": lattice.basis,
        "metric_g": lattice.metric_g,
        "metric_g_star": lattice.metric_g_star,
        "kappa": lattice.kappa,
        "coercivity": lattice.coercivity,
        "coercivity_witness": lattice.coercivity_witness,
        "min_volume_bound": lattice.min_volume,
        "min_volume_exact": lattice.min_volume_exact,
    })
}

pub fn partition_json(config: &RunConfig, partition: &PartitionResult) -> serde_json::Value {
    let labels: Vec<serde_json::Value> = partition
        .labels
        .iter()
        .map(|(xi, l)| {
            json!({
                "xi": xi,
                "module": { "basis": l.module.basis, "completion": l.module.completion },
                "beta": l.beta,
                "s": l.level,
                "certainty": if l.certain { "certain" } else { "boundary-uncertain" },
            })
        })
        .collect();
    json!({
        "meta": meta(config),
        "inner_radius": partition.inner_radius,
        "outer_radius": partition.outer_radius,
        "params": partition.params,
        "summary": partition.summary,
        "labels": labels,
    })
}

/// Fig-style plot records: one color class per (level, module).
pub fn plot_data_json(config: &RunConfig, partition: &PartitionResult) -> serde_json::Value {
    let records: Vec<serde_json::Value> = partition
        .labels
        .iter()
        .map(|(xi, l)| {
            let class = if l.level == 0 {
                "s0".to_string()
            } else {
                let basis: Vec<String> = l
                    .module
                    .basis
                    .iter()
                    .map(|v| {
                        let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                        format!("({})", parts.join(","))
                    })
                    .collect();
                format!("s{}:{}", l.level, basis.join(""))
            };
            json!({ "xi": xi, "class": class })
        })
        .collect();
    json!({ "meta": meta(config), "records": records })
}

pub fn normal_form_json(config: &RunConfig, nf: &NormalFormOutput) -> serde_json::Value {
    let diag: Vec<serde_json::Value> = nf
        .diagnostics
        .iter()
        .map(|d| {
            json!({
                "step": d.step,
                "unitary_deviation": d.unitary_deviation,
                "max_interior_row_norm": d.max_interior_row_norm,
            })
        })
        .collect();
    json!({
        "meta": meta(config),
        "steps": nf.steps,
        "box_size": nf.box_set.len(),
        "interior_size": nf.interior.len(),
        "unitarity_deviation": identity_deviation(&matmul(&nf.u, &nf.u.adjoint())),
        "diagnostics": diag,
    })
}

pub fn remainder_decay_csv(config: &RunConfig, nf: &NormalFormOutput) -> String {
    let mut out = format!(
        "# config_hash={} version={}\nstep,xi_norm,row_norm\n",
        config.hash(),
        VERSION
    );
    for d in &nf.diagnostics {
        for (norm, row) in &d.profile {
            let _ = writeln!(out, "{},{:.12e},{:.12e}", d.step, norm, row);
        }
    }
    out
}

pub fn spectrum_csv(
    config: &RunConfig,
    lattice: &Lattice,
    box_set: &BoxSet,
    labeled: &LabeledSpectrum,
    vectors: &CMatrix,
) -> String {
    let mut out = format!(
        "# config_hash={} version={}\nxi,lambda,prediction,residual,s,beta,certainty,h_minus4_norm\n",
        config.hash(),
        VERSION
    );
    for e in &labeled.entries {
        let col: Vec<Complex64> = vectors
            .column(e.eigenvector_index)
            .iter()
            .copied()
            .collect();
        let hnorm = neg_sobolev_norm(lattice, box_set, &col, -4.0);
        let xi_str: Vec<String> = e.xi.iter().map(|x| x.to_string()).collect();
        let beta_str: Vec<String> = e.beta.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(
            out,
            "({}),{:.12e},{:.12e},{:.12e},{},({}),{},{:.6e}",
            xi_str.join(" "),
            e.lambda,
            e.prediction,
            e.residual,
            e.level,
            beta_str.join(" "),
            if e.certain { "certain" } else { "boundary-uncertain" },
            hnorm,
        );
    }
    out
}

/// Seeded randomized quasimode suite (diagonal reference + small Hermitian
/// noise); returns (trials, hypothesis_held, failures).
pub fn quasimode_suite(seed: u64, trials: usize) -> Result<(usize, usize, usize)> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = 30;
    let mut held = 0;
    let mut failures = 0;
    for _ in 0..trials {
        let mut eigs: Vec<f64> = Vec::with_capacity(n);
        let mut base = 0.0;
        while eigs.len() < n {
            let cluster = rng.gen_range(1..4).min(n - eigs.len());
            for _ in 0..cluster {
                eigs.push(base + rng.gen_range(0.0..0.3));
            }
            base += rng.gen_range(2.0..6.0);
        }
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let vecs = CMatrix::identity(n, n);
        let scale = rng.gen_range(0.001..0.05);
        let mut h1 = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let z = Complex64::new(
                    (rng.gen::<f64>() - 0.5) * scale,
                    if i == j {
                        0.0
                    } else {
                        (rng.gen::<f64>() - 0.5) * scale
                    },
                );
                h1[(i, j)] = z;
                h1[(j, i)] = z.conj();
            }
        }
        let lo = rng.gen_range(0..n - 3);
        let mut hi = lo + 1;
        while hi < n && eigs[hi] - eigs[hi - 1] < 1.0 {
            hi += 1;
        }
        let rec = quasimode_match(&eigs, &vecs, &h1, lo..hi, 0.5)?;
        if rec.hypothesis_held {
            held += 1;
            if rec.conclusion_held != Some(true) {
                failures += 1;
            }
        }
    }
    Ok((trials, held, failures))
}

pub struct PipelineOutput {
    pub lattice: Lattice,
    pub partition: PartitionResult,
    pub nf: NormalFormOutput,
    pub h_op: TruncatedOperator,
    pub labeled: LabeledSpectrum,
    pub vectors: CMatrix,
}

/// Execute the full pipeline for a configuration.
pub fn execute(config: &RunConfig) -> Result<PipelineOutput> {
    let lattice = config.build_lattice()?;
    let params = config.build_params()?;
    let (potential, _warnings) = config.build_potential()?;
    let partition = extended_partition(&lattice, &params, config.radius)?;
    let box_set = Arc::new(BoxSet::ball(&lattice, config.radius));
    let nf = normal_form(&lattice, &potential, box_set.clone(), &params, config.steps)?;
    let lap = laplacian_matrix(&lattice, box_set.clone());
    let v_op = weyl_matrix(&lattice, &potential, box_set.clone())?;
    let h_op = TruncatedOperator {
        box_set: box_set.clone(),
        matrix: &lap.matrix + &v_op.matrix,
        provenance: "hamiltonian".into(),
    };
    let labeled = label_eigenvalues(&h_op, &nf, &partition)?;
    let (_vals, vectors) = eigensolve(&h_op)?;
    Ok(PipelineOutput {
        lattice,
        partition,
        nf,
        h_op,
        labeled,
        vectors,
    })
}

pub fn verify_json(config: &RunConfig, out: &PipelineOutput) -> Result<serde_json::Value> {
    let geometry = out.partition.verify_geometry();
    let invariance = verify_block_invariance(&out.nf, &out.partition)?;
    // spectral conservation: eig(H) vs eig(U H U*)
    let conj = matmul(&matmul(&out.nf.u, &out.h_op.matrix), &out.nf.u.adjoint());
    let e1 = crate::linalg::eigvalsh(&out.h_op.matrix)?;
    let e2 = crate::linalg::eigvalsh(&conj)?;
    let conservation: f64 = e1
        .iter()
        .zip(&e2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let unitarity = identity_deviation(&matmul(&out.nf.u, &out.nf.u.adjoint()));
    let (vals, _) = eigensolve(&out.h_op)?;
    let sup_m = out
        .nf
        .n_op
        .matrix
        .diagonal()
        .iter()
        .map(|z| z.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let r_weyl = (config.radius / 2.0).max((3.0 * sup_m).sqrt() + 1.0);
    let weyl = crate::spectra::weyl_count_check(&vals, &out.lattice, r_weyl, sup_m)?;
    let clusters = find_clusters(&vals, 1.0, 1.0)?;
    let cluster_widths_ok = clusters.intervals.iter().all(|(a, b)| b - a <= 2.0);
    let (trials, held, failures) = quasimode_suite(config.seed, 200)?;
    Ok(json!({
        "meta": meta(config),
        "geometry": geometry,
        "block_invariance_max_offblock": invariance,
        "unitarity_deviation": unitarity,
        "spectral_conservation_deviation": conservation,
        "weyl": { "count": weyl.0, "bound": weyl.1, "radius": r_weyl, "ok": (weyl.0 as f64) <= weyl.1 },
        "clusters": {
            "count": clusters.intervals.len(),
            "widths_ok": cluster_widths_ok,
        },
        "quasimode_suite": { "trials": trials, "hypothesis_held": held, "failures": failures },
    }))
}

/// Full run: execute and write all artifacts. Returns the file list.
pub fn run(
    config: &RunConfig,
    out_dir: &Path,
    emit_plot_data: bool,
    verify_only: bool,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let out = execute(config)?;
    let mut files = Vec::new();
    let write = |name: &str, content: String| -> Result<PathBuf> {
        let path = out_dir.join(name);
        std::fs::write(&path, content)?;
        Ok(path)
    };
    if !verify_only {
        files.push(write(
            "partition.json",
            serde_json::to_string_pretty(&partition_json(config, &out.partition))?,
        )?);
        files.push(write(
            "nf.json",
            serde_json::to_string_pretty(&normal_form_json(config, &out.nf))?,
        )?);
        files.push(write("remainder_decay.csv", remainder_decay_csv(config, &out.nf))?);
        files.push(write(
            "spectrum.csv",
            spectrum_csv(config, &out.lattice, &out.h_op.box_set, &out.labeled, &out.vectors),
        )?);
        let params = config.build_params()?;
        let tree = crate::dimred::build_tree(
            &out.lattice,
            &out.nf,
            &out.partition,
            &params,
            config.steps,
            2,
        )?;
        files.push(write(
            "reduction_tree.json",
            serde_json::to_string_pretty(&serde_json::json!({
                "meta": meta(config),
                "tree": tree,
            }))?,
        )?);
        if emit_plot_data {
            files.push(write(
                "plot_data.json",
                serde_json::to_string_pretty(&plot_data_json(config, &out.partition))?,
            )?);
        }
    }
    files.push(write(
        "verify.json",
        serde_json::to_string_pretty(&verify_json(config, &out)?)?,
    )?);
    Ok(files)
}

/// Exit code classification: 2 for configuration errors, 3 for pipeline
/// failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) | Error::InvalidParams(_) | Error::Json(_) => 2,
        _ => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> RunConfig {
        RunConfig::from_json(
            r#"{
            "lattice": {"basis": [[1,0],[0,1]], "kappa": [0.3, 0.2]},
            "potential": {"terms": [
                {"k": [1,0], "re": 1.0}, {"k": [-1,0], "re": 1.0},
                {"k": [0,1], "re": 1.0}, {"k": [0,-1], "re": 1.0}
            ]},
            "radius": 8,
            "steps": 1,
            "seed": 7
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn run_emits_deterministic_artifacts() {
        let cfg = small_config();
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let f1 = run(&cfg, dir1.path(), true, false).unwrap();
        let f2 = run(&cfg, dir2.path(), true, false).unwrap();
        assert_eq!(f1.len(), f2.len());
        assert!(f1.iter().any(|p| p.ends_with("partition.json")));
        assert!(f1.iter().any(|p| p.ends_with("spectrum.csv")));
        assert!(f1.iter().any(|p| p.ends_with("plot_data.json")));
        for (a, b) in f1.iter().zip(&f2) {
            let ca = std::fs::read(a).unwrap();
            let cb = std::fs::read(b).unwrap();
            assert_eq!(ca, cb, "artifact {a:?} differs between runs");
        }
    }

    #[test]
    fn verify_report_is_clean_on_small_run() {
        let cfg = small_config();
        let out = execute(&cfg).unwrap();
        let v = verify_json(&cfg, &out).unwrap();
        assert_eq!(v["geometry"]["overlap_violations"], 0);
        assert_eq!(v["block_invariance_max_offblock"], 0.0);
        assert!(v["unitarity_deviation"].as_f64().unwrap() < 1e-10);
        assert!(v["spectral_conservation_deviation"].as_f64().unwrap() < 1e-10);
        assert_eq!(v["quasimode_suite"]["failures"], 0);
        assert_eq!(v["weyl"]["ok"], true);
    }
}

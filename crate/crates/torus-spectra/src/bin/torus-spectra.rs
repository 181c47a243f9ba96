use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use torus_spectra::config::RunConfig;
use torus_spectra::error::Result;
use torus_spectra::normalform::normal_form;
use torus_spectra::op::BoxSet;
use torus_spectra::partition::extended_partition;
use torus_spectra::pipeline;

#[derive(Parser)]
#[command(name = "torus-spectra", version, about = "Resonance partitions and spectra of flat-torus Schrödinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print metric data and lattice constants as JSON.
    LatticeInfo {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute the resonance partition of a Fourier box.
    Partition {
        #[arg(long)]
        config: PathBuf,
        /// Inner box radius (overrides the configured radius).
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Emit per-point color classes instead of full labels.
        #[arg(long)]
        emit_plot_data: bool,
    },
    /// Run the iterative normal form and emit remainder diagnostics.
    NormalForm {
        #[arg(long)]
        config: PathBuf,
        /// Number of conjugation steps (overrides the configured value).
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigensolve and label the spectrum.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the verification report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline: partition, normal form, spectrum, verification.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        emit_plot_data: bool,
        #[arg(long)]
        verify_only: bool,
    },
}

fn load_config(
    path: &PathBuf,
    radius: Option<f64>,
    steps: Option<usize>,
    seed: Option<u64>,
) -> Result<RunConfig> {
    let mut cfg = RunConfig::from_file(path)?;
    if let Some(r) = radius {
        cfg.radius = r;
    }
    if let Some(s) = steps {
        cfg.steps = s;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::LatticeInfo { config } => {
            let cfg = load_config(&config, None, None, None)?;
            let lattice = cfg.build_lattice()?;
            println!(
                "{}",
                serde_json::to_string_pretty(&pipeline::lattice_info_json(&lattice))?
            );
        }
        Command::Partition {
            config,
            radius,
            out,
            emit_plot_data,
        } => {
            let cfg = load_config(&config, radius, None, None)?;
            let lattice = cfg.build_lattice()?;
            let params = cfg.build_params()?;
            let partition = extended_partition(&lattice, &params, cfg.radius)?;
            let value = if emit_plot_data {
                pipeline::plot_data_json(&cfg, &partition)
            } else {
                pipeline::partition_json(&cfg, &partition)
            };
            let text = serde_json::to_string_pretty(&value)?;
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
        }
        Command::NormalForm { config, steps, out } => {
            let cfg = load_config(&config, None, steps, None)?;
            let lattice = cfg.build_lattice()?;
            let params = cfg.build_params()?;
            let (potential, warnings) = cfg.build_potential()?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            let box_set = Arc::new(BoxSet::ball(&lattice, cfg.radius));
            let nf = normal_form(&lattice, &potential, box_set, &params, cfg.steps)?;
            let dir = out_dir(&cfg, out);
            std::fs::create_dir_all(&dir)?;
            std::fs::write(
                dir.join("nf.json"),
                serde_json::to_string_pretty(&pipeline::normal_form_json(&cfg, &nf))?,
            )?;
            std::fs::write(
                dir.join("remainder_decay.csv"),
                pipeline::remainder_decay_csv(&cfg, &nf),
            )?;
            eprintln!("wrote nf.json, remainder_decay.csv to {}", dir.display());
        }
        Command::Spectrum { config, out } => {
            let cfg = load_config(&config, None, None, None)?;
            let result = pipeline::execute(&cfg)?;
            let csv = pipeline::spectrum_csv(
                &cfg,
                &result.lattice,
                &result.h_op.box_set,
                &result.labeled,
                &result.vectors,
            );
            match out {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Verify { config, seed, out } => {
            let cfg = load_config(&config, None, None, seed)?;
            let result = pipeline::execute(&cfg)?;
            let report = pipeline::verify_json(&cfg, &result)?;
            let text = serde_json::to_string_pretty(&report)?;
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
        }
        Command::Run {
            config,
            radius,
            steps,
            seed,
            out,
            emit_plot_data,
            verify_only,
        } => {
            let cfg = load_config(&config, radius, steps, seed)?;
            let dir = out_dir(&cfg, out);
            let files = pipeline::run(&cfg, &dir, emit_plot_data, verify_only)?;
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    pipeline::init_thread_cap();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = pipeline::exit_code(&e);
            eprintln!("{}", serde_json::json!({ "error": e.to_string(), "exit_code": code }));
            ExitCode::from(code as u8)
        }
    }
}

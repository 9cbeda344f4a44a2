use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gqml_core::dataset::generate_with;
use gqml_core::symmetry::{build_pool, check_equivariance, PoolOp, SymmetryRep, CERTIFY_QUBITS};
use gqml_workbench::config::{Experiment, ExperimentConfig, RoundingMode};
use gqml_workbench::experiments::{run, sampler, RunOutput};
use gqml_workbench::io::{write_dataset, write_model_json};
use gqml_workbench::records::{emit_csv, format_summary, read_csv, summarize};
use gqml_workbench::{Result, WorkbenchError};

#[derive(Debug, Parser)]
#[command(
    name = "gqml",
    version,
    about = "Barcode-pair similarity experiments with equivariant quantum models and Siamese baselines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a labelled dataset of barcode pairs and write it as JSON.
    GenData {
        /// Qubits per barcode; barcodes have 2^n pixels.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = gqml_core::dataset::DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long)]
        per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Round with the sign of the Gaussian draw instead of randomly.
        #[arg(long)]
        sign_rounding: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment. Records go to CSV; the oracle check writes a JSON report.
    Run {
        #[arg(long)]
        experiment: Experiment,
        /// JSON configuration; omitted fields take the experiment's preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print mean ± std per model and size from a records CSV.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Certify the operator pool and report commutator norms.
    ValidatePool {
        #[arg(long)]
        n: usize,
        /// Pool size to certify.
        #[arg(long, default_value_t = PoolOp::DEFAULT_K)]
        k: usize,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { n, epsilon, per_class, seed, sign_rounding, out } => {
            if per_class == 0 {
                return Err(WorkbenchError::Config("--per-class must be positive".into()));
            }
            let mut cfg = ExperimentConfig::preset(Experiment::Fig3Compare);
            cfg.epsilon = epsilon;
            cfg.rounding = if sign_rounding { RoundingMode::Sign } else { RoundingMode::Randomized };
            let ds = generate_with(&sampler(&cfg, n)?, per_class, seed, &[])?;
            write_dataset(&out, &ds)?;
            println!("wrote {} pairs to {}", ds.samples.len(), out.display());
        }
        Command::Run { experiment, config, out } => {
            let cfg = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => ExperimentConfig::preset(experiment),
            };
            if cfg.experiment != experiment {
                return Err(WorkbenchError::Config(format!(
                    "--experiment {} does not match the configuration's {}",
                    experiment.id(),
                    cfg.experiment.id()
                )));
            }
            match run(&cfg)? {
                RunOutput::Records(records) => {
                    emit_csv(&records, &out)?;
                    print!("{}", format_summary(&summarize(&records)));
                }
                RunOutput::Oracle(report) => {
                    write_model_json(&out, &report)?;
                    for s in &report.sizes {
                        println!(
                            "n={:<2} mean F: correlated {:.4} uncorrelated {:.4} (z={:.1}); threshold acc {:.3}; identity residual {:.1e}",
                            s.n, s.correlated.mean, s.uncorrelated.mean, s.separation_z, s.threshold_accuracy, s.identity_residual_max
                        );
                    }
                }
            }
            println!("wrote {}", out.display());
        }
        Command::Summarize { input } => {
            let records = read_csv(&input)?;
            print!("{}", format_summary(&summarize(&records)));
        }
        Command::ValidatePool { n, k } => {
            if n == 0 {
                return Err(WorkbenchError::Config("--n must be positive".into()));
            }
            let pool = build_pool(n, k)?;
            println!("certified at {CERTIFY_QUBITS} qubits per register; instantiated at n={n}");
            println!("{:<12} {:<6} {:>9} {:>10} {:>12}", "operator", "symbol", "hermitian", "generator", "commutator");
            for e in pool.entries() {
                println!(
                    "{:<12} {:<6} {:>9} {:>10} {:>12.1e}",
                    e.name(),
                    e.op.symbol(),
                    e.hermitian,
                    e.generator,
                    e.commutator_norm
                );
            }
            if n <= 3 {
                let worst = pool
                    .entries()
                    .iter()
                    .map(|e| check_equivariance(&e.op.instantiate(n), &SymmetryRep::both()))
                    .collect::<gqml_core::Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0f64, f64::max);
                println!("largest commutator norm at n={n}: {worst:.1e}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

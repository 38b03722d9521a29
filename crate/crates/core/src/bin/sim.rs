use std::path::PathBuf;
use std::process::ExitCode;

use ambsc::harness::{self, Emit, ExperimentSpec, Outputs};
use ambsc::{DofConvention, GammaKnowledge, SnrMode, ThresholdMode};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "sim", about = "Ambient backscatter Monte Carlo BER simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write a CSV table.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key = value config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "snr-db", value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    snr_db: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    w: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
    /// ber_vs_snr | ber_vs_w | pdf_curves
    #[arg(long)]
    emit: Option<String>,
    /// closed-form | exact-root
    #[arg(long)]
    threshold: Option<String>,
    /// paper | complex
    #[arg(long)]
    dof: Option<String>,
    /// direct-gamma | from-Ps
    #[arg(long = "snr-mode")]
    snr_mode: Option<String>,
    /// instantaneous | channel | ensemble
    #[arg(long = "gamma-knowledge")]
    gamma_knowledge: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Print the effective configuration and exit.
    #[arg(long = "print-config")]
    print_config: bool,
}

fn effective_spec(args: &RunArgs) -> ambsc::Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => harness::load_config(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(v) = &args.snr_db {
        spec.snr_db_list = v.clone();
    }
    if let Some(v) = &args.w {
        spec.w_list = v.clone();
    }
    if let Some(v) = args.trials {
        spec.trials_per_point = v;
        spec.base.trials = v;
    }
    if let Some(v) = args.seed {
        spec.base.seed = v;
    }
    if let Some(v) = &args.out {
        spec.output_path = v.clone();
    }
    if let Some(v) = &args.emit {
        spec.emit = v.parse::<Emit>()?;
    }
    if let Some(v) = &args.threshold {
        spec.base.threshold_mode = v.parse::<ThresholdMode>()?;
    }
    if let Some(v) = &args.dof {
        spec.base.dof_convention = v.parse::<DofConvention>()?;
    }
    if let Some(v) = &args.snr_mode {
        spec.base.snr_mode = v.parse::<SnrMode>()?;
    }
    if let Some(v) = &args.gamma_knowledge {
        spec.base.gamma_knowledge = v.parse::<GammaKnowledge>()?;
    }
    if let Some(v) = args.workers {
        spec.workers = v;
    }
    Ok(spec)
}

fn run(args: &RunArgs) -> ambsc::Result<()> {
    let spec = effective_spec(args)?;
    if args.print_config {
        print!("{}", harness::print_config(&spec));
        return Ok(());
    }
    match harness::write_outputs(&spec)? {
        Outputs::Ber(results) => {
            for r in &results {
                eprintln!(
                    "snr_db={} W={} ber_sim={:.3e} ci95={:.1e} ber_theory_exact={:.3e} ({} ms)",
                    r.snr_db, r.w, r.ber_sim, r.ci95_halfwidth, r.ber_theory_exact, r.wall_ms
                );
            }
        }
        Outputs::Pdf(rows) => eprintln!("{} density rows", rows.len()),
    }
    eprintln!("wrote {}", spec.output_path);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

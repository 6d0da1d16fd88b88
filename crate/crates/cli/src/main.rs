use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qpca_cli::{analyze_command, run_command, RunMode, RunSpec};

#[derive(Parser)]
#[command(name = "qpca", version, about = "Statevector quantum PCA with eigenvalue thresholding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Sampled,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline on a symmetric matrix (CSV or JSON).
    Run {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        eig_bits: usize,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long, default_value_t = 8192)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON result path; the plot CSV goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate gate counts of both pipelines.
    Analyze {
        #[arg(long)]
        n_min: u64,
        #[arg(long)]
        n_max: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&msg);
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Run {
            matrix,
            tau,
            eig_bits,
            mode,
            shots,
            seed,
            out,
        } => {
            let spec = RunSpec {
                matrix_path: matrix,
                tau,
                eig_bits,
                mode: match mode {
                    Mode::Exact => RunMode::Exact,
                    Mode::Sampled => RunMode::Sampled,
                },
                shots,
                seed,
                out_path: out,
            };
            run_command(&spec).map(|r| {
                println!(
                    "success_probability={} kept={} fidelity={}",
                    r.success_probability,
                    r.kept_eigenvalues.len(),
                    r.fidelity_vs_classical
                );
                for w in &r.warnings {
                    eprintln!("warning: {w}");
                }
            })
        }
        Command::Analyze { n_min, n_max, out } => analyze_command(n_min, n_max, &out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

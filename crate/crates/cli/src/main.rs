use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kmslab_cli::commands::{self, EXIT_INPUT, EXIT_OK};
use kmslab_cli::words::parse_words;
use kmslab_cli::{report, BetaChoice, EvaluateOptions, InstanceFile, Outcome, SolveOptions, Target, VerifyOptions};

#[derive(Parser)]
#[command(name = "kms-lab", version, about = "KMS states of quasi-free dynamics on Toeplitz-Pimsner algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find β_c with r(Z(β_c)) = 1.
    CriticalBeta {
        instance: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Solve for a subinvariant (toeplitz) or invariant (pimsner) trace.
    Solve {
        instance: PathBuf,
        #[arg(long)]
        beta: Option<BetaChoice>,
        #[arg(long, value_enum, default_value_t = Target::Toeplitz)]
        target: Target,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Evaluate the KMS state on the words of a word file.
    Evaluate {
        instance: PathBuf,
        #[arg(long)]
        words: PathBuf,
        #[arg(long)]
        beta: Option<BetaChoice>,
        /// Comma separated trace coefficients.
        #[arg(long, value_delimiter = ',')]
        trace: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Run the randomized verification suites.
    Verify {
        instance: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        beta: Option<BetaChoice>,
        #[arg(long, default_value_t = 3)]
        max_degree: usize,
        #[arg(long, default_value_t = 6)]
        fock_level: usize,
        #[arg(long, default_value_t = 4000)]
        cap_dimension: usize,
        #[arg(long, default_value_t = 50)]
        pairs: usize,
        /// Comma separated trace coefficients, replacing the solver output.
        #[arg(long, value_delimiter = ',')]
        trace: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Print a built-in instance file.
    Catalog {
        name: Option<String>,
        #[arg(long)]
        list: bool,
    },
}

fn read(path: &Path) -> Result<String, Outcome> {
    std::fs::read_to_string(path).map_err(|e| Outcome {
        report: None,
        summary: format!("{}: {e}", path.display()),
        code: EXIT_INPUT,
    })
}

fn load(path: &Path) -> Result<InstanceFile, Outcome> {
    InstanceFile::parse(&read(path)?).map_err(|e| Outcome {
        report: None,
        summary: format!("{}: {e}", path.display()),
        code: EXIT_INPUT,
    })
}

fn run(cli: Cli) -> Result<Outcome, Outcome> {
    Ok(match cli.command {
        Command::CriticalBeta { instance, tol } => commands::critical_beta(&load(&instance)?, tol),
        Command::Solve { instance, beta, target, tol } => {
            commands::solve(&load(&instance)?, &SolveOptions { beta, target, tol })
        }
        Command::Evaluate { instance, words, beta, trace, tol } => {
            let file = load(&instance)?;
            let words = parse_words(&read(&words)?).map_err(|e| Outcome {
                report: None,
                summary: e.to_string(),
                code: EXIT_INPUT,
            })?;
            commands::evaluate(&file, &words, &EvaluateOptions { beta, trace, tol })
        }
        Command::Verify { instance, seed, beta, max_degree, fock_level, cap_dimension, pairs, trace, tol } => {
            let opts = VerifyOptions { beta, seed, max_degree, fock_level, cap_dimension, pairs, trace, tol };
            commands::verify(&load(&instance)?, &opts)
        }
        Command::Catalog { name, list } => match name.filter(|_| !list) {
            None => {
                let names = commands::catalog_names();
                Outcome { report: Some(serde_json::json!(names)), summary: names.join(" "), code: EXIT_OK }
            }
            Some(name) => match commands::catalog_file(&name) {
                Ok(f) => Outcome {
                    report: Some(serde_json::to_value(&f).expect("instance files serialize")),
                    summary: format!("catalog instance {name}"),
                    code: EXIT_OK,
                },
                Err(e) => Outcome { report: None, summary: e.to_string(), code: EXIT_INPUT },
            },
        },
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    let out = run(cli).unwrap_or_else(|e| e);
    if let Some(r) = out.report {
        print!("{}", report::render(r));
    }
    eprintln!("{}", out.summary);
    ExitCode::from(out.code as u8)
}

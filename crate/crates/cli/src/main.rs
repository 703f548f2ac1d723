use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use finsler_cli::{analyze, example_spec, ReportFormat};
use finsler_core::CATALOG_NAMES;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Parser)]
#[command(name = "finsler", about = "Left-invariant (alpha,beta)-metric analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a problem spec (JSON file) and print a report.
    Analyze {
        /// Path to the problem spec.
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Override the seed in the spec.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print a ready-to-run example spec for a catalog algebra.
    Example { name: String },
    /// List the catalog algebras with bundled example specs.
    ListExamples,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze { file, format, seed } => {
            let text = match std::fs::read_to_string(&file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", file.display());
                    return ExitCode::from(2);
                }
            };
            let fmt = match format {
                Format::Text => ReportFormat::Text,
                Format::Machine => ReportFormat::Machine,
            };
            let (bytes, code) = analyze(&text, fmt, seed);
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(&bytes).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::from(code as u8)
        }
        Command::Example { name } => match example_spec(&name) {
            Some(spec) => {
                println!("{}", serde_json::to_string_pretty(&spec).unwrap());
                ExitCode::SUCCESS
            }
            None => {
                eprintln!(
                    "error: no example named `{name}` (try: {})",
                    CATALOG_NAMES.join(", ")
                );
                ExitCode::from(2)
            }
        },
        Command::ListExamples => {
            for name in CATALOG_NAMES {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use bell_core::data::{load_embedded, EMBEDDED_NAMES};
use bellstat::report::{render_json, render_text};
use bellstat::{analyze, parse_dataset, reproduce, Error, Format, Method, Selection};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bellstat", version, about = "Statistical analysis of 2x2x2 Bell-test count data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// List the embedded experiments
    List,
    /// Analyse one dataset
    Analyze {
        /// Embedded dataset name
        #[arg(required_unless_present = "dataset_file", conflicts_with = "dataset_file")]
        dataset: Option<String>,
        /// Read counts from a JSON or CSV file instead
        #[arg(long)]
        dataset_file: Option<PathBuf>,
        /// Methods to run (comma separated): gls, mle, bellgame, all
        #[arg(long, value_delimiter = ',', default_value = "all")]
        method: Vec<Method>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
    /// Rerun every embedded experiment and compare with the published values
    Reproduce {
        #[arg(long, value_enum, default_value = "text")]
        format: OutputFormat,
    },
}

fn load(dataset: Option<String>, file: Option<PathBuf>) -> Result<(bell_core::BellDataset, String), Error> {
    if let Some(path) = file {
        let shown = path.display().to_string();
        let format = Format::from_path(&path)
            .ok_or_else(|| Error::Usage(format!("{shown}: cannot tell the format; use a .json or .csv extension")))?;
        let bytes = std::fs::read(&path).map_err(|source| Error::Io {
            path: shown.clone(),
            source,
        })?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
        return Ok((parse_dataset(&bytes, format, stem)?, shown));
    }
    let name = dataset.expect("clap requires a dataset or --dataset-file");
    Ok((load_embedded(&name)?, "embedded".to_string()))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::List => {
            for name in EMBEDDED_NAMES {
                let ds = load_embedded(name)?;
                println!("{name:<8} {:>12} trials", ds.total_trials());
            }
        }
        Command::Analyze {
            dataset,
            dataset_file,
            method,
            format,
        } => {
            let (ds, source) = load(dataset, dataset_file)?;
            let report = analyze(&ds, &source, Selection::from_methods(&method))?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            match format {
                OutputFormat::Text => print!("{}", render_text(&report)),
                OutputFormat::Json => print!("{}", render_json(&report)),
            }
        }
        Command::Reproduce { format } => {
            let rows = reproduce::reproduce()?;
            match format {
                OutputFormat::Text => print!("{}", reproduce::render_text(&rows)),
                OutputFormat::Json => print!("{}", reproduce::render_json(&rows)),
            }
            let failed: Vec<_> = rows.iter().filter(|r| !r.pass).collect();
            if !failed.is_empty() {
                for r in &failed {
                    eprintln!("mismatch: {} {} = {}, published {}", r.dataset, r.quantity, r.computed, r.check.describe());
                }
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use potlab_cli::{CliError, Report, Scenario};

#[derive(Parser)]
#[command(name = "potlab", version, about = "Removable singularities of bounded p-harmonic functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario, writing its CSV report and JSON verdict.
    Run {
        file: PathBuf,
        /// Directory for the outputs (default: next to the scenario).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario without running it.
    Validate { file: PathBuf },
    /// Run a bundled worked example; prints the verdict and report.
    Demo {
        /// One of: martio-reflection, half-line-removable, disc-capacity,
        /// parabolicity-table, unweighted-dichotomy.
        name: String,
        /// Also write the outputs to this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("POTLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("POTLAB_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot size the thread pool: {e}")))
}

fn write(s: &Scenario, report: &Report, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), CliError> {
    let (csv, json) = potlab_cli::output_paths(s, dir, stem);
    potlab_cli::write_report(report, &csv, &json).map_err(|e| CliError::Input(format!("cannot write outputs: {e}")))?;
    Ok((csv, json))
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run { file, out } => {
            let s = potlab_cli::load(&file).map_err(|d| CliError::Input(potlab_cli::join(&d)))?;
            let report = potlab_cli::execute(&s)?;
            let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
            let dir = out.unwrap_or_else(|| s.base.clone());
            let (csv, json) = write(&s, &report, &dir, stem)?;
            println!("{:#}", report.json);
            eprintln!("wrote {} and {}", csv.display(), json.display());
        }
        Command::Validate { file } => {
            let diags = potlab_cli::validate_file(&file);
            if diags.is_empty() {
                println!("{}: ok", file.display());
            } else {
                for d in &diags {
                    println!("{}: {d}", file.display());
                }
                return Err(CliError::Input(format!("{} problem(s) found", diags.len())));
            }
        }
        Command::Demo { name, out } => {
            let text = potlab_cli::demo(&name).ok_or_else(|| {
                let names: Vec<&str> = potlab_cli::DEMOS.iter().map(|d| d.0).collect();
                CliError::Input(format!("unknown demo {name:?}; available: {}", names.join(", ")))
            })?;
            let s = potlab_cli::scenario::parse(text, Path::new(".")).map_err(|d| CliError::Input(potlab_cli::join(&d)))?;
            let report = potlab_cli::execute(&s)?;
            println!("{:#}", report.json);
            println!();
            print!("{}", report.csv.to_csv());
            if let Some(dir) = out {
                let (csv, json) = write(&s, &report, &dir, &name)?;
                eprintln!("wrote {} and {}", csv.display(), json.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("potlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

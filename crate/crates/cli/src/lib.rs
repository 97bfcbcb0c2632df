//! Scenario-file driver for `potlab-core`: every library operation is
//! reachable from a JSON scenario, whose results are written as a CSV
//! report and a JSON verdict.

use std::fs;
use std::path::{Path, PathBuf};

pub mod output;
pub mod run;
pub mod scenario;

pub use output::{CliError, Diagnostic, Report, Table};
pub use scenario::{Scenario, KINDS};

/// Bundled worked examples, by name.
pub const DEMOS: [(&str, &str); 5] = [
    ("martio-reflection", include_str!("../demos/martio-reflection.json")),
    ("half-line-removable", include_str!("../demos/half-line-removable.json")),
    ("disc-capacity", include_str!("../demos/disc-capacity.json")),
    ("parabolicity-table", include_str!("../demos/parabolicity-table.json")),
    ("unweighted-dichotomy", include_str!("../demos/unweighted-dichotomy.json")),
];

pub fn demo(name: &str) -> Option<&'static str> {
    DEMOS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Reads and parses a scenario file.
pub fn load(path: &Path) -> Result<Scenario, Vec<Diagnostic>> {
    let text = fs::read_to_string(path)
        .map_err(|e| vec![Diagnostic::new("", format!("cannot read scenario {}: {e}", path.display()))])?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    scenario::parse(&text, &base)
}

/// All diagnostics for a scenario file; empty when it is valid.
pub fn validate_file(path: &Path) -> Vec<Diagnostic> {
    match load(path) {
        Ok(s) => run::check(&s),
        Err(d) => d,
    }
}

pub fn validate_text(text: &str, base: &Path) -> Vec<Diagnostic> {
    match scenario::parse(text, base) {
        Ok(s) => run::check(&s),
        Err(d) => d,
    }
}

pub fn execute(s: &Scenario) -> Result<Report, CliError> {
    run::execute(s)
}

/// Parses and runs scenario text; relative paths resolve against `base`.
pub fn run_text(text: &str, base: &Path) -> Result<Report, CliError> {
    let s = scenario::parse(text, base).map_err(|d| CliError::Input(join(&d)))?;
    execute(&s)
}

pub fn join(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

/// Where the CSV report and JSON verdict of a run go: the paths named in
/// the scenario, else `<stem>.csv` and `<stem>.json` in `dir`.
pub fn output_paths(s: &Scenario, dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    let pick = |named: &Option<PathBuf>, ext: &str| match named {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => s.base.join(p),
        None => dir.join(format!("{stem}.{ext}")),
    };
    (pick(&s.output.csv, "csv"), pick(&s.output.json, "json"))
}

pub fn write_report(report: &Report, csv: &Path, json: &Path) -> std::io::Result<()> {
    for p in [csv, json] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(csv, report.csv.to_csv())?;
    fs::write(json, format!("{:#}\n", report.json))
}

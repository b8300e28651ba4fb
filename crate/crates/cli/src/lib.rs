// SPDX-License-Identifier: Apache-2.0

//! The `cutmap` command line: argument definitions, subcommands, and the
//! exit-code contract (0 ok, 2 usage or missing input, 3 infeasible mapping,
//! 4 degenerate data, 1 anything else).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use cutmap::aiger::parse_aiger;
use cutmap::library::{parse_genlib, Library};
use cutmap::{Aig, MapError, ModelError};
use serde_json::{json, Value};
use thiserror::Error;

pub mod cli;
mod learn;
mod mapping;

pub use cli::{Cli, Command};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Degenerate(_) => 4,
        }
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::Prediction(_) => CliError::Failure(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Format(_)
            | ModelError::Version { .. }
            | ModelError::ConfigMismatch(_)
            | ModelError::InvalidConfig(_)
            | ModelError::BadRecord(_) => CliError::Usage(e.to_string()),
            ModelError::EmptyTrainingSet => CliError::Degenerate(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => mapping::gen(a),
        Command::Map(a) => mapping::map(&cli.command, a),
        Command::Time(a) => mapping::time(&cli.command, a),
        Command::Cuts(a) => mapping::cuts(a),
        Command::Shuffle(a) => mapping::shuffle(&cli.command, a),
        Command::ExtractLabels(a) => learn::extract(a),
        Command::Pretrain(a) => learn::pretrain(&cli.command, a),
        Command::Finetune(a) => learn::finetune(&cli.command, a),
        Command::Eval(a) => learn::eval(&cli.command, a),
    }
}

/// Tool version and the full invocation, echoed at the top of every report.
pub(crate) fn header(cmd: &Command) -> Value {
    json!({ "tool": "cutmap", "version": VERSION, "config": cmd })
}

/// The header as `#`-prefixed lines for CSV and text reports.
pub(crate) fn comment_header(cmd: &Command) -> String {
    format!("# cutmap {VERSION}\n# config {}\n", json!(cmd))
}

pub(crate) fn json_report(cmd: &Command, result: Value) -> String {
    let mut v = header(cmd);
    v["result"] = result;
    let mut s = serde_json::to_string_pretty(&v).expect("reports serialize");
    s.push('\n');
    s
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read_input(path)?).map_err(|_| CliError::Usage(format!("{} is not UTF-8 text", path.display())))
}

/// Writes to `path`, or stdout when `None`.
pub(crate) fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::Failure(format!("cannot create {}: {e}", dir.display())))?;
            }
            fs::write(p, text).map_err(|e| CliError::Failure(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::Failure(e.to_string()))
        }
    }
}

pub(crate) fn load_library(path: Option<&Path>) -> Result<Library> {
    match path {
        None => Ok(Library::bundled()),
        Some(p) => {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            parse_genlib(&read_text(p)?).map(|l| l.with_name(name)).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

/// Parses an AIGER file; the circuit is named after the file stem.
pub(crate) fn load_aig(path: &Path) -> Result<Aig> {
    let g = parse_aiger(&read_input(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(g.with_name(name))
}

fn is_aiger(p: &Path) -> bool {
    matches!(p.extension().and_then(|e| e.to_str()), Some("aag" | "aig"))
}

/// All AIGER files of a directory, sorted by file name.
pub(crate) fn load_circuit_dir(dir: &Path) -> Result<Vec<Aig>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Usage(format!("cannot read directory {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| is_aiger(p)).collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no .aag or .aig files in {}", dir.display())));
    }
    paths.iter().map(|p| load_aig(p)).collect()
}

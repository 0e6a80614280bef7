//! Manifest-driven front end: problem definitions, the builtin corpus, and
//! the per-command runs that produce a [`Report`].

mod corpus;
mod lagrangian;
mod manifest;
mod render;
mod report;

pub use corpus::{corpus_get, corpus_list, corpus_source};
pub use lagrangian::{reduce, LagrangianSpec, ReducedSystem};
pub use manifest::{
    ChartSpec, FieldSpec, FrameSpec, LagrangianComparison, Manifest, ManifestOptions, Metadata, Prepared,
    LAGRANGIAN_SAMPLES, LAGRANGIAN_TOLERANCE,
};
pub use render::render_text;
pub use report::{run, Gates, Outcome, Report, StraightenSection, Timings, REPORT_SCHEMA};

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::expr::ParseError;
use crate::geometry::GeometryError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONDITION_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("invalid manifest: {0}")]
    Invalid(String),
    #[error("{location} at {source}")]
    Expression { location: String, source: ParseError },
    #[error("no corpus instance named {0:?}")]
    CorpusNotFound(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

fn geometry_exit(e: &GeometryError) -> i32 {
    match e {
        GeometryError::InvalidChart(_)
        | GeometryError::ChartMismatch
        | GeometryError::DimensionMismatch { .. }
        | GeometryError::Parse(_) => EXIT_INPUT,
        _ => EXIT_NUMERIC,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Geometry(g) | CliError::Analysis(AnalysisError::Geometry(g)) => geometry_exit(g),
            CliError::Analysis(AnalysisError::InvalidProblem(_)) => EXIT_INPUT,
            CliError::Analysis(_) => EXIT_NUMERIC,
            _ => EXIT_INPUT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Check,
    Classify,
    Connection,
    Quadratic,
    Straighten,
    Report,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Check,
        Command::Classify,
        Command::Connection,
        Command::Quadratic,
        Command::Straighten,
        Command::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Classify => "classify",
            Command::Connection => "connection",
            Command::Quadratic => "quadratic",
            Command::Straighten => "straighten",
            Command::Report => "report",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command {s:?}"))
    }
}

/// Reads a manifest file.
pub fn load_manifest(path: &std::path::Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Manifest::from_toml(&text)
}

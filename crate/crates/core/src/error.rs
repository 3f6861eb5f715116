use std::path::PathBuf;

use thiserror::Error;

/// Every failure the engine can report.
///
/// Row numbers are 1-based data rows (the header is row 0) so they line up
/// with what a spreadsheet shows.
#[derive(Debug, Error)]
pub enum Error {
    // cohort data
    #[error("column `{0}` declared in the schema is missing from the CSV header")]
    MissingColumn(String),
    #[error("unknown level `{value}` for `{column}` at row {row}")]
    UnknownLevel {
        row: usize,
        column: String,
        value: String,
    },
    #[error("malformed number `{value}` for `{column}` at row {row}")]
    MalformedNumber {
        row: usize,
        column: String,
        value: String,
    },
    #[error("variable `{0}` is not continuous")]
    NotContinuous(String),
    #[error("variable `{0}` is not categorical")]
    NotCategorical(String),
    #[error("discretization edges must be non-empty and strictly increasing")]
    UnsortedEdges,
    #[error("fraction {0} is outside (0, 1]")]
    BadFraction(f64),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("table is not rectangular or a cell does not match its variable: {0}")]
    BadCell(String),

    // graphs
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("graph contains a directed cycle")]
    CycleDetected,
    #[error("graphs are defined over different node sets")]
    NodeSetMismatch,
    #[error("invalid graph: {0}")]
    BadGraph(String),

    // statistics
    #[error("too few complete rows: need {needed}, have {have}")]
    TooFewRows { needed: usize, have: usize },
    #[error("correlation matrix of the conditioning set is singular")]
    SingularCorrelation,
    #[error("every stratum of the contingency table is degenerate")]
    AllStrataDegenerate,
    #[error("design matrix is singular or residual variance is zero")]
    SingularDesign,

    // discovery / ensemble
    #[error("bad parameter: {0}")]
    BadConfig(String),
    #[error("no graphs to merge")]
    EmptyInput,
    #[error("directed edges form a cycle that cannot be oriented away")]
    UnorientableCycle,

    // effect estimation
    #[error("no adjustment set satisfies the backdoor criterion for `{treatment}` -> `{outcome}`")]
    NoValidSet { treatment: String, outcome: String },
    #[error("no stratum contains both contrasted treatment arms")]
    NoUsableStrata,
    #[error("unknown level `{level}` for `{variable}`")]
    UnknownTreatmentLevel { variable: String, level: String },

    // analytics
    #[error("need at least two non-empty groups and more rows than groups")]
    DegenerateGroups,
    #[error("label `{0}` is not binary")]
    NonBinaryLabel(String),

    // pipeline
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name used in error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MissingColumn(_) => "MissingColumn",
            Error::UnknownLevel { .. } => "UnknownLevel",
            Error::MalformedNumber { .. } => "MalformedNumber",
            Error::NotContinuous(_) => "NotContinuous",
            Error::NotCategorical(_) => "NotCategorical",
            Error::UnsortedEdges => "UnsortedEdges",
            Error::BadFraction(_) => "BadFraction",
            Error::UnknownVariable(_) => "UnknownVariable",
            Error::Schema(_) => "SchemaError",
            Error::BadCell(_) => "BadCell",
            Error::UnknownNode(_) => "UnknownNode",
            Error::CycleDetected => "CycleDetected",
            Error::NodeSetMismatch => "NodeSetMismatch",
            Error::BadGraph(_) => "BadGraph",
            Error::TooFewRows { .. } => "TooFewRows",
            Error::SingularCorrelation => "SingularCorrelation",
            Error::AllStrataDegenerate => "AllStrataDegenerate",
            Error::SingularDesign => "SingularDesign",
            Error::BadConfig(_) => "BadConfig",
            Error::EmptyInput => "EmptyInput",
            Error::UnorientableCycle => "UnorientableCycle",
            Error::NoValidSet { .. } => "NoValidSet",
            Error::NoUsableStrata => "NoUsableStrata",
            Error::UnknownTreatmentLevel { .. } => "UnknownLevel",
            Error::DegenerateGroups => "DegenerateGroups",
            Error::NonBinaryLabel(_) => "NonBinaryLabel",
            Error::Config(_) => "ConfigError",
            Error::Io { .. } => "IoError",
            Error::Csv(_) => "CsvError",
            Error::Json(_) => "JsonError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

/// Pipeline stage an error belongs to. Drives the CLI exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Data,
    Solver,
    Localizer,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Data => 3,
            Stage::Solver => 4,
            Stage::Localizer => 5,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Data => "data",
            Stage::Solver => "solver",
            Stage::Localizer => "localizer",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column(s): {0}")]
    MissingColumn(String),

    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column {column}: RSS value {value} outside declared range [{min}, {max}]")]
    OutOfRange {
        row: usize,
        column: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("need at least 2 distinct floor labels, found {0}")]
    TooFewFloors(usize),

    #[error("floor {0:?} has fewer than 2 samples and cannot be stratified")]
    UnstratifiableFloor(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("selection vector selects no access points")]
    EmptySelection,

    #[error("selection entry {index} is {value}, expected 0 or 1")]
    NonBinary { index: usize, value: u8 },

    #[error("problem size {n} exceeds exhaustive enumeration cap {cap}")]
    ExhaustiveCap { n: usize, cap: usize },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("localizer: {0}")]
    Localizer(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn stage(&self) -> Stage {
        match self {
            Error::Config(_) => Stage::Config,
            Error::ExhaustiveCap { .. } | Error::Solver(_) => Stage::Solver,
            Error::Localizer(_) => Stage::Localizer,
            _ => Stage::Data,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.stage().exit_code()
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

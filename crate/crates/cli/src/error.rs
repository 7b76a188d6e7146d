use std::io;
use std::path::PathBuf;

/// Every failure carries a stable code (`E_*`) and, where it applies, the
/// file and line or row it refers to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: error[E_IO]: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: error[E_SYNTAX]: {message}", path.display())]
    Syntax {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: error[E_MISSING_SECTION]: missing section: {section}", path.display())]
    MissingSection { path: PathBuf, section: String },
    #[error("{}:{}: error[E_INVALID]: {message}", path.display(), line.map_or_else(|| "-".to_string(), |l| l.to_string()))]
    Invalid {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    #[error("{}:1: error[E_HEADER]: expected header `{expected}`, found `{found}`", path.display())]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{}:{row}: error[E_ROW]: {message}", path.display())]
    Row {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("{}:{row}: error[E_UNKNOWN_SOURCE]: unknown source id `{id}`", path.display())]
    UnknownSource {
        path: PathBuf,
        row: usize,
        id: String,
    },
    #[error("{}:{row}: error[E_ORDER]: {message}", path.display())]
    Order {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("{}: error[E_EMPTY]: no data rows", path.display())]
    Empty { path: PathBuf },
    #[error("{}: error[E_FIT_RANK]: {message}", path.display())]
    Fit { path: PathBuf, message: String },
    #[error("error[E_PIPELINE]: {0}")]
    Pipeline(#[from] hybridloc_core::Error),
    #[error("error[E_SERIALIZE]: {0}")]
    Serialize(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "E_IO",
            CliError::Syntax { .. } => "E_SYNTAX",
            CliError::MissingSection { .. } => "E_MISSING_SECTION",
            CliError::Invalid { .. } => "E_INVALID",
            CliError::Header { .. } => "E_HEADER",
            CliError::Row { .. } => "E_ROW",
            CliError::UnknownSource { .. } => "E_UNKNOWN_SOURCE",
            CliError::Order { .. } => "E_ORDER",
            CliError::Empty { .. } => "E_EMPTY",
            CliError::Fit { .. } => "E_FIT_RANK",
            CliError::Pipeline(_) => "E_PIPELINE",
            CliError::Serialize(_) => "E_SERIALIZE",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Invalid(String),

    #[error("{} violation(s):\n  {}", .0.len(), .0.join("\n  "))]
    Violations(Vec<String>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: bad magic {found:?}, expected \"DEMB\"", path.display())]
    BadMagic { path: PathBuf, found: [u8; 4] },

    #[error("{}: unsupported format version {version}", path.display())]
    UnsupportedVersion { path: PathBuf, version: u16 },

    #[error("{}: truncated file, expected {expected} bytes, found {actual}", path.display())]
    Truncated {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("missing input file(s):\n  {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join("\n  "))]
    MissingFiles(Vec<PathBuf>),

    #[error("frame dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("band radius {band} cannot connect sequences of length {len_x} and {len_y}")]
    BandInfeasible {
        band: usize,
        len_x: usize,
        len_y: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("no cost for segment pair ({0}, {1}) in induced table")]
    MissingCost(String, String),

    #[error("degenerate PMI table (all pairs share one PMI value); keep unit costs instead")]
    DegenerateTable,

    #[error("correlation undefined: {0} has zero variance")]
    ZeroVariance(&'static str),

    #[error("{0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::MissingFiles(_) => 3,
            Error::DegenerateTable | Error::ZeroVariance(_) | Error::Numerical(_) => 4,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

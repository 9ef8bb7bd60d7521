use std::path::PathBuf;

use tangent_graphs::Error as CoreError;

/// Exit codes of the `tgraph` binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    /// The checked property holds, or the command succeeded.
    Holds = 0,
    /// The checked property fails.
    Fails = 1,
    /// The numerics could not decide.
    Inconclusive = 2,
    /// Invalid arguments or configuration.
    Invalid = 3,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Holds => "holds",
            Self::Fails => "fails",
            Self::Inconclusive => "inconclusive",
            Self::Invalid => "invalid",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot parse {path}: {source}")]
    ConfigParse { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write to stdout: {0}")]
    Stdout(std::io::Error),
    #[error("cannot configure the thread pool: {0}")]
    Threads(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        match self {
            Self::Config(_) | Self::ConfigParse { .. } | Self::Io { .. } | Self::Threads(_) => ExitStatus::Invalid,
            Self::Stdout(_) => ExitStatus::Inconclusive,
            Self::Core(e) => core_status(e),
        }
    }
}

fn core_status(e: &CoreError) -> ExitStatus {
    match e {
        CoreError::InvalidInput(_)
        | CoreError::UnknownEntry(_)
        | CoreError::InvalidParams(_)
        | CoreError::HypothesisFailed(_) => ExitStatus::Invalid,
        CoreError::NotAGraph { .. } | CoreError::PreconditionViolated { .. } | CoreError::ProbeHypothesisFailed { .. } => {
            ExitStatus::Fails
        }
        CoreError::RankDeficient { .. }
        | CoreError::BoundaryEscape { .. }
        | CoreError::NoConvergence { .. }
        | CoreError::LeftRegion
        | CoreError::Inconclusive(_)
        | CoreError::MonotonicityViolated { .. }
        | CoreError::Numerical(_) => ExitStatus::Inconclusive,
    }
}

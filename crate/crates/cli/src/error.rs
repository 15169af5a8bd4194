use std::path::PathBuf;
use std::process::ExitCode;

use flowpath::Error;

/// Failure of a subcommand, mapped to a reason code and exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("missing artifact {}: {hint}", path.display())]
    MissingArtifact { path: PathBuf, hint: String },

    #[error("{0}")]
    Config(String),

    #[error("{message} (channels: {})", list(channels))]
    Algorithm { message: String, channels: Vec<u32> },

    #[error("{0}")]
    Other(String),
}

fn list(ids: &[u32]) -> String {
    if ids.is_empty() {
        return "none".into();
    }
    ids.iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::MissingArtifact { .. } => "missing-artifact",
            Self::Config(_) => "config",
            Self::Algorithm { .. } => "algorithm",
            Self::Other(_) => "error",
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::MissingArtifact { .. } => 2,
            Self::Config(_) => 3,
            Self::Algorithm { .. } => 4,
            Self::Other(_) => 1,
        })
    }

    /// Collects per-channel failures into one algorithm error.
    pub fn from_failures(stage: &str, failures: &[(u32, Error)]) -> Self {
        let mut kinds: Vec<String> = failures.iter().map(|(_, e)| kind(e).to_string()).collect();
        kinds.sort();
        kinds.dedup();
        for (c, e) in failures {
            log::warn!("{stage}: channel {c}: {e}");
        }
        Self::Algorithm {
            message: format!("{stage} failed with {}", kinds.join("/")),
            channels: failures.iter().map(|(c, _)| *c).collect(),
        }
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::NoPath { .. } => "NoPath",
        Error::EmptyField => "EmptyField",
        Error::EmptyInput => "EmptyInput",
        Error::EmptyStation { .. } => "EmptyStation",
        Error::TooShort { .. } => "TooShort",
        Error::SolverFailure { .. } => "SolverFailure",
        Error::NoReference { .. } => "NoReference",
        Error::DegenerateDirection(_) => "DegenerateDirection",
        Error::OutOfCapture { .. } => "OutOfCapture",
        _ => "Error",
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(m) => Self::Config(m),
            Error::NoPath { channel } | Error::NoReference { channel } => Self::Algorithm {
                message: format!("{}: {e}", kind(&e)),
                channels: vec![channel],
            },
            Error::EmptyField
            | Error::EmptyInput
            | Error::EmptyStation { .. }
            | Error::TooShort { .. }
            | Error::SolverFailure { .. }
            | Error::DegenerateDirection(_)
            | Error::OutOfCapture { .. } => Self::Algorithm {
                message: format!("{}: {e}", kind(&e)),
                channels: Vec::new(),
            },
            other => Self::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Other(e.to_string())
    }
}

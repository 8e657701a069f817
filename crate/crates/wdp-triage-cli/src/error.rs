//! CLI error type. Everything that escapes a subcommand is printed as one
//! line, `error[CODE]: message`, and the process exits with status 1, so
//! wrappers can match on the code without parsing prose.

use std::fmt;
use std::io;
use std::path::Path;

/// Failure category, stable across releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Io,
    Json,
    Config,
    Instance,
    Solver,
    Train,
    Model,
    Pipeline,
}

impl Code {
    pub fn tag(self) -> &'static str {
        match self {
            Code::Io => "E_IO",
            Code::Json => "E_JSON",
            Code::Config => "E_CONFIG",
            Code::Instance => "E_INSTANCE",
            Code::Solver => "E_SOLVER",
            Code::Train => "E_TRAIN",
            Code::Model => "E_MODEL",
            Code::Pipeline => "E_PIPELINE",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: Code,
    pub message: String,
}

impl CliError {
    pub fn new(code: Code, message: impl Into<String>) -> CliError {
        CliError { code, message: message.into() }
    }

    pub fn io(path: &Path, err: io::Error) -> CliError {
        CliError::new(Code::Io, format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Embedded newlines would break the one-line contract; flatten them.
        let flat = self.message.replace('\n', "; ");
        write!(f, "error[{}]: {}", self.code.tag(), flat)
    }
}

impl From<wdp_triage::Error> for CliError {
    fn from(err: wdp_triage::Error) -> CliError {
        use wdp_triage::Error as E;
        let code = match &err {
            E::InvalidConfig(_) => Code::Config,
            E::InvalidInstance(_) | E::InvalidInput(_) | E::EmptyDataset => Code::Instance,
            E::DatasetTooSmall { .. } | E::DegenerateLabels => Code::Train,
            E::TooManyBids { .. } | E::NotProvenOptimal => Code::Solver,
            E::UntrainedModel | E::MissingModel => Code::Model,
            E::Json(_) => Code::Json,
        };
        CliError::new(code, err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

use kforr::classify::ClassifyError;
use kforr::datagen::DatagenError;
use kforr::forrelation::ForrelationError;
use kforr::qstate::QStateError;
use thiserror::Error;

pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0} invariant(s) failed")]
    VerificationFailed(usize),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Forrelation(#[from] ForrelationError),
    #[error(transparent)]
    Simulator(#[from] QStateError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::VerificationFailed(_) => EXIT_VERIFY,
            _ => EXIT_RUNTIME,
        }
    }
}

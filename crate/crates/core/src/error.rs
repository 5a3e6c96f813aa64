use thiserror::Error;

/// Failure classes shared by the library, the CLI and the C interface.
///
/// The discriminants double as process exit codes: input problems exit 1,
/// problems too large to enumerate exit 2, and failed mathematical checks
/// exit 3 so pipelines can tell bad input apart from a broken theorem check.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("scale error: {0}")]
    Scale(String),
    /// The object has the wrong structural kind (cyclic part, non-forest graph, ...).
    #[error("kind error: {0}")]
    Kind(String),
    /// A precondition of a probabilistic construction does not hold.
    #[error("precondition error: {0}")]
    Precondition(String),
    #[error("verification failure: {0}")]
    Verification(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Kind(_) | Error::Precondition(_) => 1,
            Error::Scale(_) => 2,
            Error::Verification(_) => 3,
            Error::Internal(_) => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

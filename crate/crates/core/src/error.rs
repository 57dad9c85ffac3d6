use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a mathematical precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// Input tree or mesh is not of the required shape.
    #[error("structural error: {0}")]
    Structural(String),
    /// Link placement needs a larger k.
    #[error("k = {k} too small for link placement; k >= {min_k} is always admissible")]
    KTooSmall { k: usize, min_k: usize },
    /// Input could not be parsed or fails schema checks.
    #[error("schema error: {0}")]
    Schema(String),
    /// A certified inequality could not be established.
    #[error("certification failed: {0}")]
    Certification(String),
}

impl Error {
    /// Process exit code: 1 domain, 2 schema, 3 certification.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Structural(_) | Error::KTooSmall { .. } => 1,
            Error::Schema(_) => 2,
            Error::Certification(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn structural<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Structural(msg.into()))
}

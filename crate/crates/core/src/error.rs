use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed to reach its tolerance.
    #[error("numerical error: {message} (residual estimate {residual:.3e})")]
    Numerical { message: String, residual: f64 },

    /// A resource guard (register size, search-space size) was exceeded.
    #[error("resource limit exceeded: {message} (requested {size})")]
    Resource { message: String, size: u128 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

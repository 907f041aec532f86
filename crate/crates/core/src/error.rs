use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("discretization error: {0}")]
    Discretization(String),

    #[error("refinement error: {0}")]
    Refinement(String),

    #[error("lineage error: fine triangle {fine} has no parent in the coarse mesh")]
    Lineage { fine: usize },

    #[error("stability error: tau = {tau} exceeds the CFL bound {bound}")]
    Stability { tau: f64, bound: f64 },

    #[error("divergence: non-finite solution at step {step}")]
    Divergence { step: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with a location such as `level 2, iteration 5`.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

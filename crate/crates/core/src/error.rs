use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("ambiguous multiplicity: {0} support vectors within tolerance")]
    Ambiguous(usize),
    #[error("ambiguous branch matching at sample {0}")]
    AmbiguousBranch(usize),
    #[error("chain not representable in complex: {0}")]
    NotRepresentable(String),
    #[error("selection does not refine the chain: {0}")]
    Refinement(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("smallness violation: {0}")]
    Smallness(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("thickness violation: {0}")]
    Thickness(String),
    #[error("at vertex {index} {x:?}: {source}")]
    AtVertex {
        index: usize,
        x: Vec<f64>,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for errors caused by malformed or inconsistent input data.
    pub fn is_input(&self) -> bool {
        match self {
            Error::Input(_) | Error::NotRepresentable(_) | Error::Json(_) => true,
            Error::AtVertex { source, .. } => source.is_input(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

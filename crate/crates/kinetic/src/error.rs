use thiserror::Error;

/// Errors produced by the kinetic library.
#[derive(Debug, Error)]
pub enum KineticError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("out of domain: {0}")]
    Domain(String),

    #[error("non-finite value at quadrature node {node_index} (species {species}): {detail}")]
    NonFiniteNode {
        node_index: usize,
        species: usize,
        detail: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KineticError>;

impl KineticError {
    pub fn parameter(msg: impl Into<String>) -> Self {
        KineticError::Parameter(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        KineticError::Domain(msg.into())
    }
}

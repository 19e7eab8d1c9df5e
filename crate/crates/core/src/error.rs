use thiserror::Error;

use crate::net::Activation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("eigendecomposition did not converge after {iterations} iterations")]
    EigFailure { iterations: usize },

    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("activation {0:?} has no continuous second derivative")]
    UnsupportedActivation(Activation),

    #[error("singular boundary coefficient at point {index}")]
    SingularCoefficient { index: usize },

    #[error("integration became unstable at step {step}")]
    StepSize { step: usize },

    #[error("training diverged at epoch {epoch}")]
    DivergenceDetected { epoch: usize },

    #[error("reference solution has zero norm on the test grid")]
    DegenerateReference,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

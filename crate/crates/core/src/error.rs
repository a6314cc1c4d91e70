use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("collision between elements {i} and {j} (distance {distance:e})")]
    Collision { i: usize, j: usize, distance: f64 },

    #[error("collision at quadrature node {node} between elements {i} and {j}")]
    NodeCollision { node: usize, i: usize, j: usize },

    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),

    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("block index k = {k} out of range 1..={n}")]
    IndexOutOfRange { k: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("probe width collapsed below 1e-10 around nu0 = {nu0}")]
    ProbeWidth { nu0: f64 },

    #[error("degenerate bifurcation: kernel dimension {kernel_dim} at nu = {nu}")]
    DegenerateBifurcation { nu: f64, kernel_dim: usize },

    #[error("Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("near-degenerate Jacobian (pivot ratio {ratio:e})")]
    NearDegeneracy { ratio: f64 },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

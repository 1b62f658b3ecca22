use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("grid too small for the derivative stencils: need at least {min} nodes per axis, got {nx}x{ny}")]
    GridTooSmall { nx: usize, ny: usize, min: usize },

    #[error("invalid grid geometry: {0}")]
    InvalidGrid(String),

    #[error("invalid boundary partition: {0}")]
    InvalidPartition(String),

    #[error("field shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("no boundary nodes carry the label {0}")]
    EmptyLabel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Neumann series diverged: term ratio {ratio:.4} stayed >= 1 for 3 consecutive terms")]
    SeriesDiverged { ratio: f64 },

    #[error("{method} did not converge after {iterations} iterations (last relative residual {residual:.3e})")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("discrete system is numerically singular (condition estimate {condition:.3e}); shift Q away from an interior eigenvalue")]
    Singular { condition: f64 },

    #[error("Newton refinement failed near cell ({i}, {j}) after {iterations} iterations")]
    NewtonFailed { i: usize, j: usize, iterations: usize },

    #[error("degenerate critical point: |det psi''| = {det:.3e}")]
    DegenerateCriticalPoint { det: f64 },

    #[error("exponential weight overflows: tau * range = {exponent:.1}; normalize the weight so its maximum is 0")]
    WeightOverflow { exponent: f64 },

    #[error("Cauchy data mismatch: {0}")]
    CauchyDataMismatch(String),

    #[error("basis element {index}: {source}")]
    BasisElement {
        index: usize,
        #[source]
        source: Box<LabError>,
    },

    #[error("case precondition violated: {0}")]
    Precondition(String),

    #[error("decay fit needs at least 3 positive samples: {0}")]
    InsufficientSamples(String),
}

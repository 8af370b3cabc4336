use thiserror::Error;

/// Errors raised anywhere in the band construction, assembly and solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid surface parameters: {0}")]
    InvalidSurface(String),

    #[error("closest point of ({x:.6}, {y:.6}, {z:.6}) is not unique")]
    DegenerateQuery { x: f64, y: f64, z: f64 },

    #[error("point is not on the boundary of the surface")]
    NotOnBoundary,

    #[error("point is not on the surface (distance {0:.3e})")]
    NotOnSurface(f64),

    #[error("surface parameters ({0}, {1}) are outside the parameter domain")]
    OutOfDomain(f64, f64),

    #[error("invalid grid request: {0}")]
    InvalidGrid(String),

    #[error("interpolation or Laplacian stencil node {0:?} is missing from the band")]
    StencilEscape([i32; 3]),

    #[error("matrix dimensions do not match: {0}")]
    DimensionMismatch(String),

    #[error("linear system is singular or numerically rank deficient")]
    SingularSystem,

    #[error("iterative method did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("surface has no boundary, the boundary mass matrix is zero")]
    NoBoundary,

    #[error("sparse factorization failed: {0}")]
    FactorizationFailure(String),

    #[error("non-finite value in simulation state at step {step}")]
    NonFinite { step: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

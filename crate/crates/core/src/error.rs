use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension {0} is not supported (1 <= dim <= 4)")]
    UnsupportedDimension(usize),

    #[error("label {0} has a zero normal")]
    ZeroNormal(usize),

    #[error("the region defined by the labels is unbounded")]
    Unbounded,

    #[error("the region defined by the labels has empty interior")]
    EmptyInterior,

    #[error("label {0} is redundant (its zero set does not cut out a facet)")]
    RedundantLabel(usize),

    #[error("facet index {index} out of range ({count} facets)")]
    InvalidFacet { index: usize, count: usize },

    #[error("point {point:?} is not in the interior of the polytope")]
    NotInterior { point: Vec<f64> },

    #[error("weight v is not positive at vertex {vertex:?} (value {value})")]
    NonPositiveWeight { vertex: Vec<f64>, value: f64 },

    #[error("linear system is ill-conditioned (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("Hessian is not positive definite at {point:?} (smallest eigenvalue {min_eig:e})")]
    NotConvex { point: Vec<f64>, min_eig: f64 },

    #[error("probe {point:?} is closer than {margin} to the boundary")]
    ProbeTooClose { point: Vec<f64>, margin: f64 },

    #[error("weights are not normalized: affine Futaki residual {0:e}")]
    NotNormalized(f64),

    #[error("operation requires dimension {expected}, got {got}")]
    WrongDimension { expected: String, got: usize },

    #[error("no polynomial solution found up to degree {0}")]
    Infeasible(u32),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

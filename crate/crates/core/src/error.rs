use thiserror::Error;

/// Errors surfaced by the certification pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid piecewise linear-quadratic function: {0}")]
    InvalidPlq(String),

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error(
        "point ({u}, {y}) is off the subgradient graph by {distance:.3e} \
         (snap tolerance {tolerance:.1e})"
    )]
    OffGraph {
        u: f64,
        y: f64,
        distance: f64,
        tolerance: f64,
    },

    #[error("KKT pair inadmissible: residual {residual:.6e} exceeds tolerance {tolerance:.1e}")]
    InadmissibleKkt { residual: f64, tolerance: f64 },

    #[error(
        "component {index} infeasible: argument {value} lies {distance:.3e} outside the domain"
    )]
    InfeasibleComponent {
        index: usize,
        value: f64,
        distance: f64,
    },

    #[error("linear program failed on cone selection {selection:?}: {detail}")]
    LpFailure {
        selection: Vec<usize>,
        detail: String,
    },

    #[error("operation not applicable: {0}")]
    NotApplicable(String),

    #[error("graph sampler returned an off-graph point ({u}, {y}), distance {distance:.3e}")]
    SamplerContract { u: f64, y: f64, distance: f64 },

    #[error("undefined estimate: {0}")]
    Undefined(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FinslerError {
    #[error("tangent vector is zero: point lies outside the slit tangent bundle")]
    ZeroTangent,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    #[error("finite-difference stencil leaves slit bundle (step {step} vs |y| = {y_norm})")]
    StencilLeavesSlitBundle { step: f64, y_norm: f64 },

    #[error("strong convexity violated at x = {x:?}, y = {y:?}: eigenvalue {eigenvalue:e}")]
    StrongConvexityViolation {
        eigenvalue: f64,
        x: Vec<f64>,
        y: Vec<f64>,
    },

    #[error("point x = {x:?}, y = {y:?} lies outside the model's convexity domain")]
    OutsideConvexityDomain { x: Vec<f64>, y: Vec<f64> },

    #[error("unknown model family `{0}`")]
    UnknownFamily(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("randers one-form too long: ‖b‖_a = {norm} ≥ 1 at x = {x:?} (need ‖b‖_a < 1)")]
    RandersNormBound { norm: f64, x: Vec<f64> },

    #[error("matrix is not symmetric positive-definite: {0}")]
    NotPositiveDefinite(String),

    #[error("expression error at position {pos}: {msg}")]
    Expression { pos: usize, msg: String },

    #[error("y-local model requires a cone of directions for indicatrix quadrature")]
    ConeRequired,

    #[error("degenerate flag: denominator {denominator:e} below threshold")]
    DegenerateFlag { denominator: f64 },

    #[error("integration stalled at t = {t}: step size underflow (last state {state:?})")]
    IntegrationStalled { t: f64, state: Vec<f64> },

    #[error("y-dependent connection field `{0}` requires a reference vector")]
    MissingReference(String),

    #[error("evaluation failed at quadrature node {node}: {source}")]
    NodeEvaluation {
        node: usize,
        #[source]
        source: Box<FinslerError>,
    },
}

pub type Result<T> = std::result::Result<T, FinslerError>;

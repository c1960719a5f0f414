use thiserror::Error;

/// Crate-wide error type. Constructors validate geometric invariants and
/// report the first violated one.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vector is not unit length: |x| = {norm}")]
    NonUnitVector { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension must be at least {min}, got {got}")]
    DimensionTooSmall { min: usize, got: usize },

    #[error("vector entries must be finite")]
    NonFinite,

    #[error("ambient vector is not null: q = {q}")]
    NotNull { q: f64 },

    #[error("tangent is not orthogonal to the base point: <x,u> = {dot}")]
    NonOrthogonalTangent { dot: f64 },

    #[error("points are not in causal order: {detail}")]
    NotCausallyOrdered { detail: String },

    #[error("point is not in the chart: pairing with the chart direction is {pairing}")]
    NotInChart { pairing: f64 },

    #[error("hyperplane direction is not future null: {detail}")]
    BadNullDirection { detail: String },

    #[error("linear system is rank deficient")]
    RankDeficient,

    #[error("subspace does not have Lorentzian signature (1,{expected_positive}): {detail}")]
    BadSignature {
        expected_positive: usize,
        detail: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate sampling: only {kept} points survived filtering (minimum {min})")]
    DegenerateSampling { kept: usize, min: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

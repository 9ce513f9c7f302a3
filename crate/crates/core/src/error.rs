use thiserror::Error;

/// Failure modes of the evaluation and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A derivative primitive was applied where it is not smooth
    /// (square root of a negative value part, reciprocal of zero, ...).
    #[error("singular evaluation: {0}")]
    SingularEvaluation(&'static str),

    /// A finite-difference stencil sampled the function outside its domain.
    #[error("finite-difference stencil produced a non-finite sample")]
    StencilFailure,

    /// An argument violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The metric failed the positive-definiteness check at a base point.
    #[error("degenerate metric at the evaluation point")]
    DegenerateMetric,

    /// The fundamental tensor of the square metric failed to invert.
    #[error("degenerate fundamental tensor at the evaluation point")]
    DegenerateFundamentalTensor,

    /// The base point lies outside the coordinate chart of the field.
    #[error("outside chart: {0}")]
    OutsideChart(String),

    /// The direction lies outside the cone on which the square metric is
    /// regular, or too close to its boundary for stable differentiation.
    #[error("outside the regular cone: {0}")]
    OutsideCone(String),

    /// A deformation was requested where `b^2 = {0}` is not in `[0, 1)`.
    #[error("deformation domain: b^2 = {0} is not in [0, 1)")]
    DeformationDomain(f64),

    /// Family parameters do not define an admissible metric.
    #[error("inadmissible family parameters: {0}")]
    BadParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

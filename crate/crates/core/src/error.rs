use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("point {0} lies on the support")]
    PointOnSupport(String),
    #[error("inverse Cauchy transform: argument {0} outside the range (0, G(E+))")]
    OutOfRange(f64),
    #[error("inverse Cauchy transform did not converge for argument {0}")]
    NoConvergence(String),
    #[error("subordination iteration stalled at z = {0}")]
    SubordinationStall(String),
    #[error("both inputs are single atoms")]
    BothAtoms,
    #[error("measure does not have density at most one")]
    NotDensityBounded,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("no critical point of the edge function on (0, G_max)")]
    NoCriticalPoint,
    #[error("critical point not unique: {0:?}")]
    NonUniqueCriticalPoint(Vec<f64>),
    #[error("threshold {0} is not to the right of the support")]
    NotOutsideSupport(f64),
    #[error("argument {0} must be nonzero")]
    ZeroArgument(&'static str),
    #[error("overflow while evaluating {0}")]
    Overflow(&'static str),
    #[error("{0}")]
    DimensionMismatch(String),
    #[error("pole collision: {0}")]
    PoleCollision(String),
    #[error("alternant matrix is numerically singular (condition {0:e})")]
    SingularAlternant(f64),
    #[error("contour ray blocked: {0}")]
    RayBlocked(String),
    #[error("negative power of a zero argument")]
    ZeroArgumentNegativePower,
    #[error("contour radii do not nest: {0}")]
    ContourNesting(String),
    #[error("truncation insufficient: {0}")]
    TruncationInsufficient(String),
    #[error("extrapolation unstable: {0}")]
    ExtrapolationUnstable(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("operation not supported for atomic measures")]
    AtomicUnsupported,
    #[error("point {0} is too close to a singular endpoint")]
    NearSingularEndpoint(f64),
    #[error("branch violation: 1 - G hits the negative real axis at {0}")]
    BranchViolation(String),
    #[error("no branch choice makes the integrand decay: {0}")]
    BranchError(String),
    #[error("Hermitian eigensolver failed: {0}")]
    EigenFailure(String),
    #[error("enumeration too large: {0}")]
    TooLarge(String),
}

impl SpecError {
    /// True for errors caused by bad input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SpecError::InvalidMeasure(_)
                | SpecError::PointOnSupport(_)
                | SpecError::OutOfRange(_)
                | SpecError::BothAtoms
                | SpecError::NotDensityBounded
                | SpecError::InvalidModel(_)
                | SpecError::NotOutsideSupport(_)
                | SpecError::ZeroArgument(_)
                | SpecError::DimensionMismatch(_)
                | SpecError::PoleCollision(_)
                | SpecError::ZeroArgumentNegativePower
                | SpecError::ContourNesting(_)
                | SpecError::InvalidArgument(_)
                | SpecError::AtomicUnsupported
                | SpecError::NearSingularEndpoint(_)
                | SpecError::TooLarge(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, SpecError>;

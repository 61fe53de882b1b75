use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not positive definite (min eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("state is not faithful (min eigenvalue {0:.3e})")]
    NotFaithful(f64),
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("vector is not in the cone (residual {0:.3e})")]
    NotInCone(f64),
    #[error("vector is not normalized (norm deviation {0:.3e})")]
    NotNormalized(f64),
    #[error("hull membership is decided by hull_membership, not cone_membership")]
    HullNotSupportedHere,
    #[error("unsupported cone kind for this operation: {0}")]
    UnsupportedKind(String),
    #[error("reduction is not Hermitian (deviation {0:.3e})")]
    NonHermitianReduction(f64),
    #[error("bad Choi matrix: {0}")]
    BadChoi(String),
    #[error("unknown map kind: {0}")]
    UnknownKind(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("map does not satisfy detailed balance II for this state")]
    NoDetailedBalance,
    #[error("map is not unital (‖φ(I) − I‖ = {0:.3e})")]
    NotUnital(f64),
    #[error("positivity violation found (value {0:.3e})")]
    NotPositiveEvidence(f64),
    #[error("map is not in the face F(ξ, η) (residual {0:.3e})")]
    NotInFace(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable variant name for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotHermitian(_) => "NotHermitian",
            Error::NonFinite => "NonFinite",
            Error::NotPositiveDefinite(_) => "NotPositiveDefinite",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::LayoutMismatch(_) => "LayoutMismatch",
            Error::NotFaithful(_) => "NotFaithful",
            Error::NotDensity(_) => "NotDensity",
            Error::NotInCone(_) => "NotInCone",
            Error::NotNormalized(_) => "NotNormalized",
            Error::HullNotSupportedHere => "HullNotSupportedHere",
            Error::UnsupportedKind(_) => "UnsupportedKind",
            Error::NonHermitianReduction(_) => "NonHermitianReduction",
            Error::BadChoi(_) => "BadChoi",
            Error::UnknownKind(_) => "UnknownKind",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NoDetailedBalance => "NoDetailedBalance",
            Error::NotUnital(_) => "NotUnital",
            Error::NotPositiveEvidence(_) => "NotPositiveEvidence",
            Error::NotInFace(_) => "NotInFace",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Parse(_) => "ParseError",
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,

    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: u32, found: u32 },

    #[error("invalid degree: {0}")]
    InvalidDegree(String),

    #[error("linear part of the jet is not the identity")]
    NonUnitLinearPart,

    #[error("image graph has quadratic part {found} instead of z^2 + zbar^2")]
    LeftClass { found: String },

    #[error("degenerate cubic: W vanishes identically (nondegeneracy hypothesis fails)")]
    DegenerateW,

    #[error("resonance condition at degree {degree} (chain depth {depth}) is not affine in any unresolved parameter")]
    NonAffineResolution { degree: u32, depth: usize },

    #[error("parameter degree {found} exceeds cap {cap} at degree {degree}")]
    ParameterCapExceeded { degree: u32, found: u32, cap: u32 },

    #[error("unresolved parameters remain: {0}")]
    Unresolved(String),

    #[error("schema error: {0}")]
    Parse(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use crate::lattice::Site;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("site {0} is not part of the geometry")]
    SiteOutside(Site),
    #[error("disorder field has no phase for site {0}")]
    MissingPhase(Site),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("dimension {dim} exceeds the dense limit {limit}")]
    DenseLimit { dim: usize, limit: usize },
    #[error("eigensolver failed: {0}")]
    Eigensolver(String),
    #[error(
        "near-singular resolvent solve: residual {residual:e}, distance of z to the circle {gap:e}"
    )]
    NearSingular { residual: f64, gap: f64 },
    #[error("arc measure {0} is outside the exact-formula regime (< 1/4)")]
    ArcRegime(f64),
    #[error("decay fit: {0}")]
    Fit(String),
}

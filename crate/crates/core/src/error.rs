use thiserror::Error;

/// Errors raised by geometric constructors and numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An inverse trig argument left [-1, 1] by more than the clamp tolerance.
    #[error("{what}: argument {value} outside [-1, 1]")]
    DomainViolation { what: &'static str, value: f64 },

    #[error("point at height {height} lies inside the unit ball")]
    InsideUnitBall { height: f64 },

    #[error("phase point (h = {h}, alpha = {alpha}) is outside the admissible region")]
    OutsidePhaseSpace { h: f64, alpha: f64 },

    #[error("segment (h0 = {h0}, h1 = {h1}, ell = {ell}) is infeasible: {reason}")]
    InfeasibleSegment {
        h0: f64,
        h1: f64,
        ell: f64,
        reason: &'static str,
    },

    #[error("curve is not on the unit sphere (vertex {index} has norm {norm})")]
    NotOnSphere { index: usize, norm: f64 },

    #[error("starting curve does not inspect the sphere (min support {min_support})")]
    InfeasibleStart { min_support: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Clamp `x` into [-1, 1] if it is within `tol` of the interval, else fail.
pub(crate) fn clamp_unit(x: f64, tol: f64, what: &'static str) -> Result<f64> {
    if x.is_nan() || x < -1.0 - tol || x > 1.0 + tol {
        return Err(Error::DomainViolation { what, value: x });
    }
    Ok(x.clamp(-1.0, 1.0))
}

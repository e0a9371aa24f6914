use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} has a pole at {at}")]
    Pole { what: &'static str, at: Complex64 },

    #[error("resonant frequency: 1/omega = {0} is an integer")]
    ResonantOmega(f64),

    #[error("{what} did not converge: {detail}")]
    NoConvergence { what: &'static str, detail: String },

    #[error("too close to a resolvent pole (condition estimate {cond:.3e})")]
    NearPole { cond: f64 },

    #[error("matching function derivative is too small (|F'| = {0:.3e})")]
    MultipleRootSuspicion(f64),

    #[error("pole is not simple: <S0 y0, y0*> = {0}")]
    SimplicityViolation(Complex64),

    #[error("contour radius {radius:.3e} reaches a branch cut at distance {dist:.3e}")]
    ContourCrossesCut { radius: f64, dist: f64 },

    #[error("kernel vector residual {0:.3e} exceeds tolerance")]
    Residual(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

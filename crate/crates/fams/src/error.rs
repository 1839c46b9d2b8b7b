//! Crate-wide error type.
//!
//! Every fallible operation returns `Result<T, Error>`. Variants carry enough
//! payload to diagnose the failure without re-running: domain errors name the
//! offending value, certification errors name a witness point, iterative
//! failures report the last residual.

use std::fmt;

use crate::family::Point;

#[derive(Debug, Clone)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    Domain { what: &'static str, value: f64 },
    /// A constructor or config rejected a parameter.
    InvalidParameter(String),
    /// A sampled hypothesis check failed; carries the worst witness.
    Certification {
        what: String,
        witness: Option<(Point, Point, f64)>,
    },
    /// Numeric quadrature could not reach the requested accuracy.
    QuadratureAccuracy { target: f64, achieved: f64 },
    /// An iterative scalar solve hit its iteration cap.
    RootFind {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    /// The requested solver does not match the classified regime.
    RegimeMismatch(String),
    /// A descent or path iteration failed to converge.
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "domain error: {what} (value {value})"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Certification { what, witness } => {
                write!(f, "certification failed: {what}")?;
                if let Some((x, y, t)) = witness {
                    write!(f, " at x=({}, {}), y=({}, {}), t={}", x[0], x[1], y[0], y[1], t)?;
                }
                Ok(())
            }
            Error::QuadratureAccuracy { target, achieved } => {
                write!(f, "quadrature tolerance {target} not reached (achieved {achieved})")
            }
            Error::RootFind { what, iterations, residual } => {
                write!(f, "{what}: root solve hit {iterations} iterations (residual {residual})")
            }
            Error::RegimeMismatch(msg) => write!(f, "regime mismatch: {msg}"),
            Error::NonConvergence { what, iterations, residual } => {
                write!(f, "{what} did not converge after {iterations} iterations (residual {residual})")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

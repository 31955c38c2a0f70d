//! Error type shared across the crate.

use std::fmt;

/// Failures surfaced by the solver library.
#[derive(Debug)]
pub enum Error {
    /// Closest-point projection ran out of iterations (pathological geometry).
    NonConvergence { what: &'static str },
    /// Level-set gradient vanished where a normal was requested (e.g. a cusp).
    DegenerateGradient { x: f64, y: f64 },
    /// A patch square was expected to intersect the interface but no zero
    /// crossing was found on its sub-grid.
    EmptyIntersection,
    /// Node index outside the family's valid range.
    IndexOutOfRange { family: &'static str, i: i64, j: i64 },
    /// Polynomial degree outside the supported range.
    UnsupportedDegree(usize),
    /// Requested derivative order not available on the basis.
    UnsupportedDerivative { space: usize, time: usize },
    /// The normal matrix of a patch lost rank below the pivot threshold.
    SingularNormalMatrix { pivot: f64, threshold: f64 },
    /// A corrected stencil sample had no correction entry.
    MissingCorrection { family: &'static str, i: i64, j: i64 },
    /// Correction polynomial evaluated outside its patch.
    OutsidePatch,
    /// Unknown manufactured-problem identifier.
    UnknownProblem(String),
    /// Convergence-order fit on empty or zero error data.
    DegenerateData(&'static str),
    /// Configuration file problem (reported with line/field context).
    Config(String),
    /// File I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonConvergence { what } => write!(f, "iteration did not converge: {what}"),
            Error::DegenerateGradient { x, y } => {
                write!(f, "level-set gradient vanishes at ({x}, {y})")
            }
            Error::EmptyIntersection => {
                write!(f, "patch square does not intersect the interface")
            }
            Error::IndexOutOfRange { family, i, j } => {
                write!(f, "index ({i}, {j}) outside range of family {family}")
            }
            Error::UnsupportedDegree(k) => write!(f, "unsupported polynomial degree {k}"),
            Error::UnsupportedDerivative { space, time } => {
                write!(f, "unsupported derivative order (space {space}, time {time})")
            }
            Error::SingularNormalMatrix { pivot, threshold } => {
                write!(f, "normal matrix singular: pivot {pivot:e} below {threshold:e}")
            }
            Error::MissingCorrection { family, i, j } => {
                write!(f, "no correction entry for {family} node ({i}, {j})")
            }
            Error::OutsidePatch => write!(f, "evaluation point outside patch"),
            Error::UnknownProblem(id) => write!(f, "unknown problem id `{id}`"),
            Error::DegenerateData(what) => write!(f, "degenerate data for {what}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use core::fmt;

use crate::linalg::Vec2;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Grid construction parameters out of range.
    InvalidGrid(&'static str),
    /// A field does not match the grid it is used with.
    FieldLength { expected: usize, found: usize },
    /// Curvature pair outside the admissible cone of the curvature function.
    ConeViolation { node: Option<usize>, kappa: Vec2 },
    /// Radial function not positive, so the surface is not representable.
    NonPositiveRadius { node: Option<usize>, rho: f64 },
    /// A prescribed-function condition failed where it is required.
    Admissibility(&'static str),
    /// Invalid parameters for a curvature or prescribed function.
    InvalidParameter(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::FieldLength { expected, found } => {
                write!(f, "field has {found} values, grid has {expected} nodes")
            }
            Error::ConeViolation { node: Some(n), kappa } => write!(
                f,
                "curvatures ({}, {}) at node {n} leave the admissible cone",
                kappa[0], kappa[1]
            ),
            Error::ConeViolation { node: None, kappa } => write!(
                f,
                "curvatures ({}, {}) leave the admissible cone",
                kappa[0], kappa[1]
            ),
            Error::NonPositiveRadius { node: Some(n), rho } => {
                write!(f, "radius {rho} at node {n} is not positive")
            }
            Error::NonPositiveRadius { node: None, rho } => {
                write!(f, "radius {rho} is not positive")
            }
            Error::Admissibility(msg) => write!(f, "admissibility: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl Error {
    pub(crate) fn at_node(self, node: usize) -> Self {
        match self {
            Error::ConeViolation { kappa, .. } => Error::ConeViolation { node: Some(node), kappa },
            Error::NonPositiveRadius { rho, .. } => Error::NonPositiveRadius { node: Some(node), rho },
            other => other,
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

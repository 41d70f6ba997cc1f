use thiserror::Error;

use crate::geometry::Point2;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({}, {}) lies outside the domain of `{label}`", .point.x, .point.y)]
    DomainViolation { label: String, point: Point2 },

    #[error("map `{label}` is not differentiable at ({}, {})", .point.x, .point.y)]
    NotDifferentiable { label: String, point: Point2 },

    #[error("initial separation {separation:e} is below the underflow guard")]
    DegenerateSeparation { separation: f64 },

    #[error("no candidate survives in the dynamical ball (n = {n}, delta = {delta:e})")]
    EmptyCandidateSet { n: usize, delta: f64 },

    #[error("disc placement failed: {0}")]
    DiscOverlap(String),

    #[error("base map moves the unit circle by {max_error:e}")]
    BoundaryMismatch { max_error: f64 },

    #[error("top exponent {chi:.4} at ({}, {}) fails the positivity gate", .point.x, .point.y)]
    NoHyperbolicity { point: Point2, chi: f64 },

    #[error("measured Lambda of the base map is {lambda:.4}; re-parameterize the stand-in")]
    BaseMapNotChaotic { lambda: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain has infinite area; integration needs a bounded domain")]
    UnboundedDomain,

    #[error("unknown map `{0}`")]
    UnknownMap(String),
}

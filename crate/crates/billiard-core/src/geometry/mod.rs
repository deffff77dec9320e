//! Analytic cross sections: curves, domains, curvature-sign decomposition of
//! the boundary and tubular charts.

mod chart;
mod curve;
mod decompose;
mod domain;

pub use chart::{chart, Christoffel, LocalChart};
pub use curve::{AnalyticCurve, CurveKind, CurvePoint, GraphSide, Orientation};
pub use decompose::{
    curvature, decompose_boundary, BoundaryDecomposition, CurveDecomposition, Inflection, InflectionTag, Interval,
    Piece,
};
pub use domain::{Domain, Location, Projection};

pub(crate) use domain::{Circle, BLOCK};

use thiserror::Error;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("parametrization degenerates at tau = {tau}")]
    DegenerateParametrization { tau: f64 },
    #[error("{cos} cosine and {sin} sine coefficients")]
    CoefficientMismatch { cos: usize, sin: usize },
    #[error("a closed curve needs at least one harmonic")]
    NoHarmonics,
    #[error("declared {declared:?} but signed area is {area}")]
    OrientationMismatch { declared: Orientation, area: f64 },
    #[error("graph arc needs coefficients and a non-empty range")]
    InvalidArc,
    #[error("curve {curve} must be closed")]
    NotClosed { curve: usize },
    #[error("hole {hole} is not strictly inside the outer curve")]
    HoleOutside { hole: usize },
    #[error("holes {a} and {b} overlap")]
    HolesOverlap { a: usize, b: usize },
    #[error("axial period must be positive, got {0}")]
    NonPositivePeriod(f64),
    #[error("sandbox scene has no arcs")]
    EmptySandbox,
    #[error("no sign-resolved curvature zero near tau = {tau} on curve {curve}")]
    UnresolvedZero { curve: usize, tau: f64 },
    #[error("curvature vanishes identically near tau = {tau} on curve {curve}")]
    FlatArc { curve: usize, tau: f64 },
    #[error("chart radius {radius} exceeds the reach {reach}")]
    ReachExceeded { radius: f64, reach: f64 },
    #[error("no curve with id {0}")]
    UnknownCurve(usize),
    #[error("point is outside the chart's validity radius")]
    OutsideChart,
}

//! Grazing families launched tangentially from concave arcs, sticky grazing
//! detection, the inflection ray atlas, the explicit sticky example over the
//! parabola `y = x^2 / 2` and sampled estimates of the excluded velocity set.

mod atlas;
mod excluded;
mod family;
mod parabola;
mod sticky;

pub use atlas::{inflection_ray_atlas, AtlasLaunch, InflectionAtlas, Segment};
pub use excluded::{sample_excluded_directions, ExcludedDirections};
pub use family::{trace_grazing_family, GrazingFamily, Launch, LaunchSign};
pub use parabola::{
    build_sticky_example, delta_star, reflected_slope, ArcConstruction, ArcSample, StickyExample, STICKY_TARGET,
};
pub use sticky::{detect_sticky, StickyReport, Verdict};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::trajectory::TraceError;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GrazingError {
    #[error("launch interval or grid is empty")]
    EmptyInterval,
    #[error("interval is not inside a concave interval of curve {0}")]
    NotConcave(usize),
    #[error("every launch terminated before its first bounce")]
    AllTrapped,
    #[error("launch {launch} has {clean} clean bounces, need {needed}")]
    InsufficientBounces { launch: usize, clean: usize, needed: usize },
    #[error("family of size {0} cannot locate a common point")]
    DegenerateFamily(usize),
    #[error("L' lost positivity at delta = {delta}")]
    StepFailure { delta: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

//! Particle transport with specular reflection and conservation checks, plus
//! grid solvers for the relaxation model `f_t + v . grad f + nu0 f = 0` and
//! its gain-term extension `f_t + v . grad f + f = int_{|u| <= N} f du`.

mod ensemble;
mod grid;
mod solvers;

pub use ensemble::{
    axis_symmetry_test, transport_ensemble, AngularDrift, AxisFit, AxisMode, ConservationReport, ParticleEnsemble,
    Transported,
};
pub use grid::{InitialDatum, KineticGrid, Node, SpaceGrid};
pub use solvers::{duhamel_gain_iteration, relaxation_decay, upwind_reference, DecayCurve, GainIteration};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::trajectory::TraceError;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum KineticError {
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("weight {index} is negative or not finite")]
    InvalidWeight { index: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("sandbox scenes have no interior to sample")]
    Sandbox,
    #[error("no grid node lies inside the domain")]
    NoInteriorNodes,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

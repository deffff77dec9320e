//! Derivatives of the bounce map in boundary charts, determinant identities,
//! the specular transition matrix and the change-of-variable determinant.
//! Every analytic value comes with a finite-difference counterpart.
//!
//! Chart coordinates at a bounce are anchored at the bounce itself, so the
//! tangential coordinate `x1` is the parameter offset from `tau^k` and
//! `sqrt(g_11) = |a'(tau^k)|`. Velocity components are `(v . e1, v . e3)` in
//! the unit frame. For a backward cycle the post-reflection velocity `v^k`
//! satisfies `v^k . n > 0` at `x^k`, and the next point is
//! `x^{k+1} = x^k - (t^k - t^{k+1}) v^k`.

mod bounce;
mod corpus;
mod cov;
mod global;
mod transversality;

pub use bounce::{bounce_jacobian, chain_determinant, det_check, ChainReport, DeterminantCheck};
pub use corpus::{sample_phases, Sample};
pub use cov::{change_of_variable_check, Condition, CovOptions, CovReport};
pub use global::first_bounce_jacobian_global;
pub use transversality::{
    critical_times, transition_data, transversality_product, CriticalTimes, SpecularBasis, TransitionData,
    TransitionMatrix, Transversality,
};

use alloc::vec::Vec;
use thiserror::Error;

use crate::geometry::{chart, Domain, GeometryError};
use crate::math::{section, Vec2};
use crate::tolerances;
use crate::trajectory::{cast, BounceEvent, Direction, SpecularCycle, TraceError, TraceOptions};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum JacobianError {
    #[error("bounce {0} is grazing")]
    GrazingAtBounce(usize),
    #[error("cycle has no bounce {0}")]
    MissingBounce(usize),
    #[error("Jacobians are defined on backward cycles")]
    ForwardCycle,
    #[error("perturbation changed the bounce sequence")]
    CombinatoricsChanged,
    #[error("both affine coefficients are below the floor")]
    BothCoefficientsTiny,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(&'static str),
    #[error("chart failure: {0}")]
    Chart(#[from] GeometryError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianOptions {
    /// Base finite-difference step; multiplied by the natural scale of each
    /// perturbed variable.
    pub step: f64,
    pub trace: TraceOptions,
}

impl Default for JacobianOptions {
    fn default() -> Self {
        Self { step: tolerances::FD_STEP, trace: TraceOptions::backward() }
    }
}

/// One derivative: analytic value, finite-difference value and the relative
/// residual with the absolute floor folded in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub name: &'static str,
    pub analytic: f64,
    pub fd: f64,
    pub residual: f64,
}

impl Entry {
    pub fn new(name: &'static str, analytic: f64, fd: f64) -> Self {
        Self { name, analytic, fd, residual: residual(analytic, fd) }
    }

    pub fn passes(&self) -> bool {
        self.residual < tolerances::FD_REL_TOL
    }
}

/// `|a - b| / max(|b|, floor / rel)`, so that the value drops below the
/// relative tolerance exactly when the relative or the absolute test passes.
pub fn residual(analytic: f64, fd: f64) -> f64 {
    (analytic - fd).abs() / fd.abs().max(tolerances::FD_ABS_FLOOR / tolerances::FD_REL_TOL)
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobianReport {
    /// Bounce index `k`; 0 for the first-bounce global map.
    pub index: usize,
    pub entries: Vec<Entry>,
    pub max_residual: f64,
    pub determinant: Option<DeterminantCheck>,
}

impl JacobianReport {
    fn new(index: usize, entries: Vec<Entry>, determinant: Option<DeterminantCheck>) -> Self {
        let max_residual = entries.iter().map(|e| e.residual).fold(0.0, f64::max);
        Self { index, entries, max_residual, determinant }
    }

    pub fn entry(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Central difference with one Richardson step,
/// `(4 D(h/2) - D(h)) / 3` with `D(h) = (f(h) - f(-h)) / 2h`.
///
/// The step adapts per component: a step ten times larger is tried as well
/// and wins where `|D(h) - D(h/2)|` is smaller, which happens when rounding
/// noise dominates truncation. If the larger step fails the base one stands.
pub(crate) fn richardson<const N: usize, E>(h: f64, f: impl Fn(f64) -> Result<[f64; N], E>) -> Result<[f64; N], E> {
    let extrapolate = |h: f64| -> Result<([f64; N], [f64; N]), E> {
        let central = |h: f64| -> Result<[f64; N], E> {
            let (p, m) = (f(h)?, f(-h)?);
            Ok(core::array::from_fn(|i| (p[i] - m[i]) / (2.0 * h)))
        };
        let (d1, d2) = (central(h)?, central(0.5 * h)?);
        Ok((core::array::from_fn(|i| (4.0 * d2[i] - d1[i]) / 3.0), core::array::from_fn(|i| (d2[i] - d1[i]).abs())))
    };
    let (mut best, err) = extrapolate(h)?;
    if let Ok((wide, wide_err)) = extrapolate(10.0 * h) {
        for i in 0..N {
            if wide_err[i] < err[i] {
                best[i] = wide[i];
            }
        }
    }
    Ok(best)
}

/// Frame data at a bounce, in the chart anchored there.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Frame {
    pub curve: usize,
    pub tau: f64,
    pub t: f64,
    /// `d eta / d x1` on the boundary, i.e. `a'(tau)`.
    pub d1: Vec2,
    pub sqrt_g: f64,
    pub e1: Vec2,
    pub e3: Vec2,
    pub de1: Vec2,
    pub de3: Vec2,
}

impl Frame {
    pub fn at(domain: &Domain, curve: usize, tau: f64, t: f64) -> Result<Self, JacobianError> {
        let c = chart(domain, curve, tau, 0.0)?;
        let (d1, _) = c.coordinate_frame(0.0, 0.0);
        let (e1, e3) = c.unit_frame(0.0);
        let (de1, de3) = c.frame_derivative(0.0, 0.0);
        Ok(Self { curve, tau: c.anchor(), t, d1, sqrt_g: d1.norm(), e1, e3, de1, de3 })
    }

    pub fn of(domain: &Domain, e: &BounceEvent) -> Result<Self, JacobianError> {
        Self::at(domain, e.curve, e.tau, e.t)
    }
}

/// Bounce `k` (1-based) and its successor from a backward cycle, checked
/// for transversality.
pub(crate) fn bounce_pair(
    cycle: &SpecularCycle,
    k: usize,
    eps: f64,
) -> Result<(&BounceEvent, &BounceEvent), JacobianError> {
    if cycle.direction != Direction::Backward {
        return Err(JacobianError::ForwardCycle);
    }
    if k == 0 || k + 1 > cycle.events.len() {
        return Err(JacobianError::MissingBounce(k + 1));
    }
    let (a, b) = (&cycle.events[k - 1], &cycle.events[k]);
    for e in [a, b] {
        if e.class.is_grazing() || e.incidence <= eps * section(e.post).norm() {
            return Err(JacobianError::GrazingAtBounce(e.index));
        }
    }
    Ok((a, b))
}

/// Next boundary hit of the backward flight from boundary point `tau` of
/// `curve` with post-reflection velocity `v`. Fails unless it lands on
/// `expect` without a tangency.
pub(crate) fn next_hit(
    domain: &Domain,
    curve: usize,
    tau: f64,
    v: Vec2,
    expect: usize,
    opts: &TraceOptions,
) -> Result<(f64, f64), JacobianError> {
    let x = domain.curves()[curve].point(tau);
    match cast(domain, x, -v, Some((curve, tau)), opts)? {
        Some(hit) if hit.curve == expect && !hit.touch => Ok((hit.time, hit.tau)),
        _ => Err(JacobianError::CombinatoricsChanged),
    }
}

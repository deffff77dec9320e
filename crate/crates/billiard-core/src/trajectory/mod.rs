//! Specular cycles: ray/boundary intersection, reflection, grazing
//! classification, bounce counting and the axial lift.

mod intersect;
mod trace;

pub use intersect::{first_exit, Exit};
pub use trace::{bounce_count, classify_grazing, classify_tangent, grazing_margin, trace_cycles, GrazingMargin};

pub(crate) use intersect::cast;

use alloc::vec::Vec;
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::math::{lift, section, Vec2, Vec3};
use crate::tolerances;

/// A point of phase space: position `(x1, x2, x3)` with `x2` axial,
/// velocity, and the reference time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub x: Vec3,
    pub v: Vec3,
    pub t: f64,
}

impl PhasePoint {
    pub fn new(x: Vec3, v: Vec3, t: f64) -> Self {
        Self { x, v, t }
    }

    /// Phase with zero axial position and velocity at time zero.
    pub fn planar(x: Vec2, v: Vec2) -> Self {
        Self { x: lift(x, 0.0), v: lift(v, 0.0), t: 0.0 }
    }

    pub fn position(&self) -> Vec2 {
        section(self.x)
    }

    pub fn velocity(&self) -> Vec2 {
        section(self.v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GrazingClass {
    NonGrazing,
    Concave,
    Convex,
    InflectionOutward,
    InflectionInward,
}

impl GrazingClass {
    pub fn label(self) -> &'static str {
        match self {
            Self::NonGrazing => "non-grazing",
            Self::Concave => "concave",
            Self::Convex => "convex",
            Self::InflectionOutward => "inflection-outward",
            Self::InflectionInward => "inflection-inward",
        }
    }

    pub fn is_grazing(self) -> bool {
        self != Self::NonGrazing
    }
}

/// One boundary hit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BounceEvent {
    /// 1 for the first hit after the origin.
    pub index: usize,
    pub t: f64,
    pub x: Vec3,
    pub curve: usize,
    pub tau: f64,
    /// Velocity on the chord arriving here, in trace order.
    pub pre: Vec3,
    /// Velocity on the chord leaving here, in trace order.
    pub post: Vec3,
    /// `|v . n|` at the hit.
    pub incidence: f64,
    pub class: GrazingClass,
}

impl BounceEvent {
    pub fn position(&self) -> Vec2 {
        section(self.x)
    }

    pub fn velocity(&self) -> Vec2 {
        section(self.post)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    HorizonTime,
    HorizonLength,
    ConvexGrazingStop,
    InwardInflectionTrap,
    BounceCap,
    SolverFailure,
    /// The ray left a sandbox scene without hitting any arc.
    Escaped,
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Self::HorizonTime => "horizon-time",
            Self::HorizonLength => "horizon-length",
            Self::ConvexGrazingStop => "convex-grazing-stop",
            Self::InwardInflectionTrap => "inward-inflection-trap",
            Self::BounceCap => "bounce-cap",
            Self::SolverFailure => "solver-failure",
            Self::Escaped => "escaped",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Backward,
    Forward,
}

impl Direction {
    /// `+1` forward, `-1` backward.
    pub fn sign(self) -> f64 {
        match self {
            Self::Forward => 1.0,
            Self::Backward => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    /// Elapsed time measured from the origin.
    Time(f64),
    /// Cumulative chord length.
    Length(f64),
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceOptions {
    pub direction: Direction,
    pub horizon: Horizon,
    /// Relative grazing threshold on `|v . n| / |v|`.
    pub eps_grazing: f64,
    pub bounce_cap: usize,
    /// Admissible cross-section speeds `[lo, hi]`.
    pub speed_band: (f64, f64),
    /// Parameter window around the launch point excluded from the next hit.
    pub tau_window: f64,
    /// Minimum flight length, relative to the domain diameter.
    pub s_floor: f64,
    /// Tangency certification clearance, relative to the domain diameter.
    pub touch: f64,
    pub inflection_window: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            direction: Direction::Backward,
            horizon: Horizon::Unbounded,
            eps_grazing: tolerances::EPS_GRAZING,
            bounce_cap: tolerances::BOUNCE_CAP,
            speed_band: (0.0, f64::INFINITY),
            tau_window: tolerances::TAU_WINDOW,
            s_floor: tolerances::S_FLOOR,
            touch: tolerances::TOUCH,
            inflection_window: tolerances::INFLECTION_WINDOW,
        }
    }
}

impl TraceOptions {
    pub fn forward() -> Self {
        Self { direction: Direction::Forward, ..Self::default() }
    }

    pub fn backward() -> Self {
        Self::default()
    }

    pub fn with_horizon(self, horizon: Horizon) -> Self {
        Self { horizon, ..self }
    }

    pub fn with_cap(self, bounce_cap: usize) -> Self {
        Self { bounce_cap, ..self }
    }

    /// Band `[1/n, n]`.
    pub fn with_band(self, n: f64) -> Self {
        Self { speed_band: (1.0 / n, n), ..self }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let positive = [self.eps_grazing, self.tau_window, self.s_floor, self.touch, self.inflection_window];
        let horizon_ok = match self.horizon {
            Horizon::Time(h) | Horizon::Length(h) => h >= 0.0,
            Horizon::Unbounded => true,
        };
        if positive.iter().all(|&x| x > 0.0)
            && self.bounce_cap >= 1
            && self.speed_band.0 >= 0.0
            && self.speed_band.1 >= self.speed_band.0
            && horizon_ok
        {
            Ok(())
        } else {
            Err(TraceError::InvalidOptions)
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("ray never meets the boundary")]
    NoIntersection,
    #[error("cannot certify crossing versus tangency near tau = {tau} on curve {curve}")]
    TangencyAmbiguous { curve: usize, tau: f64 },
    #[error("grazing hit at tau = {tau} on curve {curve} is too close to a curvature zero to classify")]
    AmbiguousLocation { curve: usize, tau: f64 },
    #[error("velocity has no cross-section component")]
    ZeroVelocity,
    #[error("cross-section speed {0} is outside the admissible band")]
    SpeedOutOfBand(f64),
    #[error("start point is outside the domain")]
    OutsideDomain,
    #[error("ray launched from the boundary points out of the domain")]
    PointsOutward,
    #[error("bounce cap {0} reached before the horizon")]
    BounceCapExceeded(usize),
    #[error("invalid trace options")]
    InvalidOptions,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Ordered bounce events of one trajectory, in trace order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecularCycle {
    pub origin: PhasePoint,
    pub direction: Direction,
    pub events: Vec<BounceEvent>,
    pub termination: Termination,
    /// Sum of recorded chord lengths.
    pub length: f64,
    /// Set when `termination` is `SolverFailure`.
    pub failure: Option<TraceError>,
}

impl SpecularCycle {
    /// Lengths of the recorded chords, starting with origin to first hit.
    pub fn chords(&self) -> impl Iterator<Item = f64> + '_ {
        let first = self.events.first().map(|e| (e.position() - self.origin.position()).norm());
        first.into_iter().chain(self.events.windows(2).map(|w| (w[1].position() - w[0].position()).norm()))
    }

    /// Cross-section position and velocity at time `s`, when `s` is covered
    /// by the trace.
    pub fn state_at(&self, s: f64) -> Option<(Vec2, Vec2)> {
        let sigma = self.direction.sign();
        let elapsed = sigma * (s - self.origin.t);
        if elapsed < 0.0 {
            return None;
        }
        let k = self.events.partition_point(|e| sigma * (e.t - self.origin.t) <= elapsed);
        let open =
            matches!(self.termination, Termination::HorizonTime | Termination::HorizonLength | Termination::Escaped);
        if k == self.events.len() && !open {
            let last = self.events.last().map_or(0.0, |e| sigma * (e.t - self.origin.t));
            if elapsed > last {
                return None;
            }
        }
        let (t0, x0, v0) = match k {
            0 => (self.origin.t, self.origin.position(), self.origin.velocity()),
            _ => {
                let e = &self.events[k - 1];
                (e.t, e.position(), e.velocity())
            }
        };
        Some((x0 + v0 * (s - t0), v0))
    }

    /// Full position at time `s` in a cylinder of axial period `height`.
    pub fn position_at(&self, s: f64, height: f64) -> Option<Vec3> {
        self.state_at(s).map(|(x, _)| lift(x, lift_cylinder(&self.origin, s, height)))
    }
}

/// Specular reflection `v - 2 (n . v) n`.
pub fn reflect(v: Vec3, n: Vec3) -> Vec3 {
    v - n * (2.0 * n.dot(&v))
}

pub(crate) fn reflect2(v: Vec2, n: Vec2) -> Vec2 {
    v - n * (2.0 * n.dot(&v))
}

/// Axial coordinate at time `s`: `(x2 - (t - s) v2) mod height`.
pub fn lift_cylinder(phase: &PhasePoint, s: f64, height: f64) -> f64 {
    (phase.x.y - (phase.t - s) * phase.v.y).rem_euclid(height)
}

use alloc::vec::Vec;

use super::sticky::point_segment_distance;
use super::{GrazingError, LaunchSign};
use crate::geometry::{Domain, InflectionTag};
use crate::math::{lift, Vec2};
use crate::trajectory::{trace_cycles, Horizon, PhasePoint, Termination, TraceOptions};

/// A chord between two boundary points, with the velocity it is traversed
/// with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: Vec2,
    pub end: Vec2,
    pub velocity: Vec2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtlasLaunch {
    pub curve: usize,
    pub tau: f64,
    pub tag: InflectionTag,
    pub sign: LaunchSign,
    pub phase: PhasePoint,
    pub termination: Termination,
    pub segments: Vec<Segment>,
}

/// Chords of the backward trajectories launched tangentially from every
/// inflection point.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct InflectionAtlas {
    pub launches: Vec<AtlasLaunch>,
}

impl InflectionAtlas {
    pub fn is_empty(&self) -> bool {
        self.launches.is_empty()
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.launches.iter().flat_map(|l| &l.segments)
    }

    /// Distance from `x` to the nearest atlas chord; infinite when empty.
    pub fn distance(&self, x: Vec2) -> f64 {
        self.segments().map(|s| point_segment_distance(x, s.start, s.end)).fold(f64::INFINITY, f64::min)
    }

    /// Whether `x` lies within `clearance` of a chord.
    pub fn contains(&self, x: Vec2, clearance: f64) -> bool {
        self.distance(x) <= clearance
    }
}

/// For each inflection point launches both tangent phases `(a, +-speed T)`
/// and traces them backward until the cumulative chord length reaches
/// `length` or the trajectory stops. The chord that crosses `length` is
/// kept whole so every segment ends on the boundary; a sandbox escape ray
/// is dropped.
pub fn inflection_ray_atlas(domain: &Domain, speed: f64, length: f64) -> Result<InflectionAtlas, GrazingError> {
    if !(speed > 0.0 && speed.is_finite() && length >= 0.0) {
        return Err(GrazingError::InvalidInput("speed must be positive and length non-negative"));
    }
    let opts = TraceOptions::backward().with_horizon(Horizon::Length(length + domain.diameter()));
    let mut launches = Vec::new();
    for (curve, f) in domain.decomposition().inflections() {
        let p = domain.curves()[curve].eval(f.tau);
        for sign in [LaunchSign::Minus, LaunchSign::Plus] {
            let v = p.tangent() * (sign.value() * speed);
            let phase = PhasePoint::new(lift(p.pos, 0.0), lift(v, 0.0), 0.0);
            let cycle = trace_cycles(domain, &phase, &opts)?;
            let mut segments = Vec::new();
            let (mut from, mut velocity, mut total) = (p.pos, v, 0.0);
            for e in &cycle.events {
                let to = e.position();
                segments.push(Segment { start: from, end: to, velocity });
                total += (to - from).norm();
                if total >= length {
                    break;
                }
                (from, velocity) = (to, e.velocity());
            }
            launches.push(AtlasLaunch {
                curve,
                tau: f.tau,
                tag: f.tag,
                sign,
                phase,
                termination: cycle.termination,
                segments,
            });
        }
    }
    Ok(InflectionAtlas { launches })
}

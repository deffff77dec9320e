use alloc::vec::Vec;

use super::{
    cast, lift_cylinder, reflect2, BounceEvent, GrazingClass, Horizon, PhasePoint, SpecularCycle, Termination,
    TraceError, TraceOptions,
};
use crate::geometry::{BoundaryDecomposition, Domain, Location, Piece};
use crate::math::{lift, section, Vec2};

/// Relative slack on the length horizon so that chords summing to exactly
/// `L` in exact arithmetic are not cut by rounding.
const LENGTH_SLACK: f64 = 1e-12;

/// Follow the specular trajectory through `phase` in the direction chosen by
/// `opts` until a horizon, a stopping grazing, or the bounce cap.
///
/// Invalid starting data is an error. Failures during the trace end it with
/// `Termination::SolverFailure` and keep the events found so far.
pub fn trace_cycles(domain: &Domain, phase: &PhasePoint, opts: &TraceOptions) -> Result<SpecularCycle, TraceError> {
    opts.validate()?;
    let decomp = domain.decomposition();
    let sigma = opts.direction.sign();
    let v0 = phase.velocity();
    let speed = v0.norm();
    if speed == 0.0 || !speed.is_finite() {
        return Err(TraceError::ZeroVelocity);
    }
    if speed < opts.speed_band.0 || speed > opts.speed_band.1 {
        return Err(TraceError::SpeedOutOfBand(speed));
    }
    let x0 = phase.position();
    let mut launch = match domain.locate(x0, 1e-10 * domain.diameter()) {
        Location::Outside => return Err(TraceError::OutsideDomain),
        Location::Inside => None,
        Location::OnBoundary { curve, tau } => Some((curve, tau)),
    };
    let mut cycle = SpecularCycle {
        origin: *phase,
        direction: opts.direction,
        events: Vec::new(),
        termination: Termination::BounceCap,
        length: 0.0,
        failure: None,
    };

    if let Some((id, tau)) = launch {
        let w = v0 * sigma;
        let wn = w.dot(&domain.curves()[id].normal(tau));
        if wn > opts.eps_grazing * speed {
            return Err(TraceError::PointsOutward);
        }
        if wn.abs() <= opts.eps_grazing * speed {
            match classify_tangent(domain, decomp, id, tau, w, opts)? {
                GrazingClass::Convex => {
                    cycle.termination = Termination::ConvexGrazingStop;
                    return Ok(cycle);
                }
                GrazingClass::InflectionInward => {
                    cycle.termination = Termination::InwardInflectionTrap;
                    return Ok(cycle);
                }
                _ => {}
            }
        }
    }

    let (mut x, mut v, mut t) = (x0, v0, phase.t);
    let axial = phase.v.y;
    let height = domain.height();
    loop {
        if cycle.events.len() >= opts.bounce_cap {
            cycle.termination = Termination::BounceCap;
            break;
        }
        let w = v * sigma;
        let hit = match cast(domain, x, w, launch, opts) {
            Ok(Some(hit)) => hit,
            Ok(None) => {
                cycle.termination = Termination::Escaped;
                break;
            }
            Err(e) => {
                cycle.termination = Termination::SolverFailure;
                cycle.failure = Some(e);
                break;
            }
        };
        match opts.horizon {
            Horizon::Time(limit) if sigma * (t - phase.t) + hit.time > limit => {
                cycle.termination = Termination::HorizonTime;
                break;
            }
            Horizon::Length(limit) if cycle.length + hit.distance > limit * (1.0 + LENGTH_SLACK) => {
                cycle.termination = Termination::HorizonLength;
                break;
            }
            _ => {}
        }
        let p = domain.curves()[hit.curve].eval(hit.tau);
        let n = p.normal();
        let incidence = v.dot(&n).abs();
        let (class, post) = if incidence <= opts.eps_grazing * speed {
            match classify_tangent(domain, decomp, hit.curve, hit.tau, w, opts) {
                Ok(class) => (class, v),
                Err(e) => {
                    cycle.termination = Termination::SolverFailure;
                    cycle.failure = Some(e);
                    break;
                }
            }
        } else {
            let r = reflect2(v, n);
            (GrazingClass::NonGrazing, r * (speed / r.norm()))
        };
        t += sigma * hit.time;
        cycle.length += hit.distance;
        let at = PhasePoint { t, ..*phase };
        cycle.events.push(BounceEvent {
            index: cycle.events.len() + 1,
            t,
            x: lift(hit.point, lift_cylinder(phase, at.t, height)),
            curve: hit.curve,
            tau: hit.tau,
            pre: lift(v, axial),
            post: lift(post, axial),
            incidence,
            class,
        });
        match class {
            GrazingClass::Convex => {
                cycle.termination = Termination::ConvexGrazingStop;
                break;
            }
            GrazingClass::InflectionInward => {
                cycle.termination = Termination::InwardInflectionTrap;
                break;
            }
            _ => {}
        }
        x = hit.point;
        v = post;
        launch = Some((hit.curve, hit.tau));
    }
    Ok(cycle)
}

/// Grazing class of a recorded event; `NonGrazing` above the threshold.
pub fn classify_grazing(
    domain: &Domain,
    decomp: &BoundaryDecomposition,
    event: &BounceEvent,
    opts: &TraceOptions,
) -> Result<GrazingClass, TraceError> {
    let v = section(event.post);
    if event.incidence > opts.eps_grazing * v.norm() {
        return Ok(GrazingClass::NonGrazing);
    }
    classify_tangent(domain, decomp, event.curve, event.tau, v * opts.direction.sign(), opts)
}

/// Class of a tangential contact at `tau` of curve `id` when the motion
/// continues along `w`.
pub fn classify_tangent(
    domain: &Domain,
    decomp: &BoundaryDecomposition,
    id: usize,
    tau: f64,
    w: Vec2,
    opts: &TraceOptions,
) -> Result<GrazingClass, TraceError> {
    let curve = domain.curve(id)?;
    let ambiguous = TraceError::AmbiguousLocation { curve: id, tau };
    match decomp.piece_at(curve, id, tau, opts.inflection_window) {
        Piece::Inflection(tag) => {
            // the concave side of the tangent line lies along +T for a
            // negative-to-positive sign change
            let side = match tag {
                crate::geometry::InflectionTag::Plus => 1.0,
                crate::geometry::InflectionTag::Minus => -1.0,
            };
            let along = side * w.dot(&curve.tangent(tau));
            Ok(if along > 0.0 { GrazingClass::InflectionOutward } else { GrazingClass::InflectionInward })
        }
        Piece::Flat if decomp.curve(id).flat => Ok(GrazingClass::Concave),
        Piece::Flat => Err(ambiguous),
        piece => {
            if curve.curvature(tau)?.abs() <= decomp.kappa_tol {
                return Err(ambiguous);
            }
            Ok(if piece == Piece::Concave { GrazingClass::Concave } else { GrazingClass::Convex })
        }
    }
}

/// Number of chords needed for the cumulative path length to exceed `length`,
/// or the index of a trapping or stopping event reached first.
pub fn bounce_count(
    domain: &Domain,
    phase: &PhasePoint,
    length: f64,
    opts: &TraceOptions,
) -> Result<usize, TraceError> {
    let opts = opts.with_horizon(Horizon::Length(length));
    let cycle = trace_cycles(domain, phase, &opts)?;
    match cycle.termination {
        Termination::HorizonLength | Termination::Escaped => Ok(cycle.events.len() + 1),
        Termination::ConvexGrazingStop | Termination::InwardInflectionTrap => Ok(cycle.events.len()),
        Termination::BounceCap => Err(TraceError::BounceCapExceeded(opts.bounce_cap)),
        Termination::SolverFailure => Err(cycle.failure.unwrap_or(TraceError::NoIntersection)),
        Termination::HorizonTime => unreachable!("length horizon only"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrazingMargin {
    /// Smallest `|v . n|` over the events.
    pub min_incidence: f64,
    /// Smallest `dist(x^k, inflection set) + |v^k . n|`; infinite without
    /// inflection points.
    pub min_inflection_distance: f64,
}

pub fn grazing_margin(domain: &Domain, cycle: &SpecularCycle, decomp: &BoundaryDecomposition) -> GrazingMargin {
    let inflections: Vec<Vec2> = decomp.inflections().map(|(id, f)| domain.curves()[id].point(f.tau)).collect();
    let mut margin = GrazingMargin { min_incidence: f64::INFINITY, min_inflection_distance: f64::INFINITY };
    for e in &cycle.events {
        margin.min_incidence = margin.min_incidence.min(e.incidence);
        let x = e.position();
        let d = inflections.iter().map(|p| (p - x).norm()).fold(f64::INFINITY, f64::min);
        margin.min_inflection_distance = margin.min_inflection_distance.min(d + e.incidence);
    }
    margin
}

use alloc::vec::Vec;

use super::GrazingError;
use crate::geometry::{Domain, Location};
use crate::math::{lift, Vec2, TAU};
use crate::trajectory::{trace_cycles, PhasePoint, TraceError, TraceOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct ExcludedDirections {
    /// Angles of the flagged grid directions.
    pub flagged: Vec<f64>,
    /// Grid directions admissible from `x` (all of them for interior points).
    pub admissible: usize,
    pub fraction: f64,
    /// `fraction` times the area of the speed band `1/N <= |v| <= N`.
    pub measure: f64,
}

struct Probe {
    angle: f64,
    route: Vec<usize>,
    grazes: bool,
    margin: f64,
}

/// Flags grid directions near which the `bounces`-bounce backward cycle from
/// `x` grazes.
///
/// The grid holds `directions` angles offset by half a cell. A direction is
/// flagged when its own cycle grazes, or when the sequence of curves hit
/// changes between it and the next admissible direction; of such a pair the
/// one with the smaller incidence is flagged. Exact grazing directions are
/// isolated, so the flagged count stays bounded under refinement and the
/// fraction decays like the grid spacing.
pub fn sample_excluded_directions(
    domain: &Domain,
    x: Vec2,
    directions: usize,
    bounces: usize,
    band: f64,
    opts: &TraceOptions,
) -> Result<ExcludedDirections, GrazingError> {
    if directions < 2 || bounces == 0 || !(band >= 1.0) {
        return Err(GrazingError::InvalidInput("need two directions, one bounce and a band N >= 1"));
    }
    if domain.locate(x, 1e-10 * domain.diameter()) == Location::Outside {
        return Err(TraceError::OutsideDomain.into());
    }
    let opts = opts.with_cap(bounces);
    let mut probes = Vec::with_capacity(directions);
    for i in 0..directions {
        let angle = TAU * (i as f64 + 0.5) / directions as f64;
        let (s, c) = angle.sin_cos();
        let phase = PhasePoint::new(lift(x, 0.0), lift(Vec2::new(c, s), 0.0), 0.0);
        let cycle = match trace_cycles(domain, &phase, &opts) {
            Ok(c) => c,
            Err(TraceError::PointsOutward) => continue,
            Err(e) => return Err(e.into()),
        };
        let grazes = cycle.failure.is_some() || cycle.events.iter().any(|e| e.class.is_grazing());
        let margin = cycle.events.iter().map(|e| e.incidence).fold(f64::INFINITY, f64::min);
        probes.push(Probe { angle, route: cycle.events.iter().map(|e| e.curve).collect(), grazes, margin });
    }
    let n = probes.len();
    let mut flag = Vec::from_iter(probes.iter().map(|p| p.grazes));
    // neighbours across a gap of inadmissible directions are not compared
    let step = TAU / directions as f64;
    for i in 0..n {
        let j = (i + 1) % n;
        let gap = (probes[j].angle - probes[i].angle).rem_euclid(TAU);
        if n > 1 && gap < 1.5 * step && probes[i].route != probes[j].route {
            let k = if probes[i].margin <= probes[j].margin { i } else { j };
            flag[k] = true;
        }
    }
    let flagged: Vec<f64> = probes.iter().zip(&flag).filter(|(_, f)| **f).map(|(p, _)| p.angle).collect();
    let fraction = if n == 0 { 0.0 } else { flagged.len() as f64 / n as f64 };
    let area = core::f64::consts::PI * (band * band - 1.0 / (band * band));
    Ok(ExcludedDirections { flagged, admissible: n, fraction, measure: fraction * area })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_excludes_nothing() {
        let d = Domain::disk(1.0).unwrap();
        for x in [Vec2::new(0.2, 0.1), Vec2::new(1.0, 0.0)] {
            let r = sample_excluded_directions(&d, x, 256, 5, 10.0, &TraceOptions::backward()).unwrap();
            assert!(r.flagged.is_empty());
            assert_eq!(r.measure, 0.0);
        }
    }

    #[test]
    fn annulus_flags_the_two_tangents() {
        let d = Domain::annulus(1.0, 0.3).unwrap();
        let x = Vec2::new(1.0, 0.0);
        let mut last = 1.0;
        for n in [256, 1024, 4096] {
            let r = sample_excluded_directions(&d, x, n, 4, 10.0, &TraceOptions::backward()).unwrap();
            assert_eq!(r.flagged.len(), 2, "{n}");
            assert_eq!(r.admissible, n / 2);
            // backward motion along -v points into the domain for v near 0,
            // so the tangent directions are +-asin(0.3)
            for a in &r.flagged {
                let off = crate::math::wrap_angle(*a + core::f64::consts::PI) - core::f64::consts::PI;
                let off = off.abs() - 0.3f64.asin();
                assert!(off.abs() < TAU / n as f64);
            }
            assert!(r.fraction <= 0.5 * last);
            last = r.fraction;
        }
    }
}

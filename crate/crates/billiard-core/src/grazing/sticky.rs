use alloc::vec::Vec;

use super::{GrazingError, GrazingFamily};
use crate::math::Vec2;
use crate::tolerances;
use crate::trajectory::{SpecularCycle, Termination};

/// Families smaller than this never earn a `Sticky` verdict.
pub const MIN_FAMILY: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// All segments pass within the tolerance of one point.
    Sticky,
    /// The best common point misses some segment.
    Isolated,
    /// Segment directions are too close to parallel to locate a point.
    Degenerate,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Self::Sticky => "sticky",
            Self::Isolated => "isolated",
            Self::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StickyReport {
    pub bounce: usize,
    /// Least-squares common point of the supporting lines; `None` when
    /// degenerate.
    pub point: Option<Vec2>,
    /// Largest distance from `point` to a segment.
    pub residual: f64,
    /// Condition number of the 2x2 normal matrix.
    pub condition: f64,
    pub family_size: usize,
    pub verdict: Verdict,
}

/// Segment from bounce `k` to bounce `k + 1` of `cycle`. A cycle that
/// leaves a sandbox scene or reaches its horizon after bounce `k` supplies
/// the ray of length `reach` instead.
fn segment(cycle: &SpecularCycle, k: usize, reach: f64) -> Option<(Vec2, Vec2)> {
    if k == 0 || cycle.events.len() < k || cycle.events[..k].iter().any(|e| e.class.is_grazing()) {
        return None;
    }
    let a = cycle.events[k - 1].position();
    if let Some(b) = cycle.events.get(k) {
        return Some((a, b.position()));
    }
    let open =
        matches!(cycle.termination, Termination::Escaped | Termination::HorizonTime | Termination::HorizonLength);
    let v = cycle.events[k - 1].velocity() * cycle.direction.sign();
    open.then(|| (a, a + v.normalize() * reach))
}

pub(crate) fn point_segment_distance(x: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let t = if d.norm_squared() > 0.0 { ((x - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0) } else { 0.0 };
    (x - (a + d * t)).norm()
}

/// Common point of the lines through the bounce-`k` segments of a family.
///
/// Minimizes the summed squared distances to the supporting lines, then
/// validates against the segments themselves. Each cycle must reach bounce
/// `k` without grazing on the way.
pub fn detect_sticky(family: &GrazingFamily, k: usize, sticky_tol: f64) -> Result<StickyReport, GrazingError> {
    if family.len() < 2 {
        return Err(GrazingError::DegenerateFamily(family.len()));
    }
    let reach = family
        .launches
        .iter()
        .flat_map(|l| l.cycle.events.iter().map(move |e| (e.position() - l.phase.position()).norm()))
        .fold(1.0, f64::max);
    let segments = family
        .launches
        .iter()
        .enumerate()
        .map(|(i, l)| {
            segment(&l.cycle, k, 2.0 * reach).ok_or_else(|| GrazingError::InsufficientBounces {
                launch: i,
                clean: l.cycle.events.iter().take_while(|e| !e.class.is_grazing()).count(),
                needed: k,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(concurrence(&segments, k, sticky_tol))
}

pub(crate) fn concurrence(segments: &[(Vec2, Vec2)], k: usize, tol: f64) -> StickyReport {
    let (mut a11, mut a12, mut a22, mut b) = (0.0, 0.0, 0.0, Vec2::zeros());
    for (p, q) in segments {
        let Some(d) = (q - p).try_normalize(0.0) else { continue };
        // projector onto the line normal
        let (m11, m12, m22) = (1.0 - d.x * d.x, -d.x * d.y, 1.0 - d.y * d.y);
        a11 += m11;
        a12 += m12;
        a22 += m22;
        b += Vec2::new(m11 * p.x + m12 * p.y, m12 * p.x + m22 * p.y);
    }
    let (tr, det) = (a11 + a22, a11 * a22 - a12 * a12);
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (hi, lo) = (0.5 * tr + disc, 0.5 * tr - disc);
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let mut report = StickyReport {
        bounce: k,
        point: None,
        residual: f64::INFINITY,
        condition,
        family_size: segments.len(),
        verdict: Verdict::Degenerate,
    };
    if condition > tolerances::STICKY_CONDITION {
        return report;
    }
    let x = Vec2::new(a22 * b.x - a12 * b.y, a11 * b.y - a12 * b.x) / det;
    report.point = Some(x);
    report.residual = segments.iter().map(|(p, q)| point_segment_distance(x, *p, *q)).fold(0.0, f64::max);
    report.verdict =
        if report.residual < tol && segments.len() >= MIN_FAMILY { Verdict::Sticky } else { Verdict::Isolated };
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::grazing::{trace_grazing_family, LaunchSign};
    use crate::trajectory::Horizon;

    #[test]
    fn concurrent_segments() {
        let c = Vec2::new(0.3, -0.2);
        let segs: Vec<_> = (0..7)
            .map(|i| {
                let a = 0.4 * i as f64;
                let d = Vec2::new(a.cos(), a.sin());
                (c - d * 0.5, c + d * 1.5)
            })
            .collect();
        let r = concurrence(&segs, 1, 1e-9);
        assert_eq!(r.verdict, Verdict::Sticky);
        assert!((r.point.unwrap() - c).norm() < 1e-14);
    }

    #[test]
    fn parallel_and_short_families() {
        let segs: Vec<_> = (0..4).map(|i| (Vec2::new(0.0, i as f64), Vec2::new(1.0, i as f64))).collect();
        assert_eq!(concurrence(&segs, 1, 1e-6).verdict, Verdict::Degenerate);
        // two lines always meet
        let r = concurrence(
            &[(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)), (Vec2::new(0.5, -1.0), Vec2::new(0.5, 1.0))],
            1,
            1e-6,
        );
        assert_eq!(r.verdict, Verdict::Isolated);
        assert!(r.residual < 1e-15);
    }

    #[test]
    fn segment_extent_is_checked() {
        // lines meet at the origin but the segments stop short of it
        let segs = [
            (Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)),
            (Vec2::new(0.0, 1.0), Vec2::new(0.0, 2.0)),
            (Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0)),
        ];
        let r = concurrence(&segs, 1, 1e-6);
        assert!(r.point.unwrap().norm() < 1e-14);
        assert_eq!(r.verdict, Verdict::Isolated);
        assert!((r.residual - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn annulus_family_is_isolated() {
        let d = Domain::annulus(1.0, 0.3).unwrap();
        let (id, iv) = d.decomposition().concave_intervals().next().unwrap();
        let f = trace_grazing_family(&d, id, iv, 32, 1.0, LaunchSign::Plus, Horizon::Length(4.0)).unwrap();
        let r = detect_sticky(&f, 1, 1e-6 * d.diameter()).unwrap();
        assert_eq!(r.verdict, Verdict::Isolated);
        assert!(r.residual > 0.1);
    }

    #[test]
    fn small_family_rejected() {
        let d = Domain::annulus(1.0, 0.3).unwrap();
        let (id, iv) = d.decomposition().concave_intervals().next().unwrap();
        let f = trace_grazing_family(&d, id, iv, 1, 1.0, LaunchSign::Plus, Horizon::Length(4.0)).unwrap();
        assert_eq!(detect_sticky(&f, 1, 1e-6), Err(GrazingError::DegenerateFamily(1)));
        let f = trace_grazing_family(&d, id, iv, 4, 1.0, LaunchSign::Plus, Horizon::Length(1.2)).unwrap();
        assert!(matches!(detect_sticky(&f, 3, 1e-6), Err(GrazingError::InsufficientBounces { .. })));
    }
}

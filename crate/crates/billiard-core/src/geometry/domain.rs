use alloc::vec;
use alloc::vec::Vec;

use super::{decompose_boundary, AnalyticCurve, BoundaryDecomposition, GeometryError, Orientation};
use crate::math::{bracketed_root, Vec2};
use crate::tolerances::KAPPA_TOL;

/// Boundary sampling used by the intersection pre-filter and by point
/// location: nodes at uniform parameter spacing plus a bound on how far the
/// curve strays from each chord.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Polyline {
    pub taus: Vec<f64>,
    pub points: Vec<Vec2>,
    pub closed: bool,
    /// Parameter spacing between consecutive nodes.
    pub step: f64,
    /// Upper bound on the distance from the curve to the chord over one step.
    pub sag: f64,
    /// Bounding circles `(center, radius)` of runs of `BLOCK` segments.
    pub blocks: Vec<(Vec2, f64)>,
    /// Set when the curve is the circle `center + r (cos tau, +-sin tau)`.
    pub circle: Option<Circle>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Circle {
    pub center: Vec2,
    pub radius: f64,
    pub clockwise: bool,
}

impl Circle {
    fn detect(curve: &AnalyticCurve) -> Option<Self> {
        let (a0, cos, sin) = curve.fourier_coefficients()?;
        if cos.len() != 1 || cos[0].y != 0.0 || sin[0].x != 0.0 || cos[0].x <= 0.0 || sin[0].y.abs() != cos[0].x {
            return None;
        }
        Some(Self { center: a0, radius: cos[0].x, clockwise: sin[0].y < 0.0 })
    }

    /// Parameter of a point on the circle.
    pub fn param(&self, p: Vec2) -> f64 {
        let d = p - self.center;
        let y = if self.clockwise { -d.y } else { d.y };
        crate::math::wrap_angle(y.atan2(d.x))
    }
}

pub(crate) const BLOCK: usize = 8;

impl Polyline {
    fn build(curve: &AnalyticCurve) -> Self {
        let (lo, hi) = curve.range();
        let probe = curve.samples(1024);
        let dt = (hi - lo) / probe.len() as f64;
        let turning: f64 = probe
            .iter()
            .map(|&t| {
                let p = curve.eval(t);
                (p.curvature() * p.speed()).abs() * dt
            })
            .sum();
        let n = 64usize.max(8 * curve.harmonics()).max((turning / 0.05).ceil() as usize);
        let closed = curve.is_closed();
        let taus = if closed { curve.samples(n) } else { curve.samples(n + 1) };
        let points = taus.iter().map(|&t| curve.point(t)).collect();
        let step = (hi - lo) / n as f64;
        let (b2, _) = curve.derivative_bounds();
        let mut pl = Self {
            taus,
            points,
            closed,
            step,
            sag: b2 * step * step / 8.0,
            blocks: Vec::new(),
            circle: Circle::detect(curve),
        };
        let n = pl.points.len();
        pl.blocks = (0..pl.segments())
            .step_by(BLOCK)
            .map(|first| {
                let last = (first + BLOCK).min(pl.segments());
                let nodes = || (first..=last).map(|i| pl.points[i % n]);
                let center = nodes().sum::<Vec2>() / (last - first + 1) as f64;
                let radius = nodes().map(|p| (p - center).norm()).fold(0.0, f64::max);
                (center, radius + pl.sag)
            })
            .collect();
        pl
    }

    /// Number of segments.
    pub fn segments(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len() - 1
        }
    }

    /// Parameter interval `[a, b]` of segment `i` (may exceed `2pi` at the seam).
    pub fn segment(&self, i: usize) -> (f64, f64) {
        let a = self.taus[i];
        (a, a + self.step)
    }
}

/// Where a cross-section point sits relative to the domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Location {
    Inside,
    Outside,
    OnBoundary { curve: usize, tau: f64 },
}

/// Nearest boundary point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub curve: usize,
    pub tau: f64,
    pub point: Vec2,
    pub distance: f64,
    /// `(x - point) . n`: negative inside the domain.
    pub signed_distance: f64,
    /// False when the nearest point is an endpoint of an open arc.
    pub interior: bool,
}

/// Cross section of a periodic cylinder: an outer counterclockwise curve and
/// clockwise holes, or a sandbox made of open graph arcs.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    curves: Vec<AnalyticCurve>,
    height: f64,
    sandbox: bool,
    polylines: Vec<Polyline>,
    decomposition: BoundaryDecomposition,
    diameter: f64,
    bounds: (Vec2, Vec2),
}

impl Domain {
    pub fn new(outer: AnalyticCurve, holes: Vec<AnalyticCurve>) -> Result<Self, GeometryError> {
        let mut curves = vec![outer];
        curves.extend(holes);
        for (i, c) in curves.iter().enumerate() {
            if !c.is_closed() {
                return Err(GeometryError::NotClosed { curve: i });
            }
            let want = if i == 0 { Orientation::CounterClockwise } else { Orientation::Clockwise };
            if c.orientation() != want {
                return Err(GeometryError::OrientationMismatch {
                    declared: c.orientation(),
                    area: c.signed_area().unwrap_or(0.0),
                });
            }
        }
        let domain = Self::assemble(curves, false)?;
        domain.check_nesting()?;
        Ok(domain)
    }

    /// Open-arc scene; closed-domain invariants do not apply.
    pub fn sandbox(arcs: Vec<AnalyticCurve>) -> Result<Self, GeometryError> {
        if arcs.is_empty() {
            return Err(GeometryError::EmptySandbox);
        }
        Self::assemble(arcs, true)
    }

    pub fn disk(radius: f64) -> Result<Self, GeometryError> {
        Self::new(AnalyticCurve::circle(Vec2::zeros(), radius, Orientation::CounterClockwise)?, Vec::new())
    }

    /// Concentric annulus.
    pub fn annulus(r_out: f64, r_in: f64) -> Result<Self, GeometryError> {
        Self::new(
            AnalyticCurve::circle(Vec2::zeros(), r_out, Orientation::CounterClockwise)?,
            vec![AnalyticCurve::circle(Vec2::zeros(), r_in, Orientation::Clockwise)?],
        )
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self, GeometryError> {
        Self::new(AnalyticCurve::ellipse(Vec2::zeros(), a, b)?, Vec::new())
    }

    /// Region inside `r = 1 + amplitude cos(lobes theta)`.
    pub fn polar(amplitude: f64, lobes: usize) -> Result<Self, GeometryError> {
        Self::new(AnalyticCurve::polar(amplitude, lobes)?, Vec::new())
    }

    /// Same cross section with axial period `height` (default 1).
    pub fn with_height(mut self, height: f64) -> Result<Self, GeometryError> {
        if !(height > 0.0) || !height.is_finite() {
            return Err(GeometryError::NonPositivePeriod(height));
        }
        self.height = height;
        Ok(self)
    }

    fn assemble(curves: Vec<AnalyticCurve>, sandbox: bool) -> Result<Self, GeometryError> {
        let polylines: Vec<Polyline> = curves.iter().map(Polyline::build).collect();
        let mut lo = Vec2::repeat(f64::INFINITY);
        let mut hi = Vec2::repeat(f64::NEG_INFINITY);
        for pl in &polylines {
            for p in &pl.points {
                lo = lo.inf(p);
                hi = hi.sup(p);
            }
            lo.add_scalar_mut(-pl.sag);
            hi.add_scalar_mut(pl.sag);
        }
        let diameter = if sandbox {
            (hi - lo).norm()
        } else {
            let pts = &polylines[0].points;
            let stride = (pts.len() / 256).max(1);
            let mut d: f64 = 0.0;
            for a in pts.iter().step_by(stride) {
                for b in pts.iter().step_by(stride) {
                    d = d.max((a - b).norm());
                }
            }
            d
        };
        let mut domain = Self {
            curves,
            height: 1.0,
            sandbox,
            polylines,
            decomposition: BoundaryDecomposition { curves: Vec::new(), kappa_tol: KAPPA_TOL },
            diameter,
            bounds: (lo, hi),
        };
        domain.decomposition = decompose_boundary(&domain, KAPPA_TOL)?;
        Ok(domain)
    }

    fn check_nesting(&self) -> Result<(), GeometryError> {
        let floor = 1e-9 * self.diameter;
        for h in 1..self.curves.len() {
            for &tau in &self.polylines[h].taus {
                let x = self.curves[h].point(tau);
                if self.project_onto(0, x).signed_distance > -floor {
                    return Err(GeometryError::HoleOutside { hole: h - 1 });
                }
                for other in 1..self.curves.len() {
                    if other != h && self.project_onto(other, x).signed_distance > -floor {
                        return Err(GeometryError::HolesOverlap { a: h.min(other) - 1, b: h.max(other) - 1 });
                    }
                }
            }
        }
        Ok(())
    }

    /// Boundary curves: outer first, then holes (or sandbox arcs in order).
    pub fn curves(&self) -> &[AnalyticCurve] {
        &self.curves
    }

    pub fn curve(&self, id: usize) -> Result<&AnalyticCurve, GeometryError> {
        self.curves.get(id).ok_or(GeometryError::UnknownCurve(id))
    }

    pub fn outer(&self) -> Option<&AnalyticCurve> {
        (!self.sandbox).then(|| &self.curves[0])
    }

    pub fn holes(&self) -> &[AnalyticCurve] {
        if self.sandbox {
            &[]
        } else {
            &self.curves[1..]
        }
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn is_sandbox(&self) -> bool {
        self.sandbox
    }

    /// Decomposition at the default curvature tolerance, computed once.
    pub fn decomposition(&self) -> &BoundaryDecomposition {
        &self.decomposition
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Axis-aligned bounding box `(min, max)` of the boundary.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        self.bounds
    }

    pub(crate) fn polyline(&self, id: usize) -> &Polyline {
        &self.polylines[id]
    }

    /// Nearest point on curve `id`.
    pub fn project_onto(&self, id: usize, x: Vec2) -> Projection {
        let curve = &self.curves[id];
        let pl = &self.polylines[id];
        let n = pl.points.len();
        let mut order: Vec<usize> = (0..n).collect();
        let k = 3.min(n);
        order.select_nth_unstable_by(k - 1, |&a, &b| {
            (pl.points[a] - x).norm_squared().total_cmp(&(pl.points[b] - x).norm_squared())
        });
        let (lo, hi) = curve.range();
        // d/dtau |x - a|^2 / 2 = -g
        let g = |t: f64| {
            let p = curve.eval(t);
            let r = x - p.pos;
            (r.dot(&p.d1), -p.d1.norm_squared() + r.dot(&p.d2))
        };
        let mut best: Option<(f64, f64)> = None;
        for &i in &order[..k] {
            let t0 = pl.taus[i];
            let (mut a, mut b) = (t0 - pl.step, t0 + pl.step);
            if !pl.closed {
                a = a.max(lo);
                b = b.min(hi);
            }
            let (ga, gb) = (g(a).0, g(b).0);
            let tau = if ga > 0.0 && gb < 0.0 {
                bracketed_root(a, b, g)
            } else {
                // Nearest point at an arc end or outside this bracket.
                [a, t0, b]
                    .into_iter()
                    .min_by(|&s, &t| {
                        (curve.point(s) - x).norm_squared().total_cmp(&(curve.point(t) - x).norm_squared())
                    })
                    .unwrap()
            };
            let d = (curve.point(tau) - x).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((tau, d));
            }
        }
        let (tau, distance) = best.expect("polyline has nodes");
        let tau = curve.canonical(tau);
        let p = curve.eval(tau);
        let interior = pl.closed || (tau > lo + 1e-12 * (hi - lo) && tau < hi - 1e-12 * (hi - lo));
        Projection { curve: id, tau, point: p.pos, distance, signed_distance: (x - p.pos).dot(&p.normal()), interior }
    }

    /// Nearest boundary point over all curves.
    pub fn project(&self, x: Vec2) -> Projection {
        (0..self.curves.len())
            .map(|i| self.project_onto(i, x))
            .min_by(|a, b| a.distance.total_cmp(&b.distance))
            .expect("domain has curves")
    }

    /// Classify `x`, treating points within `tol` of a curve as on it.
    pub fn locate(&self, x: Vec2, tol: f64) -> Location {
        let p = self.project(x);
        if p.distance <= tol {
            return Location::OnBoundary { curve: p.curve, tau: p.tau };
        }
        if self.sandbox {
            return if p.interior && p.signed_distance > 0.0 { Location::Outside } else { Location::Inside };
        }
        let outside = (0..self.curves.len()).any(|i| {
            let q = if i == p.curve { p } else { self.project_onto(i, x) };
            q.signed_distance > 0.0
        });
        if outside {
            Location::Outside
        } else {
            Location::Inside
        }
    }

    /// Whether `x` is in the closure of the domain, with slack `tol`.
    pub fn contains(&self, x: Vec2, tol: f64) -> bool {
        !matches!(self.locate(x, tol), Location::Outside)
    }
}

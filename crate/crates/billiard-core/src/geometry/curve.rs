use alloc::vec;
use alloc::vec::Vec;

use super::GeometryError;
use crate::math::{cross, right_normal, wrap_angle, Vec2, TAU};
use crate::tolerances::REGULARITY_FLOOR;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurveKind {
    Closed,
    OpenArc { lo: f64, hi: f64 },
}

/// Which side of a graph arc `y = p(x)` the domain occupies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphSide {
    Above,
    Below,
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Fourier {
        a0: Vec2,
        cos: Vec<Vec2>,
        sin: Vec<Vec2>,
    },
    /// `a(tau) = (tau, p(tau))`, or `(-tau, p(-tau))` when `flip` is set.
    Graph {
        coeffs: Vec<f64>,
        flip: bool,
    },
}

/// Position and the first three parameter derivatives of a curve.
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub pos: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
    pub d3: Vec2,
}

impl CurvePoint {
    pub fn speed(&self) -> f64 {
        self.d1.norm()
    }

    pub fn tangent(&self) -> Vec2 {
        self.d1 / self.d1.norm()
    }

    pub fn normal(&self) -> Vec2 {
        right_normal(self.d1) / self.d1.norm()
    }

    pub fn curvature(&self) -> f64 {
        let s = self.d1.norm();
        cross(self.d2, self.d1) / (s * s * s)
    }

    /// Parameter derivative of the signed curvature.
    pub fn curvature_rate(&self) -> f64 {
        let s2 = self.d1.norm_squared();
        let s = s2.sqrt();
        cross(self.d3, self.d1) / (s2 * s) - 3.0 * cross(self.d2, self.d1) * self.d1.dot(&self.d2) / (s2 * s2 * s)
    }
}

/// A closed analytic curve given by a truncated Fourier series, or an open
/// polynomial graph arc used by sandbox scenes.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticCurve {
    shape: Shape,
    orientation: Orientation,
    kind: CurveKind,
    d2_bound: f64,
    d3_bound: f64,
}

impl AnalyticCurve {
    /// `a(tau) = a0 + sum_m cos[m] cos(m tau) + sin[m] sin(m tau)`, harmonics
    /// numbered from one. The declared orientation must match the signed area.
    pub fn fourier(a0: Vec2, cos: Vec<Vec2>, sin: Vec<Vec2>, orientation: Orientation) -> Result<Self, GeometryError> {
        if cos.len() != sin.len() {
            return Err(GeometryError::CoefficientMismatch { cos: cos.len(), sin: sin.len() });
        }
        if cos.is_empty() {
            return Err(GeometryError::NoHarmonics);
        }
        let mut d2_bound = 0.0;
        let mut d3_bound = 0.0;
        for (m, (c, s)) in cos.iter().zip(&sin).enumerate() {
            let m = (m + 1) as f64;
            d2_bound += m * m * (c.norm() + s.norm());
            d3_bound += m * m * m * (c.norm() + s.norm());
        }
        let curve =
            Self { shape: Shape::Fourier { a0, cos, sin }, orientation, kind: CurveKind::Closed, d2_bound, d3_bound };
        curve.check_regular()?;
        let area = curve.signed_area().unwrap_or(0.0);
        let found = if area > 0.0 { Orientation::CounterClockwise } else { Orientation::Clockwise };
        if area == 0.0 || found != orientation {
            return Err(GeometryError::OrientationMismatch { declared: orientation, area });
        }
        Ok(curve)
    }

    pub fn circle(center: Vec2, radius: f64, orientation: Orientation) -> Result<Self, GeometryError> {
        let sy = match orientation {
            Orientation::CounterClockwise => radius,
            Orientation::Clockwise => -radius,
        };
        Self::fourier(center, vec![Vec2::new(radius, 0.0)], vec![Vec2::new(0.0, sy)], orientation)
    }

    pub fn ellipse(center: Vec2, a: f64, b: f64) -> Result<Self, GeometryError> {
        Self::fourier(center, vec![Vec2::new(a, 0.0)], vec![Vec2::new(0.0, b)], Orientation::CounterClockwise)
    }

    /// Counterclockwise polar curve `r(theta) = 1 + amplitude cos(lobes theta)`.
    pub fn polar(amplitude: f64, lobes: usize) -> Result<Self, GeometryError> {
        let top = lobes + 1;
        let mut cos = vec![Vec2::zeros(); top.max(1)];
        let mut sin = vec![Vec2::zeros(); top.max(1)];
        let mut a0 = Vec2::zeros();
        cos[0].x += 1.0;
        sin[0].y += 1.0;
        let h = 0.5 * amplitude;
        // cos(k t) cos t = (cos(k+1)t + cos(k-1)t)/2, cos(k t) sin t = (sin(k+1)t - sin(k-1)t)/2
        cos[top - 1].x += h;
        sin[top - 1].y += h;
        match lobes {
            0 => {
                cos[0].x += h;
                sin[0].y += h;
            }
            1 => a0.x += h,
            k => {
                cos[k - 2].x += h;
                sin[k - 2].y -= h;
            }
        }
        Self::fourier(a0, cos, sin, Orientation::CounterClockwise)
    }

    /// Open arc `y = sum_i coeffs[i] x^i` over `x in [lo, hi]` with the
    /// domain on the given side.
    pub fn graph(coeffs: Vec<f64>, lo: f64, hi: f64, side: GraphSide) -> Result<Self, GeometryError> {
        if !(hi > lo) || coeffs.is_empty() {
            return Err(GeometryError::InvalidArc);
        }
        let r = lo.abs().max(hi.abs());
        let mut d2_bound = 0.0;
        let mut d3_bound = 0.0;
        for (i, c) in coeffs.iter().enumerate() {
            let fi = i as f64;
            if i >= 2 {
                d2_bound += c.abs() * fi * (fi - 1.0) * r.powi(i as i32 - 2);
            }
            if i >= 3 {
                d3_bound += c.abs() * fi * (fi - 1.0) * (fi - 2.0) * r.powi(i as i32 - 3);
            }
        }
        let (flip, orientation, kind) = match side {
            GraphSide::Above => (false, Orientation::CounterClockwise, CurveKind::OpenArc { lo, hi }),
            GraphSide::Below => (true, Orientation::Clockwise, CurveKind::OpenArc { lo: -hi, hi: -lo }),
        };
        Ok(Self { shape: Shape::Graph { coeffs, flip }, orientation, kind, d2_bound, d3_bound })
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn is_closed(&self) -> bool {
        matches!(self.kind, CurveKind::Closed)
    }

    /// Number of Fourier harmonics (polynomial degree for graph arcs).
    pub fn harmonics(&self) -> usize {
        match &self.shape {
            Shape::Fourier { cos, .. } => cos.len(),
            Shape::Graph { coeffs, .. } => coeffs.len().saturating_sub(1),
        }
    }

    pub fn fourier_coefficients(&self) -> Option<(Vec2, &[Vec2], &[Vec2])> {
        match &self.shape {
            Shape::Fourier { a0, cos, sin } => Some((*a0, cos, sin)),
            Shape::Graph { .. } => None,
        }
    }

    pub fn graph_coefficients(&self) -> Option<&[f64]> {
        match &self.shape {
            Shape::Graph { coeffs, .. } => Some(coeffs),
            Shape::Fourier { .. } => None,
        }
    }

    /// Parameter range: `[0, 2pi)` for closed curves.
    pub fn range(&self) -> (f64, f64) {
        match self.kind {
            CurveKind::Closed => (0.0, TAU),
            CurveKind::OpenArc { lo, hi } => (lo, hi),
        }
    }

    /// Bounds on `|a''|` and `|a'''|` valid over the whole parameter range.
    pub fn derivative_bounds(&self) -> (f64, f64) {
        (self.d2_bound, self.d3_bound)
    }

    /// Canonical parameter: wrapped into `[0, 2pi)` for closed curves.
    pub fn canonical(&self, tau: f64) -> f64 {
        match self.kind {
            CurveKind::Closed => wrap_angle(tau),
            CurveKind::OpenArc { .. } => tau,
        }
    }

    /// Signed parameter difference `a - b`, periodic for closed curves.
    pub fn param_diff(&self, a: f64, b: f64) -> f64 {
        match self.kind {
            CurveKind::Closed => crate::math::angle_diff(a, b),
            CurveKind::OpenArc { .. } => a - b,
        }
    }

    pub fn eval(&self, tau: f64) -> CurvePoint {
        match &self.shape {
            Shape::Fourier { a0, cos, sin } => {
                let (s1, c1) = tau.sin_cos();
                let (mut sm, mut cm) = (s1, c1);
                let mut p = CurvePoint { pos: *a0, d1: Vec2::zeros(), d2: Vec2::zeros(), d3: Vec2::zeros() };
                for (i, (a, b)) in cos.iter().zip(sin).enumerate() {
                    let m = (i + 1) as f64;
                    let m2 = m * m;
                    p.pos += a * cm + b * sm;
                    p.d1 += (b * cm - a * sm) * m;
                    p.d2 -= (a * cm + b * sm) * m2;
                    p.d3 += (a * sm - b * cm) * (m2 * m);
                    let next_c = cm * c1 - sm * s1;
                    sm = sm * c1 + cm * s1;
                    cm = next_c;
                }
                p
            }
            Shape::Graph { coeffs, flip } => {
                let x = if *flip { -tau } else { tau };
                let mut d = [0.0; 4];
                for &c in coeffs.iter().rev() {
                    d[3] = d[3] * x + d[2];
                    d[2] = d[2] * x + d[1];
                    d[1] = d[1] * x + d[0];
                    d[0] = d[0] * x + c;
                }
                // Horner above accumulates p, p', p''/2, p'''/6.
                let (p, p1, p2, p3) = (d[0], d[1], 2.0 * d[2], 6.0 * d[3]);
                if *flip {
                    CurvePoint {
                        pos: Vec2::new(x, p),
                        d1: Vec2::new(-1.0, -p1),
                        d2: Vec2::new(0.0, p2),
                        d3: Vec2::new(0.0, -p3),
                    }
                } else {
                    CurvePoint {
                        pos: Vec2::new(x, p),
                        d1: Vec2::new(1.0, p1),
                        d2: Vec2::new(0.0, p2),
                        d3: Vec2::new(0.0, p3),
                    }
                }
            }
        }
    }

    pub fn point(&self, tau: f64) -> Vec2 {
        self.eval(tau).pos
    }

    pub fn normal(&self, tau: f64) -> Vec2 {
        self.eval(tau).normal()
    }

    pub fn tangent(&self, tau: f64) -> Vec2 {
        self.eval(tau).tangent()
    }

    /// Signed curvature `(a''_1 a'_3 - a'_1 a''_3)/|a'|^3`.
    pub fn curvature(&self, tau: f64) -> Result<f64, GeometryError> {
        let p = self.eval(tau);
        if p.speed() < REGULARITY_FLOOR * self.scale() {
            return Err(GeometryError::DegenerateParametrization { tau });
        }
        Ok(p.curvature())
    }

    /// Exact enclosed signed area of a closed curve.
    pub fn signed_area(&self) -> Option<f64> {
        match &self.shape {
            Shape::Fourier { cos, sin, .. } => Some(
                core::f64::consts::PI
                    * cos.iter().zip(sin).enumerate().map(|(i, (c, s))| (i + 1) as f64 * cross(*c, *s)).sum::<f64>(),
            ),
            Shape::Graph { .. } => None,
        }
    }

    /// Rough size used to make floors relative.
    pub fn scale(&self) -> f64 {
        match &self.shape {
            Shape::Fourier { cos, sin, .. } => cos.iter().chain(sin).map(|c| c.norm()).sum::<f64>().max(1e-300),
            Shape::Graph { .. } => {
                let (lo, hi) = self.range();
                (hi - lo).max(1e-300)
            }
        }
    }

    /// Dense parameter samples covering the range (endpoint excluded for
    /// closed curves, included for arcs).
    pub fn samples(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.range();
        match self.kind {
            CurveKind::Closed => (0..n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect(),
            CurveKind::OpenArc { .. } => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }

    fn check_regular(&self) -> Result<(), GeometryError> {
        let floor = REGULARITY_FLOOR * self.scale();
        for tau in self.samples(crate::tolerances::KAPPA_SAMPLES.max(64 * self.harmonics())) {
            if self.eval(tau).speed() < floor {
                return Err(GeometryError::DegenerateParametrization { tau });
            }
        }
        Ok(())
    }
}

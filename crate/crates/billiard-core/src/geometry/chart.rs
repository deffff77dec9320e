use super::{AnalyticCurve, CurvePoint, Domain, GeometryError};
use crate::math::Vec2;

/// Nonzero Christoffel symbols of the chart metric. Every symbol with an
/// odd number of `3` indices other than these vanishes, as do `Gamma^3_{13}`
/// and everything involving `g_33`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Christoffel {
    /// `Gamma^1_{11}`
    pub g1_11: f64,
    /// `Gamma^1_{13} = Gamma^1_{31}`
    pub g1_13: f64,
    /// `Gamma^3_{11}`
    pub g3_11: f64,
}

impl Christoffel {
    /// `Gamma^r_{l i}` with indices in `{1, 3}`.
    pub fn symbol(&self, r: usize, l: usize, i: usize) -> f64 {
        match (r, l, i) {
            (1, 1, 1) => self.g1_11,
            (1, 1, 3) | (1, 3, 1) => self.g1_13,
            (3, 1, 1) => self.g3_11,
            _ => 0.0,
        }
    }
}

/// Tubular coordinates `eta(x1, x3) = a(tau_p + x1) + x3 n(tau_p + x1)`
/// anchored at a boundary parameter. `x3 < 0` is inside the domain.
#[derive(Clone, Copy, Debug)]
pub struct LocalChart<'a> {
    curve: &'a AnalyticCurve,
    curve_id: usize,
    tau_p: f64,
    radius: f64,
    reach: f64,
}

/// Chart at parameter `tau_p` of curve `curve_id` with normal validity
/// radius `radius`, which must stay below half the inverse of the maximal
/// curvature magnitude.
pub fn chart(domain: &Domain, curve_id: usize, tau_p: f64, radius: f64) -> Result<LocalChart<'_>, GeometryError> {
    let curve = domain.curve(curve_id)?;
    let kmax = domain.decomposition().curve(curve_id).max_abs_curvature;
    let reach = if kmax > 0.0 { 0.5 / kmax } else { f64::INFINITY };
    if !(radius >= 0.0) || radius > reach * (1.0 + 1e-12) {
        return Err(GeometryError::ReachExceeded { radius, reach });
    }
    Ok(LocalChart { curve, curve_id, tau_p: curve.canonical(tau_p), radius, reach })
}

impl<'a> LocalChart<'a> {
    pub fn curve(&self) -> &'a AnalyticCurve {
        self.curve
    }

    pub fn curve_id(&self) -> usize {
        self.curve_id
    }

    pub fn anchor(&self) -> f64 {
        self.tau_p
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    fn at(&self, x1: f64) -> CurvePoint {
        self.curve.eval(self.tau_p + x1)
    }

    pub fn eta(&self, x1: f64, x3: f64) -> Vec2 {
        let p = self.at(x1);
        p.pos + p.normal() * x3
    }

    /// `(g_11, g_33)`; `g_13` vanishes identically.
    pub fn metric(&self, x1: f64, x3: f64) -> (f64, f64) {
        let p = self.at(x1);
        let f = 1.0 - x3 * p.curvature();
        (p.d1.norm_squared() * f * f, 1.0)
    }

    /// Inner product of the coordinate vectors `d eta/dx1` and `d eta/dx3`.
    pub fn metric_cross_term(&self, x1: f64, x3: f64) -> f64 {
        let (e1, e3) = self.coordinate_frame(x1, x3);
        e1.dot(&e3)
    }

    /// `(d_1 g_11, d_3 g_11)`.
    pub fn metric_derivatives(&self, x1: f64, x3: f64) -> (f64, f64) {
        let p = self.at(x1);
        let k = p.curvature();
        let f = 1.0 - x3 * k;
        let s2 = p.d1.norm_squared();
        let d1 = 2.0 * p.d1.dot(&p.d2) * f * f - 2.0 * s2 * f * x3 * p.curvature_rate();
        let d3 = -2.0 * s2 * k * f;
        (d1, d3)
    }

    /// Christoffel symbols from the diagonal-metric formula
    /// `Gamma^r_{ij} = g^{rr}(d_i g_jr + d_j g_ir - d_r g_ij)/2`.
    pub fn christoffel(&self, x1: f64, x3: f64) -> Christoffel {
        let (g11, _) = self.metric(x1, x3);
        let (d1, d3) = self.metric_derivatives(x1, x3);
        Christoffel { g1_11: 0.5 * d1 / g11, g1_13: 0.5 * d3 / g11, g3_11: -0.5 * d3 }
    }

    /// Coordinate vectors `(d eta/dx1, d eta/dx3)`.
    pub fn coordinate_frame(&self, x1: f64, x3: f64) -> (Vec2, Vec2) {
        let p = self.at(x1);
        (p.d1 * (1.0 - x3 * p.curvature()), p.normal())
    }

    /// Orthonormal frame `(e1, e3)`: unit tangent and outward normal. It is
    /// constant along the normal direction.
    pub fn unit_frame(&self, x1: f64) -> (Vec2, Vec2) {
        let p = self.at(x1);
        (p.tangent(), p.normal())
    }

    /// `(d_1 e1, d_1 e3)` for the orthonormal frame, assembled from the
    /// Christoffel symbols.
    pub fn frame_derivative(&self, x1: f64, x3: f64) -> (Vec2, Vec2) {
        let (e1, e3) = self.unit_frame(x1);
        let (g11, _) = self.metric(x1, x3);
        let sg = g11.sqrt();
        let c = self.christoffel(x1, x3);
        (e3 * (c.g3_11 / sg), e1 * (c.g1_13 * sg))
    }

    /// Velocity components `(v . e1, v . e3)` at chart coordinate `x1`.
    pub fn velocity_components(&self, x1: f64, v: Vec2) -> (f64, f64) {
        let (e1, e3) = self.unit_frame(x1);
        (v.dot(&e1), v.dot(&e3))
    }

    /// Inverse of `eta` for points within the validity radius.
    pub fn coordinates(&self, x: Vec2) -> Result<(f64, f64), GeometryError> {
        let half = match self.curve.kind() {
            super::CurveKind::Closed => core::f64::consts::PI,
            super::CurveKind::OpenArc { lo, hi } => (hi - lo).max(1.0),
        };
        let mut s = 0.0;
        for _ in 0..100 {
            let p = self.at(s);
            let r = x - p.pos;
            let g = r.dot(&p.d1);
            let dg = -p.d1.norm_squared() + r.dot(&p.d2);
            if dg >= 0.0 {
                return Err(GeometryError::OutsideChart);
            }
            let mut step = -g / dg;
            let cap = 0.25 * half;
            if step.abs() > cap {
                step = cap.copysign(step);
            }
            s += step;
            if s.abs() > half {
                return Err(GeometryError::OutsideChart);
            }
            if step.abs() <= 1e-15 * (1.0 + s.abs()) {
                break;
            }
        }
        let p = self.at(s);
        let x3 = (x - p.pos).dot(&p.normal());
        if x3.abs() > self.radius || (x - p.pos - p.normal() * x3).norm() > 1e-9 * (1.0 + x.norm()) {
            return Err(GeometryError::OutsideChart);
        }
        Ok((s, x3))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GraphSide;
    use alloc::vec;

    #[test]
    fn flat_chart_is_euclidean() {
        let line = AnalyticCurve::graph(vec![0.0, 0.0], -1.0, 1.0, GraphSide::Above).unwrap();
        let d = Domain::sandbox(vec![line]).unwrap();
        let c = chart(&d, 0, 0.2, 1.0).unwrap();
        assert_eq!(c.metric(0.1, -0.3), (1.0, 1.0));
        let g = c.christoffel(0.1, -0.3);
        assert_eq!((g.g1_11, g.g1_13, g.g3_11), (0.0, 0.0, 0.0));
    }

    #[test]
    fn unit_circle_metric() {
        let d = Domain::disk(1.0).unwrap();
        let c = chart(&d, 0, 0.0, 0.5).unwrap();
        assert!((c.metric(0.0, -0.5).0 - 0.25).abs() < 1e-15);
        assert!((c.metric(1.3, -0.5).0 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn reach_is_enforced() {
        let d = Domain::ellipse(2.0, 1.0).unwrap();
        // max |kappa| = a/b^2 = 2, so the reach is 0.25
        assert!(chart(&d, 0, 0.0, 0.24).is_ok());
        assert!(matches!(chart(&d, 0, 0.0, 0.3), Err(GeometryError::ReachExceeded { .. })));
    }

    #[test]
    fn boundary_iff_zero_depth() {
        let d = Domain::polar(0.3, 3).unwrap();
        let c = chart(&d, 0, 0.4, 0.05).unwrap();
        for x1 in [-0.3, 0.0, 0.7] {
            let p = c.eta(x1, 0.0);
            assert!(d.project(p).distance < 1e-12);
            assert!((d.project(c.eta(x1, -0.01)).distance - 0.01).abs() < 1e-10);
        }
    }

    #[test]
    fn christoffel_matches_metric_differences() {
        let d = Domain::polar(0.3, 3).unwrap();
        let c = chart(&d, 0, 1.1, 0.05).unwrap();
        let (x1, x3) = (0.2, -0.03);
        let h = 1e-5;
        let g = |a: f64, b: f64| c.metric(a, b).0;
        let d1 = (g(x1 + h, x3) - g(x1 - h, x3)) / (2.0 * h);
        let d3 = (g(x1, x3 + h) - g(x1, x3 - h)) / (2.0 * h);
        let (a1, a3) = c.metric_derivatives(x1, x3);
        assert!((a1 - d1).abs() <= 1e-7 * d1.abs().max(1.0));
        assert!((a3 - d3).abs() <= 1e-7 * d3.abs().max(1.0));
    }

    #[test]
    fn frame_derivative_matches_differences() {
        let d = Domain::ellipse(2.0, 1.0).unwrap();
        let c = chart(&d, 0, 0.3, 0.2).unwrap();
        let h = 1e-6;
        let (t1, n1) = c.unit_frame(0.1 + h);
        let (t0, n0) = c.unit_frame(0.1 - h);
        let (dt, dn) = c.frame_derivative(0.1, -0.1);
        assert!(((t1 - t0) / (2.0 * h) - dt).norm() < 1e-8);
        assert!(((n1 - n0) / (2.0 * h) - dn).norm() < 1e-8);
    }

    #[test]
    fn coordinates_round_trip() {
        let d = Domain::annulus(1.0, 0.3).unwrap();
        let c = chart(&d, 1, 2.0, 0.1).unwrap();
        let (x1, x3) = c.coordinates(c.eta(0.4, -0.07)).unwrap();
        assert!((x1 - 0.4).abs() < 1e-12 && (x3 + 0.07).abs() < 1e-12);
        assert!(c.coordinates(Vec2::new(0.9, 0.0)).is_err());
    }
}

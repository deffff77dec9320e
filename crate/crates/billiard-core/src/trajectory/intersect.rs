//! Ray/boundary intersection.
//!
//! Along a ray `x0 + l u` (unit `u`) every curve reduces to the scalar offset
//! `F(tau) = u x (a(tau) - x0)`, whose zeros are the crossings. The boundary
//! polyline and the global bounds on `|a''|`, `|a'''|` discard segments that
//! cannot contain a zero; on the rest a recursive scan certifies monotone
//! pieces (one bracketed root each) or pieces with a single critical point
//! (two monotone halves plus a possible tangency), bisecting otherwise.

use alloc::vec::Vec;

use super::{TraceError, TraceOptions};
use crate::geometry::{AnalyticCurve, Circle, Domain, Location, BLOCK};
use crate::math::{bracketed_root, bracketed_root_from, cross, Vec2};

/// First boundary hit along a ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exit {
    /// Flight time `distance / |v|`.
    pub time: f64,
    pub distance: f64,
    pub point: Vec2,
    pub curve: usize,
    pub tau: f64,
    /// Certified tangency without a crossing.
    pub touch: bool,
}

/// Smallest positive `s` with `x + s v` on the boundary. A start on the
/// boundary is excluded from the candidates; the ray must then point into
/// the domain or along the boundary.
pub fn first_exit(domain: &Domain, x: Vec2, v: Vec2, opts: &TraceOptions) -> Result<Exit, TraceError> {
    opts.validate()?;
    let speed = v.norm();
    if speed == 0.0 || !speed.is_finite() {
        return Err(TraceError::ZeroVelocity);
    }
    let launch = match domain.locate(x, 1e-10 * domain.diameter()) {
        Location::Outside => return Err(TraceError::OutsideDomain),
        Location::Inside => None,
        Location::OnBoundary { curve, tau } => {
            let n = domain.curves()[curve].normal(tau);
            if v.dot(&n) > opts.eps_grazing * speed {
                return Err(TraceError::PointsOutward);
            }
            Some((curve, tau))
        }
    };
    cast(domain, x, v, launch, opts)?.ok_or(TraceError::NoIntersection)
}

/// Intersection with a known launch point. `None` means the ray escaped,
/// which only happens in sandbox scenes.
pub(crate) fn cast(
    domain: &Domain,
    x0: Vec2,
    w: Vec2,
    launch: Option<(usize, f64)>,
    opts: &TraceOptions,
) -> Result<Option<Exit>, TraceError> {
    let speed = w.norm();
    let u = w / speed;
    let diam = domain.diameter();
    let mut best: Option<Exit> = None;
    let s_min = opts.s_floor * diam;
    for (id, curve) in domain.curves().iter().enumerate() {
        let pl = domain.polyline(id);
        if let Some(circle) = &pl.circle {
            let exclude = launch.and_then(|(lc, lt)| (lc == id).then_some(lt));
            let bound = best.as_ref().map_or(f64::INFINITY, |b| b.distance);
            if let Some((dist, tau, touch)) = circle_hit(circle, x0, u, s_min, opts.touch * diam, bound) {
                if exclude.is_none_or(|lt| curve.param_diff(tau, lt).abs() > opts.tau_window) {
                    let point = curve.point(tau);
                    best = Some(Exit { time: dist / speed, distance: dist, point, curve: id, tau, touch });
                }
            }
            continue;
        }
        let scan = Scan {
            curve,
            x0,
            u,
            b2: curve.derivative_bounds().0,
            b3: curve.derivative_bounds().1,
            touch: opts.touch * diam,
            launch: launch.and_then(|(lc, lt)| (lc == id).then_some(lt)),
            closed: curve.is_closed(),
        };
        let n = pl.points.len();
        let mut roots: Vec<(f64, bool)> = Vec::new();
        let offset = |i: usize| {
            let r = pl.points[i] - x0;
            (cross(u, r), u.dot(&r))
        };
        for (block, &(center, radius)) in pl.blocks.iter().enumerate() {
            let r = center - x0;
            let along = u.dot(&r);
            if cross(u, r).abs() > radius
                || along + radius < s_min
                || best.as_ref().is_some_and(|b| along - radius > b.distance)
            {
                continue;
            }
            let first = block * BLOCK;
            let (mut fa, mut la) = offset(first);
            for i in first..(first + BLOCK).min(pl.segments()) {
                let (fb, lb) = offset((i + 1) % n);
                let (f0, l0) = (fa, la);
                fa = fb;
                la = lb;
                if l0.max(lb) + pl.sag < s_min
                    || best.as_ref().is_some_and(|b| l0.min(lb) - pl.sag > b.distance)
                    || (f0 * fb > 0.0 && f0.abs().min(fb.abs()) > pl.sag)
                {
                    continue;
                }
                let (a, b) = pl.segment(i);
                roots.clear();
                scan.run(a, b, 0, &mut roots);
                for &(tau, touch) in &roots {
                    if let Some((lc, lt)) = launch {
                        if lc == id && curve.param_diff(tau, lt).abs() <= opts.tau_window {
                            continue;
                        }
                    }
                    let p = curve.point(tau);
                    let dist = u.dot(&(p - x0));
                    if dist <= s_min || best.as_ref().is_some_and(|b| dist >= b.distance) {
                        continue;
                    }
                    best = Some(Exit {
                        time: dist / speed,
                        distance: dist,
                        point: p,
                        curve: id,
                        tau: curve.canonical(tau),
                        touch,
                    });
                }
            }
        }
    }
    match best {
        Some(hit) => Ok(Some(hit)),
        None if domain.is_sandbox() => Ok(None),
        None => Err(TraceError::NoIntersection),
    }
}

/// Nearest crossing of the ray with a circle beyond `s_min` and before
/// `bound`, as `(distance, parameter, tangency)`.
fn circle_hit(c: &Circle, x0: Vec2, u: Vec2, s_min: f64, touch: f64, bound: f64) -> Option<(f64, f64, bool)> {
    let d = x0 - c.center;
    let b = u.dot(&d);
    let offset = cross(u, d).abs();
    if offset > c.radius + touch {
        return None;
    }
    if (offset - c.radius).abs() <= touch {
        let dist = -b;
        let p = x0 + u * dist;
        return (dist > s_min && dist < bound).then(|| (dist, c.param(p), true));
    }
    // stable roots of l^2 + 2 b l + (|d|^2 - r^2) = 0
    let k = (d.norm() - c.radius) * (d.norm() + c.radius);
    let disc = ((c.radius - offset) * (c.radius + offset)).sqrt();
    let q = -b - disc.copysign(b);
    let (r1, r2) = if q != 0.0 { (q, k / q) } else { (disc, -disc) };
    let (near, far) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
    let dist = if near > s_min {
        near
    } else if far > s_min {
        far
    } else {
        return None;
    };
    if dist >= bound {
        return None;
    }
    Some((dist, c.param(x0 + u * dist), false))
}

struct Scan<'a> {
    curve: &'a AnalyticCurve,
    x0: Vec2,
    u: Vec2,
    b2: f64,
    b3: f64,
    touch: f64,
    /// Launch parameter when the ray starts on this curve.
    launch: Option<f64>,
    closed: bool,
}

impl Scan<'_> {
    fn f(&self, t: f64) -> f64 {
        cross(self.u, self.curve.point(t) - self.x0)
    }

    fn f_df(&self, t: f64) -> (f64, f64) {
        let p = self.curve.eval(t);
        (cross(self.u, p.pos - self.x0), cross(self.u, p.d1))
    }

    fn df_ddf(&self, t: f64) -> (f64, f64) {
        let p = self.curve.eval(t);
        (cross(self.u, p.d1), cross(self.u, p.d2))
    }

    fn run(&self, a: f64, b: f64, depth: u32, out: &mut Vec<(f64, bool)>) {
        let h = b - a;
        let m = 0.5 * (a + b);
        let (d1, d2) = self.df_ddf(m);
        if d1.abs() > 0.5 * self.b2 * h {
            self.monotone(a, b, out);
        } else if d2.abs() > 0.5 * self.b3 * h {
            let (da, db) = (self.df_ddf(a).0, self.df_ddf(b).0);
            if da * db > 0.0 {
                self.monotone(a, b, out);
                return;
            }
            let c = bracketed_root(a, b, |t| self.df_ddf(t));
            if self.f(c).abs() <= self.touch {
                // a crossing pair inside the clearance is one tangency
                out.push((c, true));
            } else {
                self.monotone(a, c, out);
                self.monotone(c, b, out);
            }
        } else if depth < 50 {
            self.run(a, m, depth + 1, out);
            self.run(m, b, depth + 1, out);
        } else if self.f(m).abs() <= self.touch {
            out.push((m, true));
        }
    }

    fn monotone(&self, a: f64, b: f64, out: &mut Vec<(f64, bool)>) {
        // a monotone piece has one zero at most, and the launch point is one
        if let Some(t0) = self.launch {
            let within = |t: f64| t >= a && t <= b;
            if within(t0) || (self.closed && within(t0 + crate::math::TAU)) {
                return;
            }
        }
        let (fa, fb) = (self.f(a), self.f(b));
        if fa == 0.0 {
            out.push((a, false));
        } else if fb == 0.0 {
            out.push((b, false));
        } else if (fa < 0.0) != (fb < 0.0) {
            out.push((bracketed_root_from(a, b, fa, fb, |t| self.f_df(t)), false));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AnalyticCurve, GraphSide};
    use alloc::vec;

    fn opts() -> TraceOptions {
        TraceOptions::forward()
    }

    #[test]
    fn disk_from_center() {
        let d = Domain::disk(1.0).unwrap();
        let e = first_exit(&d, Vec2::zeros(), Vec2::new(1.0, 0.0), &opts()).unwrap();
        assert!((e.time - 1.0).abs() < 1e-14);
        assert!((e.point - Vec2::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn disk_from_boundary() {
        let d = Domain::disk(1.0).unwrap();
        let e = first_exit(&d, Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), &opts()).unwrap();
        assert!((e.time - 2.0).abs() < 1e-14);
        assert!((e.point - Vec2::new(-1.0, 0.0)).norm() < 1e-14);
        assert_eq!(first_exit(&d, Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0), &opts()), Err(TraceError::PointsOutward));
    }

    #[test]
    fn parabola_hit() {
        let arc = AnalyticCurve::graph(vec![0.0, 0.0, 0.5], -1.0, 1.5, GraphSide::Above).unwrap();
        let d = Domain::sandbox(vec![arc]).unwrap();
        let e = first_exit(&d, Vec2::new(1.0, 1.0), Vec2::new(-1.0, -1.0), &opts()).unwrap();
        assert!(e.point.norm() < 1e-12);
        assert!((e.distance - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn annulus_hole_blocks() {
        let d = Domain::annulus(1.0, 0.3).unwrap();
        let e = first_exit(&d, Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), &opts()).unwrap();
        assert_eq!(e.curve, 1);
        assert!((e.distance - 0.7).abs() < 1e-14);
        // passes above the hole
        let e = first_exit(&d, Vec2::new(0.9, 0.31), Vec2::new(-1.0, 0.0), &opts()).unwrap();
        assert_eq!(e.curve, 0);
    }

    #[test]
    fn tangent_to_hole_is_a_touch() {
        let d = Domain::annulus(1.0, 0.3).unwrap();
        let x = Vec2::new(0.5, 0.3);
        let e = first_exit(&d, x, Vec2::new(-1.0, 0.0), &opts()).unwrap();
        assert_eq!(e.curve, 1);
        assert!(e.touch);
        assert!((e.point - Vec2::new(0.0, 0.3)).norm() < 1e-7);
    }

    #[test]
    fn residual_is_small_on_polar_curve() {
        let d = Domain::polar(0.3, 3).unwrap();
        for i in 0..50 {
            let a = i as f64 * 0.37;
            let x = Vec2::new(0.2 * (0.3 * a).cos(), 0.2 * (0.7 * a).sin());
            let v = Vec2::new(a.cos(), a.sin());
            let e = first_exit(&d, x, v, &opts()).unwrap();
            let off = cross(v, e.point - x).abs();
            assert!(off < 1e-11 * d.diameter(), "{off}");
            // nothing closer: sample the chord interior
            for j in 1..100 {
                let p = x + v * (e.time * j as f64 / 100.0);
                assert!(d.contains(p, 1e-12));
            }
        }
    }

    #[test]
    fn circle_path_matches_general_scan() {
        use crate::geometry::Orientation;
        let exact = Domain::annulus(1.0, 0.3).unwrap();
        // a phase-shifted parametrization is not recognized as a circle
        let rotated = |r: f64, o: Orientation| {
            let (s, c) = 0.4f64.sin_cos();
            let sy = if o == Orientation::Clockwise { -1.0 } else { 1.0 };
            AnalyticCurve::fourier(
                Vec2::zeros(),
                vec![Vec2::new(r * c, sy * r * s)],
                vec![Vec2::new(-r * s, sy * r * c)],
                o,
            )
            .unwrap()
        };
        let general =
            Domain::new(rotated(1.0, Orientation::CounterClockwise), vec![rotated(0.3, Orientation::Clockwise)])
                .unwrap();
        assert!(general.polyline(0).circle.is_none() && exact.polyline(0).circle.is_some());
        for i in 0..200 {
            let a = i as f64 * 0.731;
            let r = 0.35 + 0.6 * ((i as f64 * 0.377).sin() * 0.5 + 0.5);
            let x = Vec2::new(r * a.cos(), r * a.sin());
            let v = Vec2::new((1.3 * a).cos(), (1.3 * a).sin());
            let e1 = first_exit(&exact, x, v, &opts()).unwrap();
            let e2 = first_exit(&general, x, v, &opts()).unwrap();
            assert_eq!(e1.curve, e2.curve);
            assert!((e1.point - e2.point).norm() < 1e-12, "{i}");
            assert!((e1.time - e2.time).abs() < 1e-12);
        }
    }
}

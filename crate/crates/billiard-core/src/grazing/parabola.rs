use alloc::vec;
use alloc::vec::Vec;

use super::{GrazingError, GrazingFamily, LaunchSign};
use crate::geometry::{AnalyticCurve, Domain, GraphSide};
use crate::math::{lift, Vec2};
use crate::trajectory::{Horizon, PhasePoint, TraceOptions};

/// Point every reflected chord of the example passes through.
pub const STICKY_TARGET: [f64; 2] = [1.0, 1.0];

/// Abscissa `delta_*` where the line `y = (1 + delta)(x - 1) + 1` meets
/// `y = x^2 / 2`: `(1 + delta) - sqrt((1 + delta)^2 - 2 delta)`, evaluated
/// in the rationalized form.
pub fn delta_star(delta: f64) -> f64 {
    let q = (1.0 + delta) * (1.0 + delta) - 2.0 * delta;
    2.0 * delta / ((1.0 + delta) + q.sqrt())
}

/// Slope `L(delta)` of the chord through `(delta_*, delta_*^2 / 2)` that
/// reflects into the line of slope `1 + delta`.
pub fn reflected_slope(delta: f64) -> f64 {
    jet(delta).l
}

struct Jet {
    s: f64,
    ds: f64,
    l: f64,
    dl: f64,
}

/// `delta_*`, `L` and their first derivatives in closed form. With
/// `r = sqrt(1 + delta^2)`, `delta_* = 1 + delta - r`.
fn jet(delta: f64) -> Jet {
    let r = (1.0 + delta * delta).sqrt();
    let dr = delta / r;
    let s = delta_star(delta);
    let ds = 1.0 - dr;
    let n = (1.0 + delta) * (1.0 + s * s) - 2.0 * r;
    let dn = (1.0 + s * s) + (1.0 + delta) * 2.0 * s * ds - 2.0 * dr;
    let d = 1.0 + s * s + 2.0 * s * r;
    let dd = 2.0 * s * ds + 2.0 * ds * r + 2.0 * s * dr;
    Jet { s, ds, l: n / d, dl: (dn * d - n * dd) / (d * d) }
}

/// `G(delta) = -L delta_* + delta_*^2 / 2`, the intercept condition, and
/// `-G' / L'`.
fn intercept(j: &Jet) -> (f64, f64) {
    let g = -j.l * j.s + 0.5 * j.s * j.s;
    (g, j.s + (j.l - j.s) * j.ds / j.dl)
}

/// How the boundary arc is produced from the tangency conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArcConstruction {
    /// Envelope of the chords: `X = -G'/L'`, `Y = G + L X`. This fixes
    /// `X(0) = -1/3`.
    Envelope,
    /// RK4 integration of `X' = -G'/L'`, `Y' = L X'` from
    /// `(x0, -x0)`. Its tangent lines are parallel to the chords but miss
    /// them unless the arc coincides with the envelope.
    Integrated { x0: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcSample {
    pub delta: f64,
    pub delta_star: f64,
    /// Tangent slope `Y'/X' = L(delta)`.
    pub slope: f64,
    pub point: Vec2,
    /// Signed distance from `point` to the chord of slope `L` through the
    /// hit `(delta_*, delta_*^2/2)`; zero on the envelope.
    pub chord_offset: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StickyExample {
    pub construction: ArcConstruction,
    pub arc: Vec<ArcSample>,
    /// Sandbox scene with the parabola `y = x^2/2` on `[-1, 1.5]`.
    pub domain: Domain,
}

impl StickyExample {
    /// `X(0)` the envelope forces.
    pub const ENVELOPE_X0: f64 = -1.0 / 3.0;

    /// Forward cycles launched from every arc sample along its tangent,
    /// towards the parabola, with cross-section speed `speed`.
    pub fn family(&self, speed: f64, length: f64) -> Result<GrazingFamily, GrazingError> {
        let phases = self.arc.iter().map(|a| {
            let dir = Vec2::new(1.0, a.slope).normalize();
            PhasePoint::new(lift(a.point, 0.0), lift(dir * speed, 0.0), 0.0)
        });
        GrazingFamily::from_phases(
            &self.domain,
            phases,
            LaunchSign::Plus,
            &TraceOptions::forward().with_horizon(Horizon::Length(length)),
        )
    }

    /// `(d/d delta)(Y'/X')` from the samples by central differences of the
    /// chord slopes between neighbours.
    pub fn slope_rates(&self) -> Vec<f64> {
        let slopes: Vec<(f64, f64)> = self
            .arc
            .windows(2)
            .map(|w| (0.5 * (w[0].delta + w[1].delta), (w[1].point.y - w[0].point.y) / (w[1].point.x - w[0].point.x)))
            .collect();
        slopes.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect()
    }
}

const SUBSTEPS: usize = 16;

/// Boundary arc `(X(delta), Y(delta))`, `delta in [0, delta_max]` on
/// `samples` uniform points, whose tangent chords reflect off `y = x^2/2`
/// through `(1, 1)`.
pub fn build_sticky_example(
    delta_max: f64,
    samples: usize,
    construction: ArcConstruction,
) -> Result<StickyExample, GrazingError> {
    if !(delta_max > 0.0 && delta_max < 0.5) {
        return Err(GrazingError::InvalidInput("delta_max must lie in (0, 0.5)"));
    }
    if samples < 2 {
        return Err(GrazingError::InvalidInput("need at least two samples"));
    }
    let deltas: Vec<f64> = (0..samples).map(|i| delta_max * i as f64 / (samples - 1) as f64).collect();
    let rate = |delta: f64| -> Result<(f64, f64), GrazingError> {
        let j = jet(delta);
        if !(j.dl > 0.0) {
            return Err(GrazingError::StepFailure { delta });
        }
        let x = intercept(&j).1;
        Ok((x, j.l * x))
    };
    let mut points = Vec::with_capacity(samples);
    match construction {
        ArcConstruction::Envelope => {
            for &delta in &deltas {
                let j = jet(delta);
                if !(j.dl > 0.0) {
                    return Err(GrazingError::StepFailure { delta });
                }
                let (g, x) = intercept(&j);
                points.push(Vec2::new(x, g + j.l * x));
            }
        }
        ArcConstruction::Integrated { x0 } => {
            if !(x0 < 0.0) {
                return Err(GrazingError::InvalidInput("X(0) must be negative"));
            }
            let mut p = Vec2::new(x0, -x0);
            points.push(p);
            for w in deltas.windows(2) {
                let h = (w[1] - w[0]) / SUBSTEPS as f64;
                for i in 0..SUBSTEPS {
                    let d = w[0] + h * i as f64;
                    // the right-hand side does not depend on the state
                    let (k1, k2, k4) = (rate(d)?, rate(d + 0.5 * h)?, rate(d + h)?);
                    p.x += h / 6.0 * (k1.0 + 4.0 * k2.0 + k4.0);
                    p.y += h / 6.0 * (k1.1 + 4.0 * k2.1 + k4.1);
                }
                points.push(p);
            }
        }
    }
    let arc = deltas
        .iter()
        .zip(points)
        .map(|(&delta, point)| {
            let j = jet(delta);
            let hit = Vec2::new(j.s, 0.5 * j.s * j.s);
            let chord_offset = ((point.y - hit.y) - j.l * (point.x - hit.x)) / (1.0 + j.l * j.l).sqrt();
            ArcSample { delta, delta_star: j.s, slope: j.l, point, chord_offset }
        })
        .collect();
    let parabola = AnalyticCurve::graph(vec![0.0, 0.0, 0.5], -1.0, 1.5, GraphSide::Above)?;
    Ok(StickyExample { construction, arc, domain: Domain::sandbox(vec![parabola])? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grazing::{detect_sticky, Verdict};

    #[test]
    fn closed_forms_at_zero() {
        assert_eq!(delta_star(0.0), 0.0);
        assert_eq!(reflected_slope(0.0), -1.0);
        assert!((delta_star(0.05) - (1.05 - 1.0025f64.sqrt())).abs() < 1e-15);
        assert!((delta_star(0.05) - 0.0487508).abs() < 1e-7);
    }

    #[test]
    fn slope_is_the_specular_reflection() {
        for delta in [0.003, 0.02, 0.05, 0.2] {
            let s = delta_star(delta);
            // reflect the incoming direction (1, 1 + delta) off the tangent (1, s)
            let t = Vec2::new(1.0, s).normalize();
            let v = Vec2::new(1.0, 1.0 + delta);
            let r = t * (2.0 * v.dot(&t)) - v;
            assert!((r.y / r.x - reflected_slope(delta)).abs() < 1e-14, "{delta}");
        }
    }

    #[test]
    fn slope_derivative_matches_differences() {
        for delta in [0.0, 0.01, 0.04] {
            let h = 1e-5;
            let fd = (reflected_slope(delta + h) - reflected_slope(delta - h)) / (2.0 * h);
            assert!((jet(delta).dl - fd).abs() < 1e-8);
        }
        assert!((jet(0.0).dl - 3.0).abs() < 1e-15);
    }

    #[test]
    fn envelope_starts_on_the_reflected_ray() {
        let ex = build_sticky_example(0.05, 200, ArcConstruction::Envelope).unwrap();
        let a0 = ex.arc[0];
        assert!((a0.point.x - StickyExample::ENVELOPE_X0).abs() < 1e-15);
        assert!((a0.point.x + a0.point.y).abs() < 1e-15);
        assert!(ex.arc.iter().all(|a| a.chord_offset.abs() < 1e-14));
        assert!(ex.slope_rates().iter().all(|&r| r > 0.0));
    }

    #[test]
    fn envelope_family_is_sticky() {
        let ex = build_sticky_example(0.05, 200, ArcConstruction::Envelope).unwrap();
        let f = ex.family(1.0, 4.0).unwrap();
        let r = detect_sticky(&f, 1, 1e-6).unwrap();
        assert_eq!(r.verdict, Verdict::Sticky);
        assert!((r.point.unwrap() - Vec2::from(STICKY_TARGET)).norm() < 1e-9);
    }

    #[test]
    fn integrated_arc_is_parallel_but_off_the_chords() {
        let ex = build_sticky_example(0.05, 200, ArcConstruction::Integrated { x0: -1.0 }).unwrap();
        assert_eq!(ex.arc[0].point, Vec2::new(-1.0, 1.0));
        assert!(ex.arc.last().unwrap().chord_offset.abs() > 1e-2);
        let f = ex.family(1.0, 6.0).unwrap();
        let r = detect_sticky(&f, 1, 1e-6).unwrap();
        assert_ne!(r.verdict, Verdict::Sticky);
    }

    #[test]
    fn bad_inputs() {
        assert!(build_sticky_example(0.05, 1, ArcConstruction::Envelope).is_err());
        assert!(build_sticky_example(-0.1, 10, ArcConstruction::Envelope).is_err());
        assert!(build_sticky_example(0.05, 10, ArcConstruction::Integrated { x0: 0.5 }).is_err());
    }
}

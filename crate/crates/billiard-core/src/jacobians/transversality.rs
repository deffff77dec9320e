//! Speed/direction splitting of the cross-section velocity,
//! `v = |v| (v^_1, +-sqrt(1 - v^_1^2))`, and the transversality of the
//! backward characteristic with respect to those two variables.

use alloc::vec::Vec;

use super::bounce::derivatives;
use super::global::analytic_rows;
use super::{richardson, Frame, JacobianError, JacobianOptions};
use crate::axial_cross;
use crate::geometry::Domain;
use crate::math::{section, Vec2};
use crate::trajectory::{trace_cycles, Horizon, PhasePoint, SpecularCycle};

/// Orthonormal pair along and across the velocity leaving a bounce.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpecularBasis {
    /// `v / |v|`
    pub e0: Vec2,
    /// `(v3, -v1) / |v|`
    pub perp: Vec2,
}

impl SpecularBasis {
    pub fn new(v: Vec2) -> Self {
        let s = v.norm();
        Self { e0: v / s, perp: Vec2::new(v.y, -v.x) / s }
    }
}

/// Lower-triangular matrix `[[s1, 0], [s2, s3]]` taking chart derivatives
/// `(d x1^k, d v^_1^k)` to components across the velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionMatrix {
    pub index: usize,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl TransitionMatrix {
    pub fn det(&self) -> f64 {
        self.s1 * self.s3
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionData {
    pub basis: SpecularBasis,
    pub matrix: TransitionMatrix,
    pub r1: f64,
    pub r2: f64,
    /// `d x1^k / d v^_1`, analytic and finite-difference.
    pub dx1: (f64, f64),
    /// `d v^_1^k / d v^_1`, analytic and finite-difference.
    pub dv1: (f64, f64),
    /// `sqrt(g_11) |v3^k| / |v|`, which `|s1|` must equal.
    pub s1_identity: f64,
    /// `|v| / |v3^k|`, which `|s3|` must equal.
    pub s3_identity: f64,
    /// `max(|r1|, |r2|)` exceeds the configured floor.
    pub above_floor: bool,
    /// Bounce time `t^k` and the cross-section speed.
    pub t_k: f64,
    pub speed: f64,
}

/// Backward cycle with exactly `k` transversal bounces.
fn bounces(
    domain: &Domain,
    phase: &PhasePoint,
    k: usize,
    opts: &JacobianOptions,
) -> Result<SpecularCycle, JacobianError> {
    let cycle = trace_cycles(domain, phase, &opts.trace.with_cap(k.max(1)).with_horizon(Horizon::Unbounded))?;
    if let Some(e) = &cycle.failure {
        return Err(e.clone().into());
    }
    if cycle.events.len() < k {
        return Err(JacobianError::MissingBounce(cycle.events.len() + 1));
    }
    for e in &cycle.events[..k] {
        if e.class.is_grazing() || e.incidence <= opts.trace.eps_grazing * section(e.post).norm() {
            return Err(JacobianError::GrazingAtBounce(e.index));
        }
    }
    Ok(cycle)
}

fn same_route(a: &SpecularCycle, b: &SpecularCycle, k: usize) -> Result<(), JacobianError> {
    let route = |c: &SpecularCycle| c.events.iter().take(k).map(|e| e.curve).collect::<Vec<_>>();
    if b.events.len() < k || route(a) != route(b) || b.events[..k].iter().any(|e| e.class.is_grazing()) {
        return Err(JacobianError::CombinatoricsChanged);
    }
    Ok(())
}

/// The phase with speed and direction replaced.
pub(crate) fn respeed(phase: &PhasePoint, speed: f64, hat1: f64) -> PhasePoint {
    let v = phase.velocity();
    let hat3 = (1.0 - hat1 * hat1).max(0.0).sqrt().copysign(v.y);
    PhasePoint { v: crate::math::lift(Vec2::new(hat1, hat3) * speed, phase.v.y), ..*phase }
}

/// Analytic `d(x1^k, v1^k, v3^k) / d(v1, v3)` along a backward cycle.
fn chain_velocity_rows(
    domain: &Domain,
    phase: &PhasePoint,
    cycle: &SpecularCycle,
    k: usize,
) -> Result<[[f64; 2]; 3], JacobianError> {
    let v = phase.velocity();
    let first = &cycle.events[0];
    let f1 = Frame::of(domain, first)?;
    let rows = analytic_rows(&f1, v, phase.t - first.t);
    // post-reflection components: v3 flips sign
    let mut m = [[rows[1][2], rows[1][3]], [rows[2][2], rows[2][3]], [-rows[3][2], -rows[3][3]]];
    let mut prev = f1;
    for i in 1..k {
        let next = Frame::of(domain, &cycle.events[i])?;
        let block = derivatives(&prev, &next, section(cycle.events[i - 1].post)).block();
        m = core::array::from_fn(|r| core::array::from_fn(|j| (0..3).map(|l| block[r][l] * m[l][j]).sum()));
        prev = next;
    }
    Ok(m)
}

/// Specular basis, transition matrix and the transversality components
/// `(r1, r2)` at bounce `k >= 1` of the backward cycle through `phase`.
pub fn transition_data(
    domain: &Domain,
    phase: &PhasePoint,
    k: usize,
    rho_floor: f64,
    opts: &JacobianOptions,
) -> Result<TransitionData, JacobianError> {
    if k == 0 {
        return Err(JacobianError::MissingBounce(1));
    }
    let v = phase.velocity();
    let speed = v.norm();
    if v.y == 0.0 {
        return Err(JacobianError::HypothesisViolated("v3 must not vanish"));
    }
    let cycle = bounces(domain, phase, k, opts)?;
    let m = chain_velocity_rows(domain, phase, &cycle, k)?;
    let (h1, h3) = (v.x / speed, v.y / speed);
    // d/d v^_1 = |v| (d/dv1 - (v^_1 / v^_3) d/dv3)
    let along = |row: [f64; 2]| speed * (row[0] - h1 / h3 * row[1]);
    let dx1 = along(m[0]);
    let dv1 = along(m[1]) / speed;

    let ek = &cycle.events[k - 1];
    let f = Frame::of(domain, ek)?;
    let vk = section(ek.post);
    let basis = SpecularBasis::new(vk);
    let (w1, w3) = (vk.dot(&f.e1) / speed, vk.dot(&f.e3) / speed);
    let matrix = TransitionMatrix {
        index: k,
        s1: f.d1.dot(&basis.perp),
        s2: (f.de1 * w1 + f.de3 * w3).dot(&basis.perp),
        s3: (f.e1 - f.e3 * (w1 / w3)).dot(&basis.perp),
    };
    let r1 = matrix.s1 * dx1;
    let r2 = matrix.s2 * dx1 + matrix.s3 * dv1;

    let route = |hat: f64| -> Result<[f64; 2], JacobianError> {
        let p = respeed(phase, speed, hat);
        let c = bounces(domain, &p, k, opts)?;
        same_route(&cycle, &c, k)?;
        let e = &c.events[k - 1];
        let curve = &domain.curves()[e.curve];
        Ok([curve.param_diff(e.tau, f.tau), section(e.post).dot(&curve.tangent(e.tau)) / speed])
    };
    let [dx1_fd, dv1_fd] = richardson(opts.step, |d| route(h1 + d))?;

    Ok(TransitionData {
        basis,
        matrix,
        r1,
        r2,
        dx1: (dx1, dx1_fd),
        dv1: (dv1, dv1_fd),
        s1_identity: f.sqrt_g * (w3 * speed).abs() / speed,
        s3_identity: speed / (w3 * speed).abs(),
        above_floor: r1.abs().max(r2.abs()) > rho_floor,
        t_k: ek.t,
        speed,
    })
}

/// `d_|v| X(s) x d_v^_1 X(s)` for the backward characteristic through
/// `phase`, as the determinant in the specular basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transversality {
    /// Number of bounces in `(s, t)`.
    pub bounces: usize,
    pub analytic: f64,
    pub fd: f64,
    /// `(r1, r2, t^k)` when `bounces > 0`.
    pub components: Option<(f64, f64, f64)>,
}

/// Transversality product at time `s < t`.
pub fn transversality_product(
    domain: &Domain,
    phase: &PhasePoint,
    s: f64,
    opts: &JacobianOptions,
) -> Result<Transversality, JacobianError> {
    let t = phase.t;
    let v = phase.velocity();
    let speed = v.norm();
    if v.y == 0.0 {
        return Err(JacobianError::HypothesisViolated("v3 must not vanish"));
    }
    let horizon = opts.trace.with_horizon(Horizon::Time(t - s));
    let cycle = trace_cycles(domain, phase, &horizon)?;
    if let Some(e) = &cycle.failure {
        return Err(e.clone().into());
    }
    let k = cycle.events.len();
    if let Some(e) = cycle.events.iter().find(|e| e.class.is_grazing()) {
        return Err(JacobianError::GrazingAtBounce(e.index));
    }
    let (analytic, components) = if k == 0 {
        let h3 = v.y / speed;
        ((t - s) * (t - s) * speed / h3, None)
    } else {
        let d = transition_data(domain, phase, k, 0.0, opts)?;
        (-(t - s) * (d.r1 - (d.t_k - s) * speed * d.r2), Some((d.r1, d.r2, d.t_k)))
    };

    let (h1, _) = (v.x / speed, v.y / speed);
    let at = |p: PhasePoint| -> Result<[f64; 2], JacobianError> {
        let c = trace_cycles(domain, &p, &horizon)?;
        if c.events.len() != k {
            return Err(JacobianError::CombinatoricsChanged);
        }
        same_route(&cycle, &c, k)?;
        let (x, _) = c.state_at(s).ok_or(JacobianError::CombinatoricsChanged)?;
        Ok([x.x, x.y])
    };
    let d_speed = richardson(opts.step * speed, |d| at(respeed(phase, speed + d, h1)))?;
    let d_hat = richardson(opts.step, |d| at(respeed(phase, speed, h1 + d)))?;
    let fd = axial_cross(Vec2::from(d_speed), Vec2::from(d_hat));
    Ok(Transversality { bounces: k, analytic, fd, components })
}

/// Affine form `b s~ + c` in `s~ = t - s` whose zero locates the times at
/// which the transversality product vanishes, with the excluded windows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalTimes {
    pub t: f64,
    pub b: f64,
    pub c: f64,
    /// `-c / b` when `|b|` clears the floor.
    pub phi1: Option<f64>,
    /// `1{|b| > |c|/4} (-c / b)` when `|c|` clears the floor.
    pub phi2: Option<f64>,
    /// Exclusion half-width in `s~`.
    pub half_width: f64,
}

impl CriticalTimes {
    pub fn from_coefficients(t: f64, b: f64, c: f64, half_width: f64, floor: f64) -> Result<Self, JacobianError> {
        let (b_ok, c_ok) = (b.abs() > floor, c.abs() > floor);
        if !b_ok && !c_ok {
            return Err(JacobianError::BothCoefficientsTiny);
        }
        let phi1 = b_ok.then(|| -c / b);
        let phi2 = c_ok.then(|| if b.abs() > c.abs() / 4.0 { -c / b } else { 0.0 });
        Ok(Self { t, b, c, phi1, phi2, half_width })
    }

    /// Critical time `t - phi` of the active case: `phi1` when `b` clears
    /// the floor, `phi2` otherwise.
    pub fn psi(&self) -> f64 {
        self.t - self.phi()
    }

    fn phi(&self) -> f64 {
        self.phi1.or(self.phi2).expect("one coefficient clears the floor")
    }

    pub fn value(&self, s_tilde: f64) -> f64 {
        self.b * s_tilde + self.c
    }

    /// Whether `s~` lies in the excluded window.
    pub fn excluded(&self, s_tilde: f64) -> bool {
        (s_tilde - self.phi()).abs() <= self.half_width
    }

    /// Lower bound on `|b s~ + c|` outside the window (and `|s~| <= 1` in
    /// the constant-dominated case).
    pub fn bound(&self) -> f64 {
        if self.phi1.is_some() {
            self.b.abs() * self.half_width
        } else {
            (self.c.abs() / 2.0).min(self.c.abs() * self.half_width / 4.0)
        }
    }
}

/// Critical times for the segment after bounce `k` of the backward cycle
/// through `phase`: `b = |v| r2`, `c = -r1 + (t^k - t) |v| r2`.
pub fn critical_times(
    domain: &Domain,
    phase: &PhasePoint,
    k: usize,
    half_width: f64,
    floor: f64,
    opts: &JacobianOptions,
) -> Result<CriticalTimes, JacobianError> {
    let d = transition_data(domain, phase, k, floor, opts)?;
    let b = d.speed * d.r2;
    let c = -d.r1 + (d.t_k - phase.t) * d.speed * d.r2;
    CriticalTimes::from_coefficients(phase.t, b, c, half_width, floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;

    fn phase(x: (f64, f64), v: (f64, f64)) -> PhasePoint {
        PhasePoint::new(Vec3::new(x.0, 0.0, x.1), Vec3::new(v.0, 0.0, v.1), 0.0)
    }

    #[test]
    fn basis_is_orthonormal() {
        let b = SpecularBasis::new(Vec2::new(0.3, -1.7));
        assert!((b.e0.norm() - 1.0).abs() < 1e-15 && (b.perp.norm() - 1.0).abs() < 1e-15);
        assert!(b.e0.dot(&b.perp).abs() < 1e-15);
    }

    #[test]
    fn diagonal_identities() {
        let d = Domain::annulus(1.0, 0.3).unwrap();
        let p = phase((0.5, 0.3), (0.4, 0.8));
        for k in 1..4 {
            let t = transition_data(&d, &p, k, 1e-8, &JacobianOptions::default()).unwrap();
            assert!((t.matrix.s1.abs() - t.s1_identity).abs() < 1e-10);
            assert!((t.matrix.s3.abs() - t.s3_identity).abs() < 1e-10);
            assert!(super::super::residual(t.dx1.0, t.dx1.1) < 1e-5, "{t:?}");
            assert!(super::super::residual(t.dv1.0, t.dv1.1) < 1e-5, "{t:?}");
        }
    }

    #[test]
    fn flat_boundary_has_no_s2() {
        use crate::geometry::{AnalyticCurve, GraphSide};
        let line = AnalyticCurve::graph(alloc::vec![0.0], -5.0, 5.0, GraphSide::Above).unwrap();
        let d = Domain::sandbox(alloc::vec![line]).unwrap();
        let t = transition_data(&d, &phase((0.0, 1.0), (0.3, 0.7)), 1, 1e-8, &JacobianOptions::default()).unwrap();
        assert_eq!(t.matrix.s2, 0.0);
    }

    #[test]
    fn free_flight_product() {
        let d = Domain::disk(1.0).unwrap();
        let p = phase((0.1, 0.2), (0.6, 0.8));
        let r = transversality_product(&d, &p, -0.3, &JacobianOptions::default()).unwrap();
        assert_eq!(r.bounces, 0);
        assert!((r.analytic - 0.09 * 1.0 / 0.8).abs() < 1e-14);
        assert!(super::super::residual(r.analytic, r.fd) < 1e-6);
    }

    #[test]
    fn product_after_bounces_matches_differences() {
        let d = Domain::polar(0.3, 3).unwrap();
        let p = phase((0.1, -0.1), (0.5, 0.6));
        for s in [-1.7, -2.9, -4.4] {
            let r = transversality_product(&d, &p, s, &JacobianOptions::default()).unwrap();
            assert!(r.bounces > 0);
            assert!(super::super::residual(r.analytic, r.fd) < 1e-5, "{s} {r:?}");
        }
    }

    #[test]
    fn affine_helper() {
        let c = CriticalTimes::from_coefficients(0.0, 1.0, -0.5, 0.1, 1e-8).unwrap();
        assert_eq!(c.phi1, Some(0.5));
        let c = CriticalTimes::from_coefficients(0.0, 0.1, 1.0, 0.1, 1e-8).unwrap();
        assert_eq!(c.phi2, Some(0.0));
        assert!(CriticalTimes::from_coefficients(0.0, 0.0, 0.0, 0.1, 1e-8).is_err());
        // |s - phi1| > delta with |b| = 1 keeps |b s + c| >= delta
        let c = CriticalTimes::from_coefficients(0.0, 1.0, -0.5, 0.2, 1e-8).unwrap();
        for i in 0..=100 {
            let s = -1.0 + 0.02 * i as f64;
            if !c.excluded(s) {
                assert!(c.value(s).abs() >= c.bound() - 1e-15);
            }
        }
    }
}

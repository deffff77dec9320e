use alloc::vec::Vec;

use super::global::first_hit;
use super::transversality::{critical_times, transversality_product};
use super::{richardson, JacobianError, JacobianOptions};
use crate::geometry::Domain;
use crate::math::{det3, lift, section, Vec2, Vec3};
use crate::tolerances;
use crate::trajectory::{trace_cycles, Horizon, PhasePoint, SpecularCycle};

/// Hypotheses of the change-of-variable lower bound, checked numerically.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    /// `1/N <= |u| <= N` for the cross-section part of `u`.
    SpeedBand,
    /// `u3 >= 1/N`.
    NonDegenerate,
    /// `|e1(x^1) . (1, 0)| > 1/N` at the first backward bounce from `X(s)`.
    ChartAlignment,
    /// `X(s)` stays outside every sticky ball.
    StickyBall,
    /// `|s - s'| >= delta2`.
    TimeSeparation,
    /// `s'` sits at least `1/N` inside its bounce interval.
    BounceWindow,
    /// `s'` avoids the critical-time window.
    CriticalWindow,
    /// Every bounce in `(s', s)` has `|v . n| > delta2`.
    Transversal,
}

impl Condition {
    pub fn label(self) -> &'static str {
        match self {
            Self::SpeedBand => "speed-band",
            Self::NonDegenerate => "non-degenerate",
            Self::ChartAlignment => "chart-alignment",
            Self::StickyBall => "sticky-ball",
            Self::TimeSeparation => "time-separation",
            Self::BounceWindow => "bounce-window",
            Self::CriticalWindow => "critical-window",
            Self::Transversal => "transversal",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovOptions {
    /// Speed band parameter `N`.
    pub band: f64,
    pub delta2: f64,
    /// Floor on `|det|` for a pass.
    pub eps_prime: f64,
    /// Half-width of the excluded window around each critical time.
    pub window: f64,
    pub sticky_points: Vec<Vec2>,
    pub sticky_radius: f64,
    pub jacobian: JacobianOptions,
}

impl Default for CovOptions {
    fn default() -> Self {
        Self {
            band: 10.0,
            delta2: 1e-3,
            eps_prime: tolerances::EPS_PRIME,
            window: 0.05,
            sticky_points: Vec::new(),
            sticky_radius: 0.0,
            jacobian: JacobianOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovReport {
    /// Bounces of the characteristic from `(s, X(s), u)` before `s'`.
    pub bounces: usize,
    /// `det(dX(s') / du)` by finite differences.
    pub det_fd: f64,
    /// `-(s - s') * product * u^_3 / |u|`.
    pub det_analytic: f64,
    /// Transversality product in `(|u|, u^_1)`.
    pub product: f64,
    /// `dX2 / du2 = -(s - s')`.
    pub axial: f64,
    /// Critical time nearest the segment, when there is a bounce.
    pub psi: Option<f64>,
    pub violations: Vec<Condition>,
    pub pass: bool,
}

impl CovReport {
    pub fn residual(&self) -> f64 {
        super::residual(self.det_analytic, self.det_fd)
    }
}

/// Determinant of `u -> X(s'; s, X(s; t, x, v), u)` with the hypotheses of
/// its lower bound. A violated hypothesis clears the pass flag; it is not an
/// error.
pub fn change_of_variable_check(
    domain: &Domain,
    phase: &PhasePoint,
    s: f64,
    u: Vec3,
    s_prime: f64,
    opts: &CovOptions,
) -> Result<CovReport, JacobianError> {
    let jac = &opts.jacobian;
    let first = trace_cycles(domain, phase, &jac.trace.with_horizon(Horizon::Time(phase.t - s)))?;
    let (y, _) = first.state_at(s).ok_or(JacobianError::CombinatoricsChanged)?;
    let y2 = phase.x.y - (phase.t - s) * phase.v.y;
    let start = PhasePoint::new(lift(y, y2), u, s);
    let horizon = jac.trace.with_horizon(Horizon::Time(s - s_prime));
    let cycle = trace_cycles(domain, &start, &horizon)?;
    if let Some(e) = &cycle.failure {
        return Err(e.clone().into());
    }
    if let Some(e) = cycle.events.iter().find(|e| e.class.is_grazing()) {
        return Err(JacobianError::GrazingAtBounce(e.index));
    }
    let k = cycle.events.len();

    let route = |c: &SpecularCycle| c.events.iter().map(|e| e.curve).collect::<Vec<_>>();
    let base_route = route(&cycle);
    let map = |w: Vec3| -> Result<[f64; 3], JacobianError> {
        let p = PhasePoint::new(start.x, w, s);
        let c = trace_cycles(domain, &p, &horizon)?;
        if route(&c) != base_route || c.failure.is_some() {
            return Err(JacobianError::CombinatoricsChanged);
        }
        let (x, _) = c.state_at(s_prime).ok_or(JacobianError::CombinatoricsChanged)?;
        Ok([x.x, y2 - (s - s_prime) * w.y, x.y])
    };
    let speed = section(u).norm();
    let mut cols = [[0.0; 3]; 3];
    for (j, col) in cols.iter_mut().enumerate() {
        *col = richardson(jac.step * speed, |d| {
            let mut w = u;
            w[j] += d;
            map(w)
        })?;
    }
    let m: [[f64; 3]; 3] = core::array::from_fn(|r| core::array::from_fn(|j| cols[j][r]));
    let det_fd = det3(&m);

    let t = transversality_product(domain, &start, s_prime, jac)?;
    let axial = -(s - s_prime);
    let det_analytic = axial * t.analytic * (u.z / speed) / speed;

    let n = opts.band;
    let mut violations = Vec::new();
    if !(1.0 / n..=n).contains(&speed) {
        violations.push(Condition::SpeedBand);
    }
    if u.z < 1.0 / n {
        violations.push(Condition::NonDegenerate);
    }
    let (_, c1, tau1) = first_hit(domain, y, section(u), &jac.trace)?;
    if domain.curves()[c1].tangent(tau1).x.abs() <= 1.0 / n {
        violations.push(Condition::ChartAlignment);
    }
    if opts.sticky_points.iter().any(|p| (p - y).norm() < opts.sticky_radius) {
        violations.push(Condition::StickyBall);
    }
    if (s - s_prime).abs() < opts.delta2 {
        violations.push(Condition::TimeSeparation);
    }
    let t_k = cycle.events.last().map_or(s, |e| e.t);
    let (x_k, v_k) = match cycle.events.last() {
        Some(e) => (e.position(), e.velocity()),
        None => (y, section(u)),
    };
    let t_next = t_k - first_hit(domain, x_k, v_k, &jac.trace)?.0;
    if !(s_prime >= t_next + 1.0 / n && s_prime <= t_k - 1.0 / n) {
        violations.push(Condition::BounceWindow);
    }
    let psi = if k > 0 {
        match critical_times(domain, &start, k, opts.window, 0.0, jac) {
            Ok(ct) => Some(ct.psi()),
            Err(JacobianError::BothCoefficientsTiny) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    if psi.is_some_and(|p| (s_prime - p).abs() <= opts.window) {
        violations.push(Condition::CriticalWindow);
    }
    if cycle.events.iter().any(|e| e.incidence <= opts.delta2) {
        violations.push(Condition::Transversal);
    }
    let pass = violations.is_empty() && det_fd.abs() > opts.eps_prime;
    Ok(CovReport { bounces: k, det_fd, det_analytic, product: t.analytic, axial, psi, violations, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annulus_determinant_matches_product() {
        let d = Domain::annulus(1.0, 0.3).unwrap();
        let p = PhasePoint::new(Vec3::new(0.6, 0.2, 0.1), Vec3::new(0.5, 0.3, 0.7), 0.0);
        let u = Vec3::new(0.6, 0.4, 0.9);
        let opts = CovOptions::default();
        for s_prime in [-0.9, -1.6, -2.3] {
            let r = change_of_variable_check(&d, &p, -0.2, u, s_prime, &opts).unwrap();
            assert!(r.residual() < 1e-5, "{s_prime} {r:?}");
            assert_eq!(r.axial, -(-0.2 - s_prime));
        }
    }

    #[test]
    fn window_clears_the_flag() {
        let d = Domain::annulus(1.0, 0.3).unwrap();
        let p = PhasePoint::new(Vec3::new(0.6, 0.2, 0.1), Vec3::new(0.5, 0.3, 0.7), 0.0);
        let u = Vec3::new(0.6, 0.4, 0.9);
        let opts = CovOptions::default();
        let r = change_of_variable_check(&d, &p, -0.2, u, -1.6, &opts).unwrap();
        if let Some(psi) = r.psi {
            let inside = change_of_variable_check(&d, &p, -0.2, u, psi + 0.01, &opts);
            if let Ok(inside) = inside {
                assert!(!inside.pass);
            }
        }
        let close = change_of_variable_check(&d, &p, -0.2, u, -0.2 - 1e-4, &opts).unwrap();
        assert!(close.violations.contains(&Condition::TimeSeparation));
        assert!(!close.pass);
    }
}

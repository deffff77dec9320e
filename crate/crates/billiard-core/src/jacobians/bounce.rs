use alloc::vec::Vec;

use super::{bounce_pair, next_hit, richardson, Entry, Frame, JacobianError, JacobianOptions, JacobianReport};
use crate::geometry::Domain;
use crate::math::{det3, section, Vec2};
use crate::trajectory::SpecularCycle;

/// Per-bounce determinant computed three ways.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeterminantCheck {
    /// Determinant of the analytic 3x3 block.
    pub analytic: f64,
    /// `sqrt(g^k)/sqrt(g^{k+1}) * v3^k / v3^{k+1}`.
    pub formula: f64,
    /// Determinant of the finite-difference block.
    pub fd: f64,
}

/// Analytic derivatives of `(dt, x1', v1', v3')` with respect to
/// `(x1, v1, v3)`, where `dt = t^k - t^{k+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct BounceDerivatives {
    pub dt: [f64; 3],
    pub x1: [f64; 3],
    pub v1: [f64; 3],
    pub v3: [f64; 3],
}

impl BounceDerivatives {
    /// Rows `(x1', v1', v3')` of the bounce map.
    pub fn block(&self) -> [[f64; 3]; 3] {
        [self.x1, self.v1, self.v3]
    }
}

/// Derivatives across the flight from frame `a` (velocity `v` leaving it) to
/// frame `b`.
pub(crate) fn derivatives(a: &Frame, b: &Frame, v: Vec2) -> BounceDerivatives {
    let dt = a.t - b.t;
    let (w1, w3) = (v.dot(&a.e1), v.dot(&a.e3));
    let (u1, u3) = (v.dot(&b.e1), -v.dot(&b.e3));
    let w = b.e1 + b.e3 * (u1 / u3);
    let (k1, k3) = (v.dot(&b.de1), v.dot(&b.de3));

    // d v / d x1 at fixed chart components, then the displacement of x^{k+1}
    let dv = a.de1 * w1 + a.de3 * w3;
    let e = a.d1 - dv * dt;
    let x_x = w.dot(&e) / b.sqrt_g;
    let mut out = BounceDerivatives {
        dt: [-b.e3.dot(&e) / u3, 0.0, 0.0],
        x1: [x_x, 0.0, 0.0],
        v1: [dv.dot(&b.e1) + k1 * x_x, 0.0, 0.0],
        v3: [-dv.dot(&b.e3) - k3 * x_x, 0.0, 0.0],
    };
    for (j, ej) in [(1, a.e1), (2, a.e3)] {
        let x_v = -dt * ej.dot(&w) / b.sqrt_g;
        out.dt[j] = dt * ej.dot(&b.e3) / u3;
        out.x1[j] = x_v;
        out.v1[j] = ej.dot(&b.e1) + k1 * x_v;
        out.v3[j] = -ej.dot(&b.e3) - k3 * x_v;
    }
    out
}

/// The bounce map itself: from chart data `(x1, v1, v3)` at `a` to
/// `(dt, x1', v1', v3')` in the chart at `b`.
pub(crate) fn bounce_map(
    domain: &Domain,
    a: &Frame,
    b: &Frame,
    [x1, v1, v3]: [f64; 3],
    opts: &JacobianOptions,
) -> Result<[f64; 4], JacobianError> {
    let curve = &domain.curves()[a.curve];
    let tau = a.tau + x1;
    let v = curve.tangent(tau) * v1 + curve.normal(tau) * v3;
    let (dt, tau_b) = next_hit(domain, a.curve, tau, v, b.curve, &opts.trace)?;
    let next = &domain.curves()[b.curve];
    Ok([dt, next.param_diff(tau_b, b.tau), v.dot(&next.tangent(tau_b)), -v.dot(&next.normal(tau_b))])
}

fn fd_block(
    domain: &Domain,
    a: &Frame,
    b: &Frame,
    v: Vec2,
    opts: &JacobianOptions,
) -> Result<[[f64; 4]; 3], JacobianError> {
    let base = [0.0, v.dot(&a.e1), v.dot(&a.e3)];
    let scales = [1.0, v.norm(), v.norm()];
    let mut cols = [[0.0; 4]; 3];
    for (j, col) in cols.iter_mut().enumerate() {
        let h = opts.step * scales[j];
        *col = richardson(h, |d| {
            let mut z = base;
            z[j] += d;
            bounce_map(domain, a, b, z, opts)
        })?;
    }
    Ok(cols)
}

const NAMES: [[&str; 3]; 4] = [
    ["dt/dx1", "dt/dv1", "dt/dv3"],
    ["dx1'/dx1", "dx1'/dv1", "dx1'/dv3"],
    ["dv1'/dx1", "dv1'/dv1", "dv1'/dv3"],
    ["dv3'/dx1", "dv3'/dv1", "dv3'/dv3"],
];

/// Analytic and finite-difference derivatives of the map from bounce `k`
/// to bounce `k + 1` of a backward cycle, with the determinant check.
pub fn bounce_jacobian(
    domain: &Domain,
    cycle: &SpecularCycle,
    k: usize,
    opts: &JacobianOptions,
) -> Result<JacobianReport, JacobianError> {
    let (ea, eb) = bounce_pair(cycle, k, opts.trace.eps_grazing)?;
    let (a, b) = (Frame::of(domain, ea)?, Frame::of(domain, eb)?);
    let v = section(ea.post);
    let d = derivatives(&a, &b, v);
    let fd = fd_block(domain, &a, &b, v, opts)?;
    let rows = [d.dt, d.x1, d.v1, d.v3];
    let mut entries = Vec::with_capacity(12);
    for (r, names) in NAMES.iter().enumerate() {
        for (j, name) in names.iter().enumerate() {
            entries.push(Entry::new(name, rows[r][j], fd[j][r]));
        }
    }
    let fd_block: [[f64; 3]; 3] = core::array::from_fn(|r| core::array::from_fn(|j| fd[j][r + 1]));
    let check = DeterminantCheck { analytic: det3(&d.block()), formula: formula(&a, &b, v), fd: det3(&fd_block) };
    Ok(JacobianReport::new(k, entries, Some(check)))
}

fn formula(a: &Frame, b: &Frame, v: Vec2) -> f64 {
    a.sqrt_g / b.sqrt_g * v.dot(&a.e3) / -v.dot(&b.e3)
}

/// Determinant of the bounce map `k -> k + 1`: analytic, closed formula and
/// finite differences.
pub fn det_check(
    domain: &Domain,
    cycle: &SpecularCycle,
    k: usize,
    opts: &JacobianOptions,
) -> Result<DeterminantCheck, JacobianError> {
    bounce_jacobian(domain, cycle, k, opts).map(|r| r.determinant.expect("bounce reports carry a determinant"))
}

/// Determinants chained over bounces `first..last`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainReport {
    pub first: usize,
    pub last: usize,
    pub per_bounce: Vec<DeterminantCheck>,
    pub product_analytic: f64,
    pub product_formula: f64,
    pub product_fd: f64,
    /// Telescoped closed form `sqrt(g^1)/sqrt(g^K) * v3^1 / v3^K` of the
    /// `(x1, v1, v3)` chain.
    pub closed_form: f64,
    /// Closed form `sqrt(g^1)/sqrt(g^K)` of the chain in `(x1, v1/|v|)` at
    /// fixed speed.
    pub reduced: f64,
    /// Finite-difference determinant of the composite `(x1, v1/|v|)` map.
    pub reduced_fd: f64,
    /// `sqrt(g^1)/sqrt(g^K) * (v3^K / v3^1)^2`, the form the reduced chain
    /// is sometimes quoted in. Reported for comparison only.
    pub quoted: f64,
}

/// Chain of bounce maps from bounce `first` to bounce `last` (`first < last`).
pub fn chain_determinant(
    domain: &Domain,
    cycle: &SpecularCycle,
    first: usize,
    last: usize,
    opts: &JacobianOptions,
) -> Result<ChainReport, JacobianError> {
    if first == 0 || last <= first {
        return Err(JacobianError::MissingBounce(last));
    }
    let mut per_bounce = Vec::with_capacity(last - first);
    for k in first..last {
        per_bounce.push(det_check(domain, cycle, k, opts)?);
    }
    let product = |f: fn(&DeterminantCheck) -> f64| per_bounce.iter().map(f).product::<f64>();
    let frames = cycle.events[first - 1..last].iter().map(|e| Frame::of(domain, e)).collect::<Result<Vec<_>, _>>()?;
    let (fa, fk) = (&frames[0], &frames[frames.len() - 1]);
    let (ea, ek) = (&cycle.events[first - 1], &cycle.events[last - 1]);
    let v3a = section(ea.post).dot(&fa.e3);
    let v3k = section(ek.post).dot(&fk.e3);
    let reduced = fa.sqrt_g / fk.sqrt_g;
    let reduced_fd = reduced_chain_fd(domain, &frames, section(ea.post), opts)?;
    Ok(ChainReport {
        first,
        last,
        product_analytic: product(|d| d.analytic),
        product_formula: product(|d| d.formula),
        product_fd: product(|d| d.fd),
        per_bounce,
        closed_form: reduced * v3a / v3k,
        reduced,
        reduced_fd,
        quoted: reduced * (v3k / v3a).powi(2),
    })
}

/// Composite map in `(x1, v1/|v|)` at fixed speed, followed bounce by bounce
/// through the charts of `frames`.
fn reduced_chain_fd(domain: &Domain, frames: &[Frame], v: Vec2, opts: &JacobianOptions) -> Result<f64, JacobianError> {
    let speed = v.norm();
    let a = &frames[0];
    let base = [0.0, v.dot(&a.e1) / speed];
    let run = |z: [f64; 2]| -> Result<[f64; 2], JacobianError> {
        let curve = &domain.curves()[a.curve];
        let mut tau = a.tau + z[0];
        let hat3 = (1.0 - z[1] * z[1]).sqrt();
        let mut v = (curve.tangent(tau) * z[1] + curve.normal(tau) * hat3) * speed;
        let mut c = a.curve;
        for b in &frames[1..] {
            let (_, tb) = next_hit(domain, c, tau, v, b.curve, &opts.trace)?;
            let n = domain.curves()[b.curve].normal(tb);
            v -= n * (2.0 * n.dot(&v));
            c = b.curve;
            tau = tb;
        }
        let last = frames.last().expect("nonempty");
        let curve = &domain.curves()[last.curve];
        Ok([curve.param_diff(tau, last.tau), v.dot(&curve.tangent(tau)) / speed])
    };
    let mut cols = [[0.0; 2]; 2];
    for (j, col) in cols.iter_mut().enumerate() {
        *col = richardson(opts.step, |d| {
            let mut z = base;
            z[j] += d;
            run(z)
        })?;
    }
    Ok(cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use crate::trajectory::{trace_cycles, Horizon, PhasePoint, TraceOptions};

    fn cycle(domain: &Domain, x: (f64, f64), v: (f64, f64), bounces: usize) -> SpecularCycle {
        let p = PhasePoint::new(Vec3::new(x.0, 0.0, x.1), Vec3::new(v.0, 0.0, v.1), 0.0);
        let opts = TraceOptions::backward().with_cap(bounces);
        trace_cycles(domain, &p, &opts).unwrap()
    }

    #[test]
    fn diameter_orbit_flight_time_is_stationary() {
        let d = Domain::disk(1.0).unwrap();
        let c = cycle(&d, (0.0, 0.0), (1.0, 0.0), 3);
        let r = bounce_jacobian(&d, &c, 1, &JacobianOptions::default()).unwrap();
        let e = r.entry("dt/dx1").unwrap();
        assert!(e.analytic.abs() < 1e-14, "{e:?}");
        assert!(e.passes());
        let det = r.determinant.unwrap();
        assert!((det.formula - 1.0).abs() < 1e-14);
        assert!((det.analytic - 1.0).abs() < 1e-12);
    }

    #[test]
    fn annulus_and_polar_blocks_match_differences() {
        let scenes = [
            (Domain::annulus(1.0, 0.3).unwrap(), (0.5, 0.2), (0.3, 0.9)),
            (Domain::polar(0.3, 3).unwrap(), (0.1, -0.2), (0.7, 0.4)),
            (Domain::ellipse(2.0, 1.0).unwrap(), (0.3, 0.1), (-0.2, 1.0)),
        ];
        for (d, x, v) in &scenes {
            let c = cycle(d, *x, *v, 6);
            for k in 1..5 {
                let r = bounce_jacobian(d, &c, k, &JacobianOptions::default()).unwrap();
                for e in &r.entries {
                    assert!(e.passes(), "k={k} {e:?}");
                }
                let det = r.determinant.unwrap();
                assert!((det.analytic - det.formula).abs() < 1e-8, "{det:?}");
                assert!((det.analytic - det.fd).abs() < 1e-6, "{det:?}");
            }
        }
    }

    #[test]
    fn chain_telescopes() {
        let d = Domain::polar(0.3, 3).unwrap();
        let c = cycle(&d, (0.1, 0.05), (0.6, -0.5), 8);
        let r = chain_determinant(&d, &c, 1, 6, &JacobianOptions::default()).unwrap();
        assert!((r.product_formula - r.closed_form).abs() <= 1e-10 * r.closed_form.abs());
        assert!((r.product_fd - r.closed_form).abs() <= 1e-6 * r.closed_form.abs().max(1.0));
        assert!((r.reduced_fd.abs() - r.reduced).abs() <= 1e-6 * r.reduced, "{r:?}");
    }

    #[test]
    fn forward_cycles_and_missing_bounces_are_rejected() {
        let d = Domain::disk(1.0).unwrap();
        let p = PhasePoint::new(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.3), 0.0);
        let fwd = trace_cycles(&d, &p, &TraceOptions::forward().with_cap(3)).unwrap();
        let opts = JacobianOptions::default();
        assert_eq!(bounce_jacobian(&d, &fwd, 1, &opts), Err(JacobianError::ForwardCycle));
        let back = trace_cycles(&d, &p, &TraceOptions::backward().with_horizon(Horizon::Time(1.5))).unwrap();
        assert!(matches!(bounce_jacobian(&d, &back, 1, &opts), Err(JacobianError::MissingBounce(_))));
    }
}

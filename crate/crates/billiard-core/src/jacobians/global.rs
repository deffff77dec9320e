use alloc::vec::Vec;

use super::{richardson, Entry, Frame, JacobianError, JacobianOptions, JacobianReport};
use crate::geometry::{Domain, Location};
use crate::math::Vec2;
use crate::trajectory::{cast, PhasePoint, TraceError, TraceOptions};

/// First backward hit from `(x, v)`: `(t_b, curve, tau)`.
pub(crate) fn first_hit(
    domain: &Domain,
    x: Vec2,
    v: Vec2,
    opts: &TraceOptions,
) -> Result<(f64, usize, f64), JacobianError> {
    let launch = match domain.locate(x, 1e-10 * domain.diameter()) {
        Location::Outside => return Err(TraceError::OutsideDomain.into()),
        Location::Inside => None,
        Location::OnBoundary { curve, tau } => Some((curve, tau)),
    };
    match cast(domain, x, -v, launch, opts)? {
        Some(hit) => Ok((hit.time, hit.curve, hit.tau)),
        None => Err(TraceError::NoIntersection.into()),
    }
}

/// Outputs of the first-bounce map in the chart anchored at `anchor`:
/// `(t_b, x1, v . e1, v . e3, |v|)`.
fn outputs(domain: &Domain, anchor: &Frame, x: Vec2, v: Vec2, opts: &TraceOptions) -> Result<[f64; 5], JacobianError> {
    let (tb, curve, tau) = first_hit(domain, x, v, opts)?;
    if curve != anchor.curve {
        return Err(JacobianError::CombinatoricsChanged);
    }
    let c = &domain.curves()[curve];
    let (w1, w3) = (v.dot(&c.tangent(tau)), v.dot(&c.normal(tau)));
    Ok([tb, c.param_diff(tau, anchor.tau), w1, w3, (w1 * w1 + w3 * w3).sqrt()])
}

/// Rows of the first-bounce derivatives (see [`NAMES`]) with respect to
/// `(x1, x3, v1, v3)` at the hit frame `f`.
pub(crate) fn analytic_rows(f: &Frame, v: Vec2, tb: f64) -> [[f64; 4]; 5] {
    let q = -v.dot(&f.e3);
    let w = f.e1 + f.e3 * (v.dot(&f.e1) / q);
    let (k1, k3) = (v.dot(&f.de1), v.dot(&f.de3));
    let basis = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
    let mut rows = [[0.0; 4]; 5];
    for (j, ej) in basis.iter().enumerate() {
        let x_x = ej.dot(&w) / f.sqrt_g;
        let x_v = -tb * x_x;
        rows[0][j] = -ej.dot(&f.e3) / q;
        rows[0][j + 2] = tb * ej.dot(&f.e3) / q;
        rows[1][j] = x_x;
        rows[1][j + 2] = x_v;
        rows[2][j] = x_x * k1;
        rows[2][j + 2] = ej.dot(&f.e1) + x_v * k1;
        rows[3][j] = x_x * k3;
        rows[3][j + 2] = ej.dot(&f.e3) + x_v * k3;
        rows[4][j + 2] = v[j] / v.norm();
    }
    rows
}

const NAMES: [[&str; 4]; 5] = [
    ["dtb/dx1", "dtb/dx3", "dtb/dv1", "dtb/dv3"],
    ["dx1/dx1", "dx1/dx3", "dx1/dv1", "dx1/dv3"],
    ["dv1/dx1", "dv1/dx3", "dv1/dv1", "dv1/dv3"],
    ["dv3/dx1", "dv3/dx3", "dv3/dv1", "dv3/dv3"],
    ["d|v|/dx1", "d|v|/dx3", "d|v|/dv1", "d|v|/dv3"],
];

/// Analytic derivatives of `(t_b, x1, v . e1, v . e3, |v|)` at the first
/// backward bounce with respect to the Euclidean cross-section coordinates
/// `(x1, x3, v1, v3)` of the phase, against finite differences.
///
/// The velocity components are those of the incoming `v` in the unit frame
/// at the hit; `x1` is the parameter offset from the hit.
pub fn first_bounce_jacobian_global(
    domain: &Domain,
    phase: &PhasePoint,
    opts: &JacobianOptions,
) -> Result<JacobianReport, JacobianError> {
    let (x, v) = (phase.position(), phase.velocity());
    let (tb, curve, tau) = first_hit(domain, x, v, &opts.trace)?;
    let f = Frame::at(domain, curve, tau, phase.t - tb)?;
    let q = -v.dot(&f.e3);
    if q <= opts.trace.eps_grazing * v.norm() {
        return Err(JacobianError::GrazingAtBounce(1));
    }
    let rows = analytic_rows(&f, v, tb);
    let scales = [domain.diameter(), domain.diameter(), v.norm(), v.norm()];
    let mut entries = Vec::with_capacity(20);
    let mut cols = [[0.0; 5]; 4];
    for (j, col) in cols.iter_mut().enumerate() {
        *col = richardson(opts.step * scales[j], |d| {
            let (mut xp, mut vp) = (x, v);
            if j < 2 {
                xp[j] += d;
            } else {
                vp[j - 2] += d;
            }
            outputs(domain, &f, xp, vp, &opts.trace)
        })?;
    }
    for (r, names) in NAMES.iter().enumerate() {
        for (j, name) in names.iter().enumerate() {
            entries.push(Entry::new(name, rows[r][j], cols[j][r]));
        }
    }
    Ok(JacobianReport::new(0, entries, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AnalyticCurve, GraphSide};
    use crate::math::Vec3;
    use alloc::vec;

    fn phase(x: (f64, f64), v: (f64, f64)) -> PhasePoint {
        PhasePoint::new(Vec3::new(x.0, 0.0, x.1), Vec3::new(v.0, 0.0, v.1), 0.0)
    }

    #[test]
    fn speed_does_not_depend_on_position() {
        let d = Domain::polar(0.3, 3).unwrap();
        let r = first_bounce_jacobian_global(&d, &phase((0.2, 0.1), (0.4, -0.9)), &JacobianOptions::default()).unwrap();
        assert_eq!(r.entry("d|v|/dx1").unwrap().analytic, 0.0);
        assert_eq!(r.entry("d|v|/dx3").unwrap().analytic, 0.0);
        assert!(r.entries.iter().all(Entry::passes), "{r:?}");
    }

    #[test]
    fn disk_center_time_derivative() {
        let d = Domain::disk(1.0).unwrap();
        let r = first_bounce_jacobian_global(&d, &phase((0.0, 0.0), (2.0, 0.0)), &JacobianOptions::default()).unwrap();
        // t_b = 1/|v| along the axis
        let e = r.entry("dtb/dv1").unwrap();
        assert!((e.analytic + 0.5 / 2.0).abs() < 1e-14);
        assert!(e.passes());
    }

    #[test]
    fn flat_boundary_crossing_time() {
        // domain above y = 0; the plane-crossing time is x3 / v3
        let line = AnalyticCurve::graph(vec![0.0], -5.0, 5.0, GraphSide::Above).unwrap();
        let d = Domain::sandbox(vec![line]).unwrap();
        let v = Vec2::new(0.3, 0.8);
        let r = first_bounce_jacobian_global(&d, &phase((0.1, 0.5), (v.x, v.y)), &JacobianOptions::default()).unwrap();
        let n = Vec2::new(0.0, -1.0);
        assert!((r.entry("dtb/dx3").unwrap().analytic - n.y / v.dot(&n)).abs() < 1e-14);
        assert!((r.entry("dtb/dx3").unwrap().analytic - 1.0 / v.y).abs() < 1e-14);
        assert_eq!(r.entry("dtb/dx1").unwrap().analytic, 0.0);
        assert!(r.entries.iter().all(Entry::passes), "{r:?}");
    }
}

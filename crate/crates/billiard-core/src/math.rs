pub type Vec2 = nalgebra::Vector2<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;

pub const TAU: f64 = core::f64::consts::TAU;

/// Planar cross product `a1 b3 - a3 b1`.
#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Axial component of the 3D cross product of two cross-section vectors,
/// `((a1,0,a3) x (b1,0,b3))_2 = a3 b1 - a1 b3`.
#[inline]
pub fn axial_cross(a: Vec2, b: Vec2) -> f64 {
    a.y * b.x - a.x * b.y
}

/// Outward normal for a tangent `t` under the orientation convention.
#[inline]
pub(crate) fn right_normal(t: Vec2) -> Vec2 {
    Vec2::new(t.y, -t.x)
}

#[inline]
pub(crate) fn section(v: Vec3) -> Vec2 {
    Vec2::new(v.x, v.z)
}

#[inline]
pub(crate) fn lift(v: Vec2, axial: f64) -> Vec3 {
    Vec3::new(v.x, axial, v.y)
}

/// Representative of `tau` in `[0, 2pi)`.
#[inline]
pub(crate) fn wrap_angle(tau: f64) -> f64 {
    let r = tau % TAU;
    if r < 0.0 {
        r + TAU
    } else {
        r
    }
}

/// Signed difference `a - b` folded into `(-pi, pi]`.
#[inline]
pub(crate) fn angle_diff(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > core::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

pub(crate) fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Safeguarded Newton iteration for a root of `f` bracketed by `[a, b]`.
/// `f` returns `(value, derivative)`.
pub(crate) fn bracketed_root(a: f64, b: f64, f: impl Fn(f64) -> (f64, f64)) -> f64 {
    let (fa, fb) = (f(a).0, f(b).0);
    bracketed_root_from(a, b, fa, fb, f)
}

/// As [`bracketed_root`] with the end values already known.
pub(crate) fn bracketed_root_from(mut a: f64, mut b: f64, mut fa: f64, fb: f64, f: impl Fn(f64) -> (f64, f64)) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let secant = a - fa * (b - a) / (fb - fa);
    let mut x = if secant > a.min(b) && secant < a.max(b) { secant } else { 0.5 * (a + b) };
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton > a.min(b) && newton < a.max(b) { newton } else { 0.5 * (a + b) };
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * (1.0 + x.abs()) || (b - a).abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_diff_folds() {
        assert!((angle_diff(0.1, TAU - 0.1) - 0.2).abs() < 1e-15);
        assert!((angle_diff(TAU - 0.1, 0.1) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn bracketed_root_finds_sqrt2() {
        let r = bracketed_root(0.0, 2.0, |x| (x * x - 2.0, 2.0 * x));
        assert!((r - core::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn axial_cross_is_negated_planar_cross() {
        let a = Vec2::new(0.3, -1.2);
        let b = Vec2::new(2.0, 0.7);
        assert_eq!(axial_cross(a, b), -cross(a, b));
    }
}

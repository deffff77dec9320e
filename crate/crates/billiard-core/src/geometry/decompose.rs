use alloc::vec::Vec;

use super::{AnalyticCurve, CurveKind, Domain, GeometryError};
use crate::math::TAU;
use crate::tolerances::{KAPPA_BISECT_WIDTH, KAPPA_SAMPLES};

/// Signed curvature of `curve` at `tau`.
pub fn curvature(curve: &AnalyticCurve, tau: f64) -> Result<f64, GeometryError> {
    curve.curvature(tau)
}

/// Sign pattern at an inflection: `Plus` when curvature goes from negative
/// to positive with increasing parameter, `Minus` for the reverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InflectionTag {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inflection {
    pub tau: f64,
    pub tag: InflectionTag,
}

/// Parameter interval between two curvature zeros. On closed curves `end` may exceed
/// `2pi` when the interval wraps through zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Whether `tau` (in the curve's canonical range) lies in `[start, end)`.
    pub fn contains(&self, tau: f64, closed: bool) -> bool {
        let inside = |t: f64| t >= self.start && t < self.end;
        inside(tau) || (closed && inside(tau + TAU))
    }

    /// Interval trimmed by `fraction` of its length at each end.
    pub fn shrink(&self, fraction: f64) -> Interval {
        let d = fraction * self.len();
        Interval { start: self.start + d, end: self.end - d }
    }
}

/// What part of the boundary a parameter falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Piece {
    Concave,
    Convex,
    Inflection(InflectionTag),
    /// Curvature unresolved: a flat sandbox arc or a degenerate zero.
    Flat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveDecomposition {
    pub curve: usize,
    pub concave: Vec<Interval>,
    pub convex: Vec<Interval>,
    pub inflections: Vec<Inflection>,
    /// Set for sandbox arcs whose curvature vanishes on an interval.
    pub flat: bool,
    pub max_abs_curvature: f64,
    closed: bool,
}

impl CurveDecomposition {
    /// Index of the concave or convex interval containing `tau`, paired with
    /// its kind.
    pub fn locate(&self, tau: f64) -> Option<(Piece, usize)> {
        if let Some(i) = self.concave.iter().position(|iv| iv.contains(tau, self.closed)) {
            return Some((Piece::Concave, i));
        }
        self.convex.iter().position(|iv| iv.contains(tau, self.closed)).map(|i| (Piece::Convex, i))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryDecomposition {
    pub curves: Vec<CurveDecomposition>,
    pub kappa_tol: f64,
}

impl BoundaryDecomposition {
    pub fn curve(&self, id: usize) -> &CurveDecomposition {
        &self.curves[id]
    }

    pub fn inflection_count(&self) -> usize {
        self.curves.iter().map(|c| c.inflections.len()).sum()
    }

    pub fn concave_count(&self) -> usize {
        self.curves.iter().map(|c| c.concave.len()).sum()
    }

    /// All concave intervals as `(curve id, interval)`.
    pub fn concave_intervals(&self) -> impl Iterator<Item = (usize, Interval)> + '_ {
        self.curves.iter().flat_map(|c| c.concave.iter().map(move |iv| (c.curve, *iv)))
    }

    /// All inflection points as `(curve id, inflection)`.
    pub fn inflections(&self) -> impl Iterator<Item = (usize, Inflection)> + '_ {
        self.curves.iter().flat_map(|c| c.inflections.iter().map(move |f| (c.curve, *f)))
    }

    /// Classify a boundary parameter. Inflection points claim a window of
    /// half-width `window` around them.
    pub fn piece_at(&self, curve: &AnalyticCurve, id: usize, tau: f64, window: f64) -> Piece {
        let d = &self.curves[id];
        if d.flat {
            return Piece::Flat;
        }
        let tau = curve.canonical(tau);
        if let Some(f) = d.inflections.iter().find(|f| curve.param_diff(tau, f.tau).abs() <= window) {
            return Piece::Inflection(f.tag);
        }
        match d.locate(tau) {
            Some((piece, _)) => piece,
            None => Piece::Flat,
        }
    }
}

/// Split every boundary curve into concave intervals, convex intervals and
/// tagged inflection points, resolving each sign change of the curvature to
/// a parameter bracket of width `1e-12`.
pub fn decompose_boundary(domain: &Domain, kappa_tol: f64) -> Result<BoundaryDecomposition, GeometryError> {
    let curves = domain
        .curves()
        .iter()
        .enumerate()
        .map(|(id, c)| match decompose_curve(c, id, kappa_tol) {
            Err(GeometryError::FlatArc { .. }) if domain.is_sandbox() => Ok(CurveDecomposition {
                curve: id,
                concave: Vec::new(),
                convex: Vec::new(),
                inflections: Vec::new(),
                flat: true,
                max_abs_curvature: 0.0,
                closed: c.is_closed(),
            }),
            other => other,
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BoundaryDecomposition { curves, kappa_tol })
}

fn sign_of(k: f64, tol: f64) -> i8 {
    if k > tol {
        1
    } else if k < -tol {
        -1
    } else {
        0
    }
}

fn decompose_curve(c: &AnalyticCurve, id: usize, kappa_tol: f64) -> Result<CurveDecomposition, GeometryError> {
    let closed = c.is_closed();
    let n = KAPPA_SAMPLES.max(64 * c.harmonics());
    let taus = c.samples(n);
    let kappas = taus.iter().map(|&t| c.curvature(t)).collect::<Result<Vec<_>, _>>()?;
    let max_abs_curvature = kappas.iter().fold(0.0f64, |m, k| m.max(k.abs()));

    let mut run = 0;
    for (i, k) in kappas.iter().enumerate() {
        if k.abs() < kappa_tol {
            run += 1;
            if run >= 3 {
                return Err(GeometryError::FlatArc { curve: id, tau: taus[i] });
            }
        } else {
            run = 0;
        }
    }

    let signed: Vec<(f64, i8)> = taus
        .iter()
        .zip(&kappas)
        .filter_map(|(&t, &k)| match sign_of(k, kappa_tol) {
            0 => None,
            s => Some((t, s)),
        })
        .collect();
    if signed.is_empty() {
        return Err(GeometryError::FlatArc { curve: id, tau: taus[0] });
    }

    let mut pairs: Vec<((f64, i8), (f64, i8))> = signed.windows(2).map(|w| (w[0], w[1])).collect();
    if closed {
        let (first, last) = (signed[0], signed[signed.len() - 1]);
        pairs.push((last, (first.0 + TAU, first.1)));
    }

    let mut inflections = Vec::new();
    for ((a, sa), (b, sb)) in pairs {
        if sa == sb {
            continue;
        }
        let root = bisect_sign_change(c, a, b, sa);
        if c.curvature(root)?.abs() >= kappa_tol {
            return Err(GeometryError::UnresolvedZero { curve: id, tau: c.canonical(root) });
        }
        let tag = if sa < 0 { InflectionTag::Plus } else { InflectionTag::Minus };
        inflections.push(Inflection { tau: c.canonical(root), tag });
    }
    inflections.sort_by(|a, b| a.tau.total_cmp(&b.tau));

    let mut concave = Vec::new();
    let mut convex = Vec::new();
    if closed {
        if inflections.is_empty() {
            let whole = Interval { start: 0.0, end: TAU };
            if signed[0].1 > 0 {
                concave.push(whole);
            } else {
                convex.push(whole);
            }
        } else {
            let m = inflections.len();
            for i in 0..m {
                let start = inflections[i].tau;
                let mut end = inflections[(i + 1) % m].tau;
                if end <= start {
                    end += TAU;
                }
                let iv = Interval { start, end };
                match inflections[i].tag {
                    InflectionTag::Plus => concave.push(iv),
                    InflectionTag::Minus => convex.push(iv),
                }
            }
        }
    } else {
        let CurveKind::OpenArc { lo, hi } = c.kind() else { unreachable!() };
        let mut cuts = Vec::with_capacity(inflections.len() + 2);
        cuts.push(lo);
        cuts.extend(inflections.iter().map(|f| f.tau));
        cuts.push(hi);
        let mut sign = signed[0].1;
        for w in cuts.windows(2) {
            let iv = Interval { start: w[0], end: w[1] };
            if sign > 0 {
                concave.push(iv);
            } else {
                convex.push(iv);
            }
            sign = -sign;
        }
    }

    Ok(CurveDecomposition { curve: id, concave, convex, inflections, flat: false, max_abs_curvature, closed })
}

fn bisect_sign_change(c: &AnalyticCurve, mut lo: f64, mut hi: f64, sign_lo: i8) -> f64 {
    while hi - lo > KAPPA_BISECT_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let k = c.eval(mid).curvature();
        if k == 0.0 {
            return mid;
        }
        if (k > 0.0) == (sign_lo > 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

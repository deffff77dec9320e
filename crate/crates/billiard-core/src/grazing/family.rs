use alloc::vec::Vec;

use super::GrazingError;
use crate::geometry::{Domain, Interval};
use crate::math::{lift, Vec2};
use crate::tolerances;
use crate::trajectory::{trace_cycles, Horizon, PhasePoint, SpecularCycle, TraceOptions};

/// Orientation of a tangent launch relative to `a'(tau)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaunchSign {
    Plus,
    Minus,
}

impl LaunchSign {
    pub fn value(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Launch {
    /// Boundary parameter of the launch; the sample index for explicit
    /// families.
    pub tau: f64,
    pub phase: PhasePoint,
    pub cycle: SpecularCycle,
}

/// Forward cycles launched tangentially from a boundary arc.
#[derive(Clone, Debug, PartialEq)]
pub struct GrazingFamily {
    /// Source curve and the shrunken parameter interval, when the launches
    /// come from a boundary curve of the domain.
    pub source: Option<(usize, Interval)>,
    pub sign: LaunchSign,
    pub launches: Vec<Launch>,
}

impl GrazingFamily {
    /// Family traced forward from explicit phases.
    pub fn from_phases(
        domain: &Domain,
        phases: impl IntoIterator<Item = PhasePoint>,
        sign: LaunchSign,
        opts: &TraceOptions,
    ) -> Result<Self, GrazingError> {
        let launches = phases
            .into_iter()
            .enumerate()
            .map(|(i, phase)| Ok(Launch { tau: i as f64, phase, cycle: trace_cycles(domain, &phase, opts)? }))
            .collect::<Result<Vec<_>, GrazingError>>()?;
        if launches.is_empty() {
            return Err(GrazingError::EmptyInterval);
        }
        Ok(Self { source: None, sign, launches })
    }

    pub fn len(&self) -> usize {
        self.launches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.launches.is_empty()
    }
}

/// Launches `grid_size` forward cycles from `(a(tau), sign * speed * T(tau))`
/// on a uniform grid over `interval` shrunk by the inflection margin.
/// `interval` must lie inside one of the concave intervals of `curve`.
pub fn trace_grazing_family(
    domain: &Domain,
    curve: usize,
    interval: Interval,
    grid_size: usize,
    speed: f64,
    sign: LaunchSign,
    horizon: Horizon,
) -> Result<GrazingFamily, GrazingError> {
    let c = domain.curve(curve)?;
    if grid_size == 0 || interval.is_empty() {
        return Err(GrazingError::EmptyInterval);
    }
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(GrazingError::InvalidInput("speed must be positive"));
    }
    let slack = 1e-12 * interval.len().max(1.0);
    let concave = domain
        .decomposition()
        .curve(curve)
        .concave
        .iter()
        .any(|iv| interval.start >= iv.start - slack && interval.end <= iv.end + slack);
    if !concave {
        return Err(GrazingError::NotConcave(curve));
    }
    let grid = interval.shrink(tolerances::INFLECTION_MARGIN);
    let opts = TraceOptions::forward().with_horizon(horizon);
    let taus: Vec<f64> = match grid_size {
        1 => alloc::vec![0.5 * (grid.start + grid.end)],
        n => (0..n).map(|i| grid.start + grid.len() * i as f64 / (n - 1) as f64).collect(),
    };
    let mut launches = Vec::with_capacity(taus.len());
    for tau in taus {
        let p = c.eval(tau);
        let v: Vec2 = p.tangent() * (sign.value() * speed);
        let phase = PhasePoint::new(lift(p.pos, 0.0), lift(v, 0.0), 0.0);
        let cycle = trace_cycles(domain, &phase, &opts)?;
        launches.push(Launch { tau: c.canonical(tau), phase, cycle });
    }
    if launches.iter().all(|l| l.cycle.events.is_empty()) {
        return Err(GrazingError::AllTrapped);
    }
    Ok(GrazingFamily { source: Some((curve, grid)), sign, launches })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inner(d: &Domain) -> Interval {
        let (id, iv) = d.decomposition().concave_intervals().next().unwrap();
        assert_eq!(id, 1);
        iv
    }

    #[test]
    fn annulus_inner_family_hits_outer_circle() {
        let d = Domain::annulus(1.0, 0.3).unwrap();
        let f = trace_grazing_family(&d, 1, inner(&d), 64, 1.0, LaunchSign::Plus, Horizon::Length(3.0)).unwrap();
        assert_eq!(f.len(), 64);
        for l in &f.launches {
            assert!(l.phase.velocity().dot(&d.curves()[1].normal(l.tau)).abs() < 1e-12);
            let e = &l.cycle.events[0];
            assert_eq!(e.curve, 0);
            assert!(e.incidence > 0.5);
        }
        let taus: Vec<f64> = f.launches.iter().map(|l| l.tau).collect();
        assert!(taus.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn empty_grid_and_convex_interval_rejected() {
        let d = Domain::annulus(1.0, 0.3).unwrap();
        let iv = inner(&d);
        assert_eq!(
            trace_grazing_family(&d, 1, iv, 0, 1.0, LaunchSign::Plus, Horizon::Unbounded),
            Err(GrazingError::EmptyInterval)
        );
        let outer = d.decomposition().curve(0).convex[0];
        assert_eq!(
            trace_grazing_family(&d, 0, outer, 4, 1.0, LaunchSign::Plus, Horizon::Unbounded),
            Err(GrazingError::NotConcave(0))
        );
    }
}

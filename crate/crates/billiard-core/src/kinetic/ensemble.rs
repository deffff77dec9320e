use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::KineticError;
use crate::geometry::{Domain, Location};
use crate::math::{cross, lift, Vec2, Vec3};
use crate::trajectory::{lift_cylinder, trace_cycles, Horizon, PhasePoint, TraceError, TraceOptions};

/// Weighted particles. Sampling draws each particle from its own ChaCha8
/// stream so results do not depend on evaluation order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble {
    pub particles: Vec<PhasePoint>,
    pub weights: Vec<f64>,
    pub seed: Option<u64>,
}

impl ParticleEnsemble {
    pub fn new(particles: Vec<PhasePoint>, weights: Vec<f64>) -> Result<Self, KineticError> {
        let e = Self { particles, weights, seed: None };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<(), KineticError> {
        if self.particles.is_empty() || self.weights.len() != self.particles.len() {
            return Err(KineticError::EmptyEnsemble);
        }
        match self.weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            Some(index) => Err(KineticError::InvalidWeight { index }),
            None => Ok(()),
        }
    }

    /// `count` unit-weight particles, uniform in the cross section and the
    /// axial period, with velocities from `exp(-|v|^2/2)` conditioned on
    /// the cross-section speed lying in `band`.
    pub fn maxwellian(domain: &Domain, count: usize, band: (f64, f64), seed: u64) -> Result<Self, KineticError> {
        if domain.is_sandbox() {
            return Err(KineticError::Sandbox);
        }
        if count == 0 {
            return Err(KineticError::EmptyEnsemble);
        }
        if !(band.0 >= 0.0 && band.1 > band.0) {
            return Err(KineticError::InvalidGrid("speed band must be increasing"));
        }
        let (lo, hi) = domain.bounds();
        let particles = (0..count)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let x = loop {
                    let x = Vec2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
                    if domain.locate(x, 0.0) == Location::Inside {
                        break x;
                    }
                };
                let v = loop {
                    let v: [f64; 3] = core::array::from_fn(|_| rng.sample(StandardNormal));
                    let s = v[0].hypot(v[2]);
                    if s >= band.0 && s <= band.1 {
                        break Vec3::from(v);
                    }
                };
                let axial = rng.random_range(0.0..domain.height());
                PhasePoint::new(lift(x, axial), v, 0.0)
            })
            .collect();
        Ok(Self { particles, weights: alloc::vec![1.0; count], seed: Some(seed) })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn energy(&self) -> f64 {
        self.particles.iter().zip(&self.weights).map(|(p, w)| 0.5 * w * p.v.norm_squared()).sum()
    }
}

/// Centre of the axis the cross section is symmetric about.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisFit {
    pub center: Vec2,
    /// `max |(x - x0) x n(x)|` over boundary samples, relative to the diameter.
    pub residual: f64,
}

const AXIS_SAMPLES: usize = 256;

/// Least-squares centre `x0` of `(x - x0) x n(x) = 0` over boundary samples;
/// `Some` when the worst sample misses by less than `tol` (relative to the
/// diameter). A rotationally symmetric cross section has all normals
/// through its centre.
pub fn axis_symmetry_test(domain: &Domain, tol: f64) -> Option<AxisFit> {
    if domain.is_sandbox() {
        return None;
    }
    let samples: Vec<(Vec2, Vec2)> = domain
        .curves()
        .iter()
        .flat_map(|c| c.samples(AXIS_SAMPLES).into_iter().map(move |t| (c.point(t), c.normal(t))))
        .collect();
    // (x - x0) x n = cross(x, n) - (x0.x n.y - x0.y n.x)
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, n) in &samples {
        let (g1, g2, r) = (n.y, -n.x, cross(*x, *n));
        a11 += g1 * g1;
        a12 += g1 * g2;
        a22 += g2 * g2;
        b1 += g1 * r;
        b2 += g2 * r;
    }
    let det = a11 * a22 - a12 * a12;
    if !(det.abs() > 1e-12 * (a11 + a22).powi(2)) {
        return None;
    }
    let center = Vec2::new((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det);
    let residual = samples.iter().map(|(x, n)| cross(x - center, *n).abs()).fold(0.0, f64::max) / domain.diameter();
    (residual < tol).then_some(AxisFit { center, residual })
}

/// Which axis the angular momentum is measured about.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisMode {
    /// Run [`axis_symmetry_test`] with this tolerance; no angular entry
    /// when it fails.
    Detect(f64),
    /// Measure about this centre whether or not the scene is symmetric.
    Fixed(Vec2),
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngularDrift {
    pub center: Vec2,
    pub detected: bool,
    pub initial: f64,
    pub final_value: f64,
    /// `sum w |L_i' - L_i| / sum w |L_i|`.
    pub drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConservationReport {
    pub particles: usize,
    pub quarantined: usize,
    pub mass: (f64, f64),
    pub energy: (f64, f64),
    pub mass_drift: f64,
    /// `|E' - E| / E`.
    pub energy_drift: f64,
    pub angular: Option<AngularDrift>,
    pub total_bounces: u64,
    pub min_bounces: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transported {
    pub ensemble: ParticleEnsemble,
    pub report: ConservationReport,
    /// Particles whose trace failed, left at their initial state.
    pub quarantine: Vec<(usize, TraceError)>,
}

/// Moment about the cylinder axis through `center`: `((x - x0) x e2) . v`.
fn moment(p: &PhasePoint, center: Vec2) -> f64 {
    let r = p.position() - center;
    r.x * p.v.z - r.y * p.v.x
}

/// Advances every particle by `duration` of specular free flight, jumping
/// from bounce to bounce.
pub fn transport_ensemble(
    domain: &Domain,
    ensemble: &ParticleEnsemble,
    duration: f64,
    axis: AxisMode,
    opts: &TraceOptions,
) -> Result<Transported, KineticError> {
    ensemble.validate()?;
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(KineticError::InvalidGrid("duration must be finite and non-negative"));
    }
    let opts = opts.with_horizon(Horizon::Time(duration));
    let sigma = opts.direction.sign();
    let mut out = ensemble.clone();
    let mut quarantine = Vec::new();
    let (mut total, mut min) = (0u64, usize::MAX);
    for (i, p) in ensemble.particles.iter().enumerate() {
        let end = p.t + sigma * duration;
        let state = trace_cycles(domain, p, &opts).and_then(|c| match &c.failure {
            Some(e) => Err(e.clone()),
            None => c.state_at(end).map(|s| (s, c.events.len())).ok_or(TraceError::BounceCapExceeded(opts.bounce_cap)),
        });
        match state {
            Ok(((x, v), n)) => {
                total += n as u64;
                min = min.min(n);
                out.particles[i] =
                    PhasePoint::new(lift(x, lift_cylinder(p, end, domain.height())), lift(v, p.v.y), end);
            }
            Err(e) => quarantine.push((i, e)),
        }
    }
    let center = match axis {
        AxisMode::Detect(tol) => axis_symmetry_test(domain, tol).map(|f| (f.center, true)),
        AxisMode::Fixed(c) => Some((c, false)),
        AxisMode::Off => None,
    };
    let angular = center.map(|(center, detected)| {
        let (mut l0, mut l1, mut change, mut scale) = (0.0, 0.0, 0.0, 0.0);
        for ((a, b), w) in ensemble.particles.iter().zip(&out.particles).zip(&ensemble.weights) {
            let (m0, m1) = (moment(a, center), moment(b, center));
            l0 += w * m0;
            l1 += w * m1;
            change += w * (m1 - m0).abs();
            scale += w * m0.abs();
        }
        AngularDrift {
            center,
            detected,
            initial: l0,
            final_value: l1,
            drift: if scale > 0.0 { change / scale } else { 0.0 },
        }
    });
    let (m0, m1, e0, e1) = (ensemble.mass(), out.mass(), ensemble.energy(), out.energy());
    let report = ConservationReport {
        particles: ensemble.len(),
        quarantined: quarantine.len(),
        mass: (m0, m1),
        energy: (e0, e1),
        mass_drift: if m0 > 0.0 { (m1 - m0).abs() / m0 } else { 0.0 },
        energy_drift: if e0 > 0.0 { (e1 - e0).abs() / e0 } else { 0.0 },
        angular,
        total_bounces: total,
        min_bounces: if min == usize::MAX { 0 } else { min },
    };
    Ok(Transported { ensemble: out, report, quarantine })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_detection() {
        let disk = axis_symmetry_test(&Domain::disk(1.0).unwrap(), 1e-9).unwrap();
        assert!(disk.center.norm() < 1e-10);
        assert!(axis_symmetry_test(&Domain::annulus(1.0, 0.3).unwrap(), 1e-9).unwrap().center.norm() < 1e-10);
        assert!(axis_symmetry_test(&Domain::polar(0.3, 3).unwrap(), 1e-3).is_none());
        assert!(axis_symmetry_test(&Domain::ellipse(2.0, 1.0).unwrap(), 1e-3).is_none());
    }

    #[test]
    fn sampling_is_reproducible_and_in_band() {
        let d = Domain::disk(1.0).unwrap();
        let a = ParticleEnsemble::maxwellian(&d, 50, (0.5, 2.0), 11).unwrap();
        assert_eq!(a, ParticleEnsemble::maxwellian(&d, 50, (0.5, 2.0), 11).unwrap());
        // per-particle streams: a prefix of a larger ensemble is the same
        let b = ParticleEnsemble::maxwellian(&d, 60, (0.5, 2.0), 11).unwrap();
        assert_eq!(a.particles[..], b.particles[..50]);
        for p in &a.particles {
            let s = p.velocity().norm();
            assert!((0.5..=2.0).contains(&s));
            assert!(d.contains(p.position(), 0.0));
        }
    }

    #[test]
    fn diameter_particle_conserves_energy() {
        let d = Domain::disk(1.0).unwrap();
        let p = PhasePoint::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.2, 0.0), 0.0);
        let e = ParticleEnsemble::new(alloc::vec![p], alloc::vec![1.0]).unwrap();
        let r = transport_ensemble(&d, &e, 2000.5, AxisMode::Detect(1e-9), &TraceOptions::forward()).unwrap();
        assert_eq!(r.report.min_bounces, 1000);
        assert!(r.report.energy_drift < 1e-12);
        assert_eq!(r.report.mass_drift, 0.0);
    }

    #[test]
    fn disk_moments_are_invariant_and_polar_ones_are_not() {
        let d = Domain::disk(1.0).unwrap();
        let e = ParticleEnsemble::maxwellian(&d, 40, (0.5, 2.0), 3).unwrap();
        let r = transport_ensemble(&d, &e, 50.0, AxisMode::Detect(1e-9), &TraceOptions::forward()).unwrap();
        let a = r.report.angular.unwrap();
        assert!(a.detected && a.drift < 1e-9, "{a:?}");
        let p = Domain::polar(0.3, 3).unwrap();
        let e = ParticleEnsemble::maxwellian(&p, 20, (0.5, 2.0), 3).unwrap();
        let r = transport_ensemble(&p, &e, 20.0, AxisMode::Detect(1e-6), &TraceOptions::forward()).unwrap();
        assert!(r.report.angular.is_none());
        let r = transport_ensemble(&p, &e, 20.0, AxisMode::Fixed(Vec2::zeros()), &TraceOptions::forward()).unwrap();
        assert!(r.report.angular.unwrap().drift > 1e-2);
        assert!(r.report.energy_drift < 1e-12);
    }

    #[test]
    fn invalid_ensembles() {
        assert_eq!(ParticleEnsemble::new(Vec::new(), Vec::new()), Err(KineticError::EmptyEnsemble));
        let p = PhasePoint::planar(Vec2::zeros(), Vec2::new(1.0, 0.0));
        assert_eq!(
            ParticleEnsemble::new(alloc::vec![p, p], alloc::vec![1.0, f64::NAN]),
            Err(KineticError::InvalidWeight { index: 1 })
        );
    }
}

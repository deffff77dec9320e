use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{JacobianError, JacobianOptions};
use crate::geometry::{Domain, Location};
use crate::math::{Vec2, Vec3};
use crate::trajectory::{trace_cycles, PhasePoint, SpecularCycle};

/// A phase whose backward cycle has `bounces` clean hits.
#[derive(Clone, Debug)]
pub struct Sample {
    pub phase: PhasePoint,
    pub cycle: SpecularCycle,
}

/// Deterministic corpus of interior phases whose first `bounces` backward
/// hits all have `|v . n| >= min_incidence * |v|` and stay away from the
/// launch. Positions keep a distance of `0.02 * diam` from the boundary and
/// speeds lie in `[0.5, 2]`.
pub fn sample_phases(
    domain: &Domain,
    count: usize,
    bounces: usize,
    min_incidence: f64,
    seed: u64,
    opts: &JacobianOptions,
) -> Result<Vec<Sample>, JacobianError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = domain.bounds();
    let margin = 0.02 * domain.diameter();
    let trace = opts.trace.with_cap(bounces);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(JacobianError::HypothesisViolated("corpus rejection rate too high"));
        }
        let x = Vec2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        if domain.locate(x, margin) != Location::Inside || domain.project(x).distance < margin {
            continue;
        }
        let angle = rng.random_range(0.0..core::f64::consts::TAU);
        let speed = rng.random_range(0.5..2.0);
        let axial = rng.random_range(-1.0..1.0);
        let (s, c) = angle.sin_cos();
        let phase = PhasePoint::new(Vec3::new(x.x, 0.0, x.y), Vec3::new(speed * c, axial, speed * s), 0.0);
        let Ok(cycle) = trace_cycles(domain, &phase, &trace) else { continue };
        let clean = cycle.failure.is_none()
            && cycle.events.len() == bounces
            && cycle.events.iter().all(|e| !e.class.is_grazing() && e.incidence >= min_incidence * speed);
        if clean {
            out.push(Sample { phase, cycle });
        }
    }
    Ok(out)
}

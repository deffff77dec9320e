use alloc::vec;
use alloc::vec::Vec;

use super::grid::{KineticGrid, Node, SpaceGrid};
use super::KineticError;
use crate::geometry::Domain;
use crate::math::{lift, Vec2, TAU};
use crate::trajectory::{trace_cycles, Horizon, PhasePoint, TraceOptions};

/// Values on the grid, indexed `[velocity][cell]` over the full box; cells
/// outside the domain hold zero.
type Field = Vec<Vec<f64>>;

/// Backward characteristic samples of one node: `(X, V)` after flights of
/// `q * dt`, `q = 0..=steps`.
struct Characteristic {
    cell: usize,
    velocity: usize,
    samples: Vec<(Vec2, Vec2)>,
}

struct Setup {
    space: SpaceGrid,
    velocities: Vec<Vec2>,
    chars: Vec<Characteristic>,
    excluded: Vec<Node>,
    dt: f64,
}

fn setup(
    grid: &KineticGrid,
    domain: &Domain,
    horizon: f64,
    steps: usize,
    opts: &TraceOptions,
) -> Result<Setup, KineticError> {
    grid.validate()?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(KineticError::InvalidGrid("time horizon must be finite and non-negative"));
    }
    let space = SpaceGrid::new(domain, grid.nx, grid.ny)?;
    let velocities = grid.velocities();
    let dt = horizon / steps as f64;
    let opts = TraceOptions { direction: crate::trajectory::Direction::Backward, ..*opts }
        .with_horizon(Horizon::Time(horizon));
    let (mut chars, mut excluded) = (Vec::new(), Vec::new());
    for cell in space.cells() {
        let x = space.center(cell);
        for (vi, &v) in velocities.iter().enumerate() {
            let phase = PhasePoint::new(lift(x, 0.0), lift(v, 0.0), horizon);
            let samples = trace_cycles(domain, &phase, &opts)
                .ok()
                .filter(|c| c.failure.is_none())
                .and_then(|c| (0..=steps).map(|q| c.state_at(horizon - q as f64 * dt)).collect::<Option<Vec<_>>>());
            match samples {
                Some(samples) => chars.push(Characteristic { cell, velocity: vi, samples }),
                None => excluded.push(Node { cell, velocity: vi, x, v }),
            }
        }
    }
    Ok(Setup { space, velocities, chars, excluded, dt })
}

fn sup(field: &Field, chars: &[Characteristic]) -> f64 {
    chars.iter().map(|c| field[c.velocity][c.cell].abs()).fold(0.0, f64::max)
}

fn node_values(field: &Field, chars: &[Characteristic], space: &SpaceGrid, velocities: &[Vec2]) -> Vec<(Node, f64)> {
    chars
        .iter()
        .map(|c| {
            let node = Node { cell: c.cell, velocity: c.velocity, x: space.center(c.cell), v: velocities[c.velocity] };
            (node, field[c.velocity][c.cell])
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    /// Sup norm over the traced nodes at each time.
    pub sup: Vec<f64>,
    /// `exp(-nu0 t) sup |f0|`.
    pub bound: Vec<f64>,
    /// Node values at the final time.
    pub values: Vec<(Node, f64)>,
    /// Nodes whose characteristic could not be traced.
    pub excluded: Vec<Node>,
}

/// `f(t, x, v) = exp(-nu0 t) f0(X(0; t, x, v), V(0; t, x, v))` on the grid at
/// `grid.steps + 1` uniform times over `[0, horizon]`.
pub fn relaxation_decay(
    grid: &KineticGrid,
    domain: &Domain,
    horizon: f64,
    opts: &TraceOptions,
) -> Result<DecayCurve, KineticError> {
    let s = setup(grid, domain, horizon, grid.steps, opts)?;
    let diam = domain.diameter();
    let nv = s.velocities.len();
    let f0_sup = s
        .chars
        .iter()
        .flat_map(|c| c.samples.iter())
        .map(|&(x, v)| grid.initial.eval(x, v, diam).abs())
        .fold(0.0, f64::max);
    let mut curve =
        DecayCurve { times: Vec::new(), sup: Vec::new(), bound: Vec::new(), values: Vec::new(), excluded: s.excluded };
    let mut field: Field = vec![vec![0.0; s.space.inside.len()]; nv];
    for n in 0..=grid.steps {
        let t = n as f64 * s.dt;
        let decay = (-grid.nu0 * t).exp();
        for c in &s.chars {
            let (x, v) = c.samples[n];
            field[c.velocity][c.cell] = decay * grid.initial.eval(x, v, diam);
        }
        curve.times.push(t);
        curve.sup.push(sup(&field, &s.chars));
        curve.bound.push(decay * f0_sup);
    }
    curve.values = node_values(&field, &s.chars, &s.space, &s.velocities);
    Ok(curve)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GainIteration {
    pub times: Vec<f64>,
    /// `sup |f^(m+1) - f^(m)|` over all times and nodes, one per iteration.
    pub residuals: Vec<f64>,
    /// Set when some residual fails to decrease.
    pub non_contraction: bool,
    pub values: Vec<(Node, f64)>,
    pub excluded: Vec<Node>,
}

/// Picard iteration for `f_t + v . grad f + nu0 f = int_{|u| <= cutoff} f du`
/// along specular characteristics, starting from the gain-free solution:
///
/// `f^(m+1)(t) = e^{-nu0 t} f0(X(0), V(0)) + int_0^t e^{-nu0 (t - s)} rho^(m)(s, X(s)) ds`
///
/// with `rho^(m)` the velocity moment over the grid, interpolated in space,
/// and the trapezoid rule on the time grid.
pub fn duhamel_gain_iteration(
    grid: &KineticGrid,
    domain: &Domain,
    horizon: f64,
    iterations: usize,
    opts: &TraceOptions,
) -> Result<GainIteration, KineticError> {
    if iterations == 0 {
        return Err(KineticError::InvalidGrid("need at least one iteration"));
    }
    let s = setup(grid, domain, horizon, grid.steps, opts)?;
    let diam = domain.diameter();
    let (nv, ncell, nt) = (s.velocities.len(), s.space.inside.len(), grid.steps + 1);
    let weights: Vec<f64> = (0..nv).map(|vi| grid.gain_weight(vi % grid.speeds)).collect();
    let decay: Vec<f64> = (0..nt).map(|q| (-grid.nu0 * q as f64 * s.dt).exp()).collect();
    let mut free: Vec<Field> = vec![vec![vec![0.0; ncell]; nv]; nt];
    for c in &s.chars {
        for n in 0..nt {
            let (x, v) = c.samples[n];
            free[n][c.velocity][c.cell] = decay[n] * grid.initial.eval(x, v, diam);
        }
    }
    let mut f = free.clone();
    let mut residuals = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let rho: Vec<Vec<f64>> = f
            .iter()
            .map(|field| (0..ncell).map(|cell| (0..nv).map(|vi| weights[vi] * field[vi][cell]).sum()).collect())
            .collect();
        let mut next = free.clone();
        for c in &s.chars {
            for n in 1..nt {
                let mut gain = 0.0;
                for l in 0..=n {
                    let trap = if l == 0 || l == n { 0.5 } else { 1.0 };
                    let y = c.samples[n - l].0;
                    gain += trap * decay[n - l] * s.space.interpolate(&rho[l], y);
                }
                next[n][c.velocity][c.cell] += s.dt * gain;
            }
        }
        let r = s
            .chars
            .iter()
            .flat_map(|c| (0..nt).map(move |n| (c, n)))
            .map(|(c, n)| (next[n][c.velocity][c.cell] - f[n][c.velocity][c.cell]).abs())
            .fold(0.0, f64::max);
        residuals.push(r);
        f = next;
    }
    let non_contraction = residuals.windows(2).any(|w| w[1] >= w[0] && w[0] > 0.0);
    Ok(GainIteration {
        times: (0..nt).map(|n| n as f64 * s.dt).collect(),
        residuals,
        non_contraction,
        values: node_values(&f[nt - 1], &s.chars, &s.space, &s.velocities),
        excluded: s.excluded,
    })
}

/// Explicit first-order semi-Lagrangian upwind stepper for the same model,
/// used as an independent reference. Each step of length
/// `dt <= cfl * min(h) / max|v|` follows the exact specular flight back to
/// the foot, interpolates the previous field there (bilinear in space,
/// linear in angle) and applies the loss exactly. The gain is integrated
/// with the exponential trapezoid rule between its value at the foot and a
/// predicted value at the arrival point.
pub fn upwind_reference(
    grid: &KineticGrid,
    domain: &Domain,
    horizon: f64,
    cfl: f64,
    opts: &TraceOptions,
) -> Result<Vec<(Node, f64)>, KineticError> {
    if !(cfl > 0.0) {
        return Err(KineticError::InvalidGrid("CFL number must be positive"));
    }
    grid.validate()?;
    let space = SpaceGrid::new(domain, grid.nx, grid.ny)?;
    let dt_max = cfl * space.h.x.min(space.h.y) / grid.band.1;
    let steps = ((horizon / dt_max).ceil() as usize).max(1);
    let s = setup(grid, domain, horizon / steps as f64, 1, opts)?;
    let diam = domain.diameter();
    let (nv, ncell) = (s.velocities.len(), s.space.inside.len());
    let weights: Vec<f64> = (0..nv).map(|vi| grid.gain_weight(vi % grid.speeds)).collect();
    let loss = (-grid.nu0 * s.dt).exp();
    // exponential trapezoid weights for a gain linear over the step
    let (w0, w1) = if grid.nu0 * s.dt < 1e-8 {
        (0.5 * s.dt, 0.5 * s.dt)
    } else {
        let total = (1.0 - loss) / grid.nu0;
        let late = total - ((1.0 - loss) / (grid.nu0 * grid.nu0) - s.dt * loss / grid.nu0) / s.dt;
        (total - late, late)
    };
    let mut f: Field = vec![vec![0.0; ncell]; nv];
    for c in &s.chars {
        let (x, v) = c.samples[0];
        f[c.velocity][c.cell] = grid.initial.eval(x, v, diam);
    }
    let cell_angle = TAU / grid.directions as f64;
    let density =
        |f: &Field| -> Vec<f64> { (0..ncell).map(|cell| (0..nv).map(|vi| weights[vi] * f[vi][cell]).sum()).collect() };
    for _ in 0..steps {
        let rho = density(&f);
        let mut free: Field = vec![vec![0.0; ncell]; nv];
        let mut rho_foot: Field = vec![vec![0.0; ncell]; nv];
        for c in &s.chars {
            let (y, w) = c.samples[1];
            let k = c.velocity % grid.speeds;
            let u = w.y.atan2(w.x).rem_euclid(TAU) / cell_angle - 0.5;
            let j0 = u.floor();
            let frac = u - j0;
            let ja = (j0 as isize).rem_euclid(grid.directions as isize) as usize;
            let jb = (ja + 1) % grid.directions;
            let fa = s.space.interpolate(&f[ja * grid.speeds + k], y);
            let fb = s.space.interpolate(&f[jb * grid.speeds + k], y);
            free[c.velocity][c.cell] = loss * ((1.0 - frac) * fa + frac * fb);
            rho_foot[c.velocity][c.cell] = s.space.interpolate(&rho, y);
        }
        let mut predicted = free.clone();
        for c in &s.chars {
            predicted[c.velocity][c.cell] += (w0 + w1) * rho_foot[c.velocity][c.cell];
        }
        let rho_end = density(&predicted);
        for c in &s.chars {
            free[c.velocity][c.cell] += w0 * rho_foot[c.velocity][c.cell] + w1 * rho_end[c.cell];
        }
        f = free;
    }
    Ok(node_values(&f, &s.chars, &s.space, &s.velocities))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic::InitialDatum;

    fn opts() -> TraceOptions {
        TraceOptions::backward()
    }

    #[test]
    fn constant_data_decays_exactly() {
        let d = Domain::disk(1.0).unwrap();
        let g = KineticGrid { initial: InitialDatum::Constant(2.0), nu0: 0.7, ..Default::default() };
        let c = relaxation_decay(&g, &d, 3.0, &opts()).unwrap();
        for (t, s) in c.times.iter().zip(&c.sup) {
            assert!((s - 2.0 * (-0.7 * t).exp()).abs() < 1e-12 * s);
        }
        assert!(c.excluded.is_empty());
    }

    #[test]
    fn zero_time_is_identity() {
        let d = Domain::polar(0.3, 3).unwrap();
        let g = KineticGrid { initial: InitialDatum::Swirl { amplitude: 0.5 }, ..Default::default() };
        let c = relaxation_decay(&g, &d, 0.0, &opts()).unwrap();
        for (node, value) in &c.values {
            assert_eq!(*value, g.initial.eval(node.x, node.v, d.diameter()));
        }
    }

    #[test]
    fn decay_is_monotone_and_bounded() {
        let d = Domain::annulus(1.0, 0.3).unwrap();
        let g = KineticGrid { initial: InitialDatum::Swirl { amplitude: 0.8 }, ..Default::default() };
        let c = relaxation_decay(&g, &d, 5.0, &opts()).unwrap();
        assert!(c.sup.windows(2).all(|w| w[1] <= w[0]));
        assert!(c.sup.iter().zip(&c.bound).all(|(s, b)| *s <= b * (1.0 + 1e-15)));
    }

    #[test]
    fn zero_data_stays_zero() {
        let d = Domain::disk(1.0).unwrap();
        let g = KineticGrid { initial: InitialDatum::Constant(0.0), ..Default::default() };
        let r = duhamel_gain_iteration(&g, &d, 1.0, 3, &opts()).unwrap();
        assert!(r.values.iter().all(|(_, v)| *v == 0.0));
        assert!(r.residuals.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gain_off_matches_relaxation() {
        let d = Domain::ellipse(2.0, 1.0).unwrap();
        let g = KineticGrid { cutoff: 0.0, initial: InitialDatum::Tilted { amplitude: 0.5 }, ..Default::default() };
        let r = duhamel_gain_iteration(&g, &d, 2.0, 2, &opts()).unwrap();
        let c = relaxation_decay(&g, &d, 2.0, &opts()).unwrap();
        assert_eq!(r.values, c.values);
    }

    #[test]
    fn homogeneous_gain_matches_the_ode() {
        // f0 = 1 everywhere: f(t) = g(t) with g' = -g + A g, A the band area
        let d = Domain::disk(1.0).unwrap();
        let g = KineticGrid { initial: InitialDatum::Constant(1.0), steps: 200, ..Default::default() };
        let area = core::f64::consts::PI * (0.09 - 0.01);
        let r = duhamel_gain_iteration(&g, &d, 1.0, 8, &opts()).unwrap();
        let exact = ((area - 1.0) * 1.0f64).exp();
        for (_, v) in &r.values {
            assert!((v - exact).abs() < 1e-5, "{v} {exact}");
        }
        assert!(!r.non_contraction);
    }

    #[test]
    fn picard_agrees_with_upwind_stepping() {
        let d = Domain::disk(1.0).unwrap();
        let g = KineticGrid::default();
        let r = duhamel_gain_iteration(&g, &d, 1.0, 8, &opts()).unwrap();
        let u = upwind_reference(&g, &d, 1.0, 0.2, &opts()).unwrap();
        let err = r.values.iter().zip(&u).map(|(a, b)| (a.1 - b.1).abs()).fold(0.0, f64::max);
        let scale = u.iter().map(|b| b.1.abs()).fold(0.0, f64::max);
        assert!(err / scale < 1e-3, "{}", err / scale);
        assert!(r.residuals.windows(2).all(|w| w[1] < 0.2 * w[0]));
    }
}

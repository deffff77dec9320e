//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero on any unexpected result.

use std::f64::consts::TAU;
use std::path::Path;
use std::time::Instant;

use billiard::commands::jacobian::cov_consistent;
use billiard::scene::{parse_scene, Scene};
use billiard_core::geometry::Domain;
use billiard_core::grazing::{
    build_sticky_example, delta_star, detect_sticky, sample_excluded_directions, ArcConstruction, Verdict,
    STICKY_TARGET,
};
use billiard_core::jacobians::{
    bounce_jacobian, chain_determinant, change_of_variable_check, first_bounce_jacobian_global, residual,
    sample_phases, Condition, CovOptions, JacobianOptions,
};
use billiard_core::kinetic::{
    duhamel_gain_iteration, relaxation_decay, transport_ensemble, upwind_reference, AxisMode, InitialDatum,
    KineticGrid, ParticleEnsemble,
};
use billiard_core::trajectory::{bounce_count, trace_cycles, Horizon, PhasePoint, TraceOptions};
use billiard_core::{Vec2, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative derivative residual, with an absolute floor of 1e-9.
const FD_TOL: f64 = 1e-5;
const JACOBIAN_BUDGET_S: f64 = 10.0;
const DET_FORMULA_TOL: f64 = 1e-8;
const DET_FD_TOL: f64 = 1e-6;
const CHAIN_TOL: f64 = 1e-10;
const STICKY_TOL: f64 = 1e-6;
const DELTA_STAR_TOL: f64 = 1e-12;
const ENERGY_TOL: f64 = 1e-12;
const ANGULAR_TOL: f64 = 1e-9;
const CONTROL_DRIFT: f64 = 1e-2;
const CHORD_SLACK: f64 = 1e-12;
const COV_TOL: f64 = 1e-5;
const DECAY_TOL: f64 = 1e-12;
const DUHAMEL_TOL: f64 = 1e-2;
/// Largest ratio of consecutive Picard residuals counted as geometric decay.
const PICARD_RATIO: f64 = 0.5;
const SEED: u64 = 20240917;

struct Line {
    passed: bool,
    detail: String,
}

impl Line {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

fn load(name: &str) -> Scene {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes").join(name);
    parse_scene(&path).and_then(|c| c.build()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn corpus_scenes() -> Vec<(&'static str, Domain)> {
    ["disk", "annulus", "ellipse", "polar"].into_iter().map(|n| (n, load(&format!("{n}.scene")).domain)).collect()
}

/// 25 phases per scene, each with three clean backward bounces.
const CORPUS_PER_SCENE: usize = 25;
const CORPUS_BOUNCES: usize = 3;

fn jacobian_derivatives() -> Line {
    let opts = JacobianOptions::default();
    let start = Instant::now();
    let (mut worst, mut entries, mut bounces, mut errors) = (0.0f64, 0usize, 0usize, 0usize);
    for (_, d) in corpus_scenes() {
        let samples = sample_phases(&d, CORPUS_PER_SCENE, CORPUS_BOUNCES, 0.1, SEED, &opts).expect("corpus");
        for s in &samples {
            bounces += 1;
            let mut reports = vec![first_bounce_jacobian_global(&d, &s.phase, &opts)];
            reports.extend((1..CORPUS_BOUNCES).map(|k| bounce_jacobian(&d, &s.cycle, k, &opts)));
            for r in reports {
                match r {
                    Ok(r) => {
                        entries += r.entries.len();
                        worst = worst.max(r.max_residual);
                    }
                    Err(_) => errors += 1,
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Line::new(
        worst < FD_TOL && errors == 0 && secs < JACOBIAN_BUDGET_S,
        format!("{bounces} phases, {entries} derivatives, max residual {worst:.2e}, {errors} errors, {secs:.2} s"),
    )
}

fn determinant_identities() -> Line {
    let opts = JacobianOptions::default();
    let (mut formula, mut fd, mut chain, mut reduced, mut errors) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0usize);
    for (_, d) in corpus_scenes() {
        for s in sample_phases(&d, CORPUS_PER_SCENE, CORPUS_BOUNCES, 0.1, SEED, &opts).expect("corpus") {
            match chain_determinant(&d, &s.cycle, 1, CORPUS_BOUNCES, &opts) {
                Ok(c) => {
                    for b in &c.per_bounce {
                        formula = formula.max(rel(b.analytic, b.formula));
                        fd = fd.max(rel(b.analytic, b.fd));
                    }
                    chain = chain.max(rel(c.product_analytic, c.closed_form));
                    reduced = reduced.max(residual(c.reduced, c.reduced_fd));
                }
                Err(_) => errors += 1,
            }
        }
    }
    Line::new(
        formula < DET_FORMULA_TOL && fd < DET_FD_TOL && chain < CHAIN_TOL && reduced < FD_TOL && errors == 0,
        format!(
            "formula {formula:.2e}, finite differences {fd:.2e}, chain {chain:.2e}, reduced chain {reduced:.2e}, {errors} errors"
        ),
    )
}

/// The literal start `X(0) = -1` fails: the tangent chords of that arc are
/// parallel to the required ones but offset from them. The envelope start
/// `X(0) = -1/3` passes; both outcomes are pinned so a change in either
/// shows up as an unexpected result.
fn parabola_sticky() -> (Line, bool) {
    let target = Vec2::new(STICKY_TARGET[0], STICKY_TARGET[1]);
    let run = |construction| {
        let ex = build_sticky_example(0.05, 200, construction).expect("arc");
        let r = detect_sticky(&ex.family(1.0, 4.0).expect("family"), 1, STICKY_TOL).expect("report");
        let miss = r.point.map_or(f64::INFINITY, |p| (p - target).norm());
        let offset = ex.arc.iter().map(|a| a.chord_offset.abs()).fold(0.0, f64::max);
        (r.verdict, miss, offset)
    };
    let literal = run(ArcConstruction::Integrated { x0: -1.0 });
    let envelope = run(ArcConstruction::Envelope);
    let star = (delta_star(0.05) - (1.05 - 1.0025f64.sqrt())).abs();
    let literal_ok = literal.0 == Verdict::Sticky && literal.1 < STICKY_TOL;
    let envelope_ok = envelope.0 == Verdict::Sticky && envelope.1 < STICKY_TOL;
    let line = Line::new(
        literal_ok && star < DELTA_STAR_TOL,
        format!(
            "X(0) = -1: {} at distance {:.3} from (1,1), chord offset up to {:.3}; envelope X(0) = -1/3: {} at {:.1e}; delta_* error {star:.1e}",
            literal.0.label(),
            literal.1,
            literal.2,
            envelope.0.label(),
            envelope.1
        ),
    );
    let expected = !literal_ok && envelope_ok && star < DELTA_STAR_TOL;
    (line, expected)
}

fn conservation() -> Line {
    let disk = load("disk.scene").domain;
    let opts = TraceOptions::forward().with_cap(usize::MAX);
    let ensemble = ParticleEnsemble::maxwellian(&disk, 10_000, (1.0, 1.5), SEED).expect("ensemble");
    let r = transport_ensemble(&disk, &ensemble, 2100.0, AxisMode::Detect(1e-9), &opts).expect("transport").report;
    let angular = r.angular.map_or(f64::INFINITY, |a| a.drift);

    let polar = load("polar.scene").domain;
    let control = ParticleEnsemble::maxwellian(&polar, 1000, (1.0, 1.5), SEED).expect("ensemble");
    let c =
        transport_ensemble(&polar, &control, 200.0, AxisMode::Fixed(Vec2::zeros()), &opts).expect("transport").report;
    let control_drift = c.angular.map_or(0.0, |a| a.drift);
    Line::new(
        r.mass_drift == 0.0
            && r.quarantined == 0
            && r.min_bounces >= 1000
            && r.energy_drift < ENERGY_TOL
            && angular < ANGULAR_TOL
            && control_drift > CONTROL_DRIFT,
        format!(
            "{} particles, min {} bounces: mass {:.1e}, energy {:.1e}, angular {angular:.1e}; control angular {control_drift:.2}",
            r.particles, r.min_bounces, r.mass_drift, r.energy_drift
        ),
    )
}

/// Chord lengths of a billiard in concentric circles about the origin,
/// from first principles.
fn circle_chords(x: Vec2, v: Vec2, radii: &[f64], length: f64) -> Option<usize> {
    let (mut x, mut v) = (x, v.normalize());
    let mut travelled = 0.0;
    for n in 1.. {
        let b = x.dot(&v);
        let mut hit = f64::INFINITY;
        for &r in radii {
            let disc = b * b - (x.norm_squared() - r * r);
            if disc <= 0.0 {
                continue;
            }
            for t in [-b - disc.sqrt(), -b + disc.sqrt()] {
                if t > 1e-12 && t < hit {
                    hit = t;
                }
            }
        }
        // ties between the horizon and a bounce are not admissible
        if (travelled + hit - length).abs() < 1e-9 {
            return None;
        }
        if travelled + hit > length {
            return Some(n);
        }
        travelled += hit;
        x += v * hit;
        let normal = x.normalize();
        if v.dot(&normal).abs() < 1e-6 {
            return None;
        }
        v -= normal * (2.0 * v.dot(&normal));
    }
    unreachable!()
}

fn bounce_counts() -> Line {
    let opts = TraceOptions::forward();
    let disk = load("disk.scene").domain;
    let annulus = load("annulus.scene").domain;
    let planar = |x: Vec2, v: Vec2| PhasePoint::new(Vec3::new(x.x, 0.0, x.y), Vec3::new(v.x, 0.0, v.y), 0.0);

    let diameter = planar(Vec2::zeros(), Vec2::new(1.0, 0.0));
    let radial = planar(Vec2::new(0.3 + 1e-9, 0.0), Vec2::new(1.0, 0.0));
    let fixed = [
        (
            bounce_count(&disk, &diameter, 10.0, &opts).ok(),
            circle_chords(Vec2::zeros(), Vec2::new(1.0, 0.0), &[1.0], 10.0),
            6,
        ),
        (
            bounce_count(&annulus, &radial, 2.0, &opts).ok(),
            circle_chords(Vec2::new(0.3 + 1e-9, 0.0), Vec2::new(1.0, 0.0), &[1.0, 0.3], 2.0),
            3,
        ),
    ];
    let fixed_ok = fixed.iter().all(|(lib, brute, want)| *lib == Some(*want) && *brute == Some(*want));

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut compared, mut mismatches) = (0, 0);
    while compared < 1000 {
        let (domain, radii, inner) =
            if compared % 2 == 0 { (&disk, &[1.0][..], 0.0) } else { (&annulus, &[1.0, 0.3][..], 0.3) };
        let r = rng.random_range(inner + 0.01..0.99f64);
        let (a, b) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        let (x, v) = (Vec2::new(r * a.cos(), r * a.sin()), Vec2::new(b.cos(), b.sin()) * rng.random_range(0.5..2.0));
        let length = rng.random_range(0.5..12.0);
        let Some(brute) = circle_chords(x, v, radii, length) else { continue };
        compared += 1;
        if bounce_count(domain, &planar(x, v), length, &opts).ok() != Some(brute) {
            mismatches += 1;
        }
    }
    Line::new(
        fixed_ok && mismatches == 0,
        format!(
            "disk diameter {:?}, annulus radial {:?}; {mismatches} mismatches over {compared} random phases",
            fixed[0].0, fixed[1].0
        ),
    )
}

fn chord_monotonicity() -> Line {
    let domain = load("flat-point.scene").domain;
    let curve = &domain.curves()[0];
    let (lo, hi) = curve.range();
    let opts = TraceOptions::forward().with_horizon(Horizon::Length(10.0)).with_cap(100_000);
    let (mut runs, mut violations, mut worst) = (0, 0, f64::NEG_INFINITY);
    for i in 0..20 {
        let s0 = lo + 0.02 + 0.7 * (hi - lo) * i as f64 / 19.0;
        let p = curve.eval(s0);
        let t = if p.tangent().x < 0.0 { -p.tangent() } else { p.tangent() };
        let inward = -p.normal();
        for j in 0..25 {
            let angle = 0.002 + 0.15 * j as f64 / 24.0;
            let x = p.pos + inward * 1e-9;
            let v = t * angle.cos() + inward * angle.sin();
            let phase = PhasePoint::new(Vec3::new(x.x, 0.0, x.y), Vec3::new(v.x, 0.0, v.y), 0.0);
            let cycle = trace_cycles(&domain, &phase, &opts).expect("trace");
            let xs: Vec<f64> = cycle.events.iter().map(|e| e.position().x).collect();
            if xs.len() < 5 {
                continue;
            }
            runs += 1;
            for w in xs.windows(3) {
                let (a, b) = ((w[1] - w[0]).abs(), (w[2] - w[1]).abs());
                worst = worst.max(a - b);
                violations += (a > b + CHORD_SLACK) as usize;
            }
        }
    }
    Line::new(
        runs > 0 && violations == 0,
        format!("{runs} runs of 5+ bounces, {violations} violations, max l_i - l_i+1 {worst:.2e}"),
    )
}

fn change_of_variables() -> Line {
    let domain = load("annulus.scene").domain;
    let opts = CovOptions::default();
    let samples = sample_phases(&domain, 4, 1, 0.1, SEED, &opts.jacobian).expect("corpus");
    let (mut admissible, mut inconsistent, mut floor, mut windows, mut window_passes, mut excluded) =
        (0, 0, 0, 0, 0, 0);
    let mut worst = 0.0f64;
    for s in &samples {
        let at = s.phase.t - 0.2;
        for a in 0..8 {
            let s_prime = at - 3.0 * (a as f64 + 0.5) / 8.0;
            for b in 0..8 {
                let ang = TAU * (b as f64 + 0.5) / 8.0;
                let u = Vec3::new(0.8 * ang.cos(), 0.4, 0.8 * ang.sin());
                let Ok(r) = change_of_variable_check(&domain, &s.phase, at, u, s_prime, &opts) else {
                    excluded += 1;
                    continue;
                };
                inconsistent += !cov_consistent(&r, COV_TOL) as usize;
                if r.violations.is_empty() {
                    admissible += 1;
                    worst = worst.max(r.residual());
                    floor += (r.det_fd.abs() <= opts.eps_prime) as usize;
                }
                // probe the middle of the critical window as well
                if let Some(psi) = r.psi.filter(|p| *p < at) {
                    if let Ok(w) = change_of_variable_check(&domain, &s.phase, at, u, psi, &opts) {
                        if w.violations.contains(&Condition::CriticalWindow) {
                            windows += 1;
                            window_passes += w.pass as usize;
                        }
                    }
                }
            }
        }
    }
    Line::new(
        admissible > 0 && windows > 0 && inconsistent == 0 && floor == 0 && window_passes == 0,
        format!(
            "{admissible} admissible probes, max residual {worst:.2e}, {floor} below the floor; {windows} window probes, {window_passes} passing; {excluded} excluded"
        ),
    )
}

fn kinetic_toys() -> Line {
    let disk = load("disk.scene").domain;
    let opts = TraceOptions::backward();
    let constant = KineticGrid { initial: InitialDatum::Constant(1.0), ..KineticGrid::default() };
    let decay = relaxation_decay(&constant, &disk, 1.0, &opts).expect("decay");
    let decay_err =
        decay.times.iter().zip(&decay.sup).map(|(t, s)| (s - (-constant.nu0 * t).exp()).abs()).fold(0.0, f64::max);

    let grid = KineticGrid::default();
    let picard = duhamel_gain_iteration(&grid, &disk, 1.0, 6, &opts).expect("picard");
    let reference = upwind_reference(&grid, &disk, 1.0, 0.2, &opts).expect("upwind");
    let err = picard.values.iter().zip(&reference).map(|(a, b)| (a.1 - b.1).abs()).fold(0.0, f64::max);
    let scale = reference.iter().map(|b| b.1.abs()).fold(0.0, f64::max);
    let ratio = picard.residuals.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    Line::new(
        decay_err < DECAY_TOL && err / scale <= DUHAMEL_TOL && ratio <= PICARD_RATIO && picard.excluded.is_empty(),
        format!(
            "relaxation error {decay_err:.1e}; {}x{}x{}x{} grid: relative difference {:.1e}, worst residual ratio {ratio:.3}",
            grid.nx,
            grid.ny,
            grid.directions,
            grid.speeds,
            err / scale
        ),
    )
}

fn grazing_measure() -> Line {
    let domain = load("annulus.scene").domain;
    let x = Vec2::new(1.0, 0.0);
    let fractions: Vec<f64> = [256, 1024, 4096]
        .into_iter()
        .map(|n| sample_excluded_directions(&domain, x, n, 4, 10.0, &TraceOptions::backward()).expect("sweep").fraction)
        .collect();
    let halving = fractions.windows(2).all(|w| w[1] <= 0.5 * w[0]);
    Line::new(halving && fractions[2] > 0.0, format!("fractions {:?} at 256, 1024, 4096 directions", fractions))
}

fn main() {
    let (sticky, pinned) = parabola_sticky();
    let results = [
        (1, "jacobian derivatives", jacobian_derivatives(), true),
        (2, "determinant identities", determinant_identities(), true),
        // the literal arc is expected to fail; `pinned` checks the envelope arc
        (3, "sticky parabola", sticky, false),
        (4, "conservation", conservation(), true),
        (5, "bounce counts", bounce_counts(), true),
        (6, "chord monotonicity", chord_monotonicity(), true),
        (7, "change of variables", change_of_variables(), true),
        (8, "kinetic solvers", kinetic_toys(), true),
        (9, "grazing measure", grazing_measure(), true),
    ];
    let mut unexpected = !pinned as usize;
    for (n, name, line, expected) in results {
        let mark = if line.passed { "PASS" } else { "FAIL" };
        println!("criterion {n} {mark} {name}: {}", line.detail);
        unexpected += (line.passed != expected) as usize;
    }
    if !pinned {
        println!("criterion 3: envelope arc or delta_* check changed");
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected results");
        std::process::exit(1);
    }
}

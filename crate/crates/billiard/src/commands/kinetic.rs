use billiard_core::kinetic::{
    duhamel_gain_iteration, relaxation_decay, transport_ensemble, upwind_reference, AxisMode, InitialDatum,
    KineticGrid, ParticleEnsemble,
};
use billiard_core::trajectory::TraceOptions;
use billiard_core::Vec2;
use serde_json::json;

use super::{CommandError, Context, Outcome};
use crate::cli::{AxisChoice, ConserveArgs, DuhamelArgs, InitialChoice, KineticArgs};
use crate::output::Cell;
use crate::row;

/// Relative energy drift allowed under pure transport.
pub const ENERGY_TOL: f64 = 1e-12;
/// Angular-momentum drift allowed in an axis-symmetric scene.
pub const ANGULAR_TOL: f64 = 1e-9;
/// Residual of the least-squares axis fit, relative to the diameter.
pub const AXIS_TOL: f64 = 1e-9;

fn ensemble_rows(e: &ParticleEnsemble) -> Vec<Vec<String>> {
    e.particles.iter().zip(&e.weights).map(|(p, w)| row![p.x.x, p.x.y, p.x.z, p.v.x, p.v.y, p.v.z, *w]).collect()
}

const ENSEMBLE_HEADER: [&str; 7] = ["x1", "x2", "x3", "v1", "v2", "v3", "w"];

pub fn conserve(ctx: &mut Context, args: &ConserveArgs) -> Result<Outcome, CommandError> {
    let scene = ctx.scene()?;
    let band = (args.band[0], args.band[1]);
    let ensemble = ParticleEnsemble::maxwellian(&scene.domain, args.particles, band, ctx.seed())?;
    let axis = match args.axis {
        AxisChoice::Detect => AxisMode::Detect(AXIS_TOL),
        AxisChoice::Origin => AxisMode::Fixed(Vec2::zeros()),
        AxisChoice::Off => AxisMode::Off,
    };
    let opts = TraceOptions { bounce_cap: usize::MAX, ..ctx.trace_options() };
    let moved = transport_ensemble(&scene.domain, &ensemble, args.duration, axis, &opts)?;
    let r = &moved.report;
    let ang = r.angular;
    ctx.out.csv(
        "conservation.csv",
        &[
            "particles",
            "quarantined",
            "mass_initial",
            "mass_final",
            "mass_drift",
            "energy_initial",
            "energy_final",
            "energy_drift",
            "axis_x",
            "axis_y",
            "axis_detected",
            "angular_initial",
            "angular_final",
            "angular_drift",
            "total_bounces",
            "min_bounces",
        ],
        &[row![
            r.particles,
            r.quarantined,
            r.mass.0,
            r.mass.1,
            r.mass_drift,
            r.energy.0,
            r.energy.1,
            r.energy_drift,
            ang.map(|a| a.center.x),
            ang.map(|a| a.center.y),
            ang.map(|a| a.detected),
            ang.map(|a| a.initial),
            ang.map(|a| a.final_value),
            ang.map(|a| a.drift),
            r.total_bounces,
            r.min_bounces
        ]],
    )?;
    if args.dump {
        ctx.out.csv("ensemble_initial.csv", &ENSEMBLE_HEADER, &ensemble_rows(&ensemble))?;
        ctx.out.csv("ensemble_final.csv", &ENSEMBLE_HEADER, &ensemble_rows(&moved.ensemble))?;
    }
    for (i, e) in &moved.quarantine {
        eprintln!("warning: particle {i} quarantined: {e}");
    }
    let angular_ok = ang.is_none_or(|a| !a.detected || a.drift < ANGULAR_TOL);
    println!(
        "mass drift {}, energy drift {}, angular drift {}, min bounces {}",
        r.mass_drift.cell(),
        r.energy_drift.cell(),
        ang.map(|a| a.drift).cell(),
        r.min_bounces
    );
    let passed = r.quarantined == 0 && r.mass_drift == 0.0 && r.energy_drift < ENERGY_TOL && angular_ok;
    Ok(Outcome::new(passed, json!({ "args": args })))
}

fn grid(ctx: &Context, a: &KineticArgs) -> KineticGrid {
    let (nx, ny) = ctx.global.grid.unwrap_or((8, 8));
    let initial = match a.initial {
        InitialChoice::Constant => InitialDatum::Constant(a.amplitude),
        InitialChoice::Maxwellian => InitialDatum::Maxwellian,
        InitialChoice::Tilted => InitialDatum::Tilted { amplitude: a.amplitude },
        InitialChoice::Swirl => InitialDatum::Swirl { amplitude: a.amplitude },
    };
    KineticGrid {
        nx,
        ny,
        directions: a.directions,
        speeds: a.speeds,
        band: (a.band[0], a.band[1]),
        steps: a.steps,
        nu0: a.nu0,
        cutoff: a.cutoff,
        initial,
    }
}

fn characteristic_options(ctx: &Context) -> TraceOptions {
    let s = ctx.trace_settings();
    TraceOptions { eps_grazing: s.eps_grazing, bounce_cap: s.bounce_cap, ..TraceOptions::backward() }
}

pub fn decay(ctx: &mut Context, args: &KineticArgs) -> Result<Outcome, CommandError> {
    let scene = ctx.scene()?;
    let g = grid(ctx, args);
    let c = relaxation_decay(&g, &scene.domain, args.time, &characteristic_options(ctx))?;
    let rows: Vec<_> = c.times.iter().zip(&c.sup).zip(&c.bound).map(|((t, s), b)| row![*t, *s, *b]).collect();
    ctx.out.csv("decay.csv", &["t", "sup", "bound"], &rows)?;
    let field: Vec<_> =
        c.values.iter().map(|(n, f)| row![n.cell, n.velocity, n.x.x, n.x.y, n.v.x, n.v.y, *f]).collect();
    ctx.out.csv("field.csv", &["cell", "velocity", "x1", "x3", "v1", "v3", "f"], &field)?;
    let within = c.sup.iter().zip(&c.bound).all(|(s, b)| *s <= b * (1.0 + 1e-12));
    let exact = !matches!(g.initial, InitialDatum::Constant(_))
        || c.sup.iter().zip(&c.bound).all(|(s, b)| (s - b).abs() <= 1e-12 * b.abs());
    println!(
        "{} times, {} nodes, {} excluded, final sup {}",
        c.times.len(),
        c.values.len(),
        c.excluded.len(),
        c.sup.last().copied().cell()
    );
    Ok(Outcome::new(within && exact && c.excluded.is_empty(), json!({ "args": args, "grid": format!("{g:?}") })))
}

pub fn duhamel(ctx: &mut Context, args: &DuhamelArgs) -> Result<Outcome, CommandError> {
    let scene = ctx.scene()?;
    let g = grid(ctx, &args.grid);
    let opts = characteristic_options(ctx);
    let (picard, reference) = ctx.pool.install(|| {
        rayon::join(
            || duhamel_gain_iteration(&g, &scene.domain, args.grid.time, args.iterations, &opts),
            || upwind_reference(&g, &scene.domain, args.grid.time, args.cfl, &opts),
        )
    });
    let (picard, reference) = (picard?, reference?);
    let rows: Vec<_> = picard
        .residuals
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let ratio = (i > 0).then(|| r / picard.residuals[i - 1]);
            row![i + 1, *r, ratio]
        })
        .collect();
    ctx.out.csv("residuals.csv", &["iteration", "residual", "ratio"], &rows)?;
    let field: Vec<_> = picard
        .values
        .iter()
        .zip(&reference)
        .map(|((n, f), (_, u))| row![n.cell, n.velocity, n.x.x, n.x.y, n.v.x, n.v.y, *f, *u])
        .collect();
    ctx.out.csv("field.csv", &["cell", "velocity", "x1", "x3", "v1", "v3", "duhamel", "upwind"], &field)?;
    let err = picard.values.iter().zip(&reference).map(|(a, b)| (a.1 - b.1).abs()).fold(0.0, f64::max);
    let scale = reference.iter().map(|b| b.1.abs()).fold(0.0, f64::max);
    let relative = if scale > 0.0 { err / scale } else { err };
    println!(
        "relative difference {}, final residual {}, {}",
        relative.cell(),
        picard.residuals.last().copied().cell(),
        if picard.non_contraction { "not contracting" } else { "contracting" }
    );
    let passed = relative <= args.tolerance && !picard.non_contraction && picard.excluded.is_empty();
    Ok(Outcome::new(passed, json!({ "args": args, "grid": format!("{g:?}"), "relative": relative })))
}

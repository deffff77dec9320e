use billiard_core::jacobians::{
    bounce_jacobian, chain_determinant, change_of_variable_check, det_check, first_bounce_jacobian_global, residual,
    sample_phases, CovOptions, CovReport, JacobianError, JacobianOptions, Sample,
};
use billiard_core::trajectory::{PhasePoint, TraceOptions};
use billiard_core::Vec3;
use serde_json::json;

use super::{CommandError, Context, Outcome};
use crate::cli::{CorpusArgs, CovArgs};
use crate::output::Cell;
use crate::row;

/// Per-bounce determinant against its closed formula.
pub const DET_FORMULA_TOL: f64 = 1e-8;
/// Per-bounce determinant against finite differences.
pub const DET_FD_TOL: f64 = 1e-6;
/// Chained product against the telescoped closed form.
pub const CHAIN_TOL: f64 = 1e-10;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn options(ctx: &Context) -> JacobianOptions {
    let s = ctx.trace_settings();
    let trace = TraceOptions { eps_grazing: s.eps_grazing, bounce_cap: s.bounce_cap, ..TraceOptions::backward() };
    JacobianOptions { step: ctx.tolerances().fd_step, trace }
}

fn corpus(ctx: &Context, args: &CorpusArgs, opts: &JacobianOptions) -> Result<Vec<Sample>, CommandError> {
    if args.bounces < 2 {
        return Err(CommandError::Usage("need at least two bounces per phase".into()));
    }
    let scene = ctx.scene()?;
    Ok(sample_phases(&scene.domain, args.samples, args.bounces, args.min_incidence, ctx.seed(), opts)?)
}

fn error_note(failures: usize, errors: usize) -> String {
    format!("{failures} failed, {errors} errors")
}

pub fn check(ctx: &mut Context, args: &CorpusArgs) -> Result<Outcome, CommandError> {
    let opts = options(ctx);
    let tol = ctx.tolerances().fd_rel_tol;
    let samples = corpus(ctx, args, &opts)?;
    let domain = &ctx.scene()?.domain;
    let reports = ctx.par_map(&samples, |s| {
        let mut out = vec![first_bounce_jacobian_global(domain, &s.phase, &opts)];
        out.extend((1..args.bounces).map(|k| bounce_jacobian(domain, &s.cycle, k, &opts)));
        out
    });
    let (mut rows, mut failures, mut errors, mut worst) = (Vec::new(), 0, 0, 0.0f64);
    for (i, per_sample) in reports.iter().enumerate() {
        for (k, r) in per_sample.iter().enumerate() {
            match r {
                Ok(r) => {
                    for e in &r.entries {
                        let pass = e.residual < tol;
                        failures += !pass as usize;
                        worst = worst.max(e.residual);
                        rows.push(row![i, k, e.name, e.analytic, e.fd, e.residual, pass, ""]);
                    }
                }
                Err(e) => {
                    errors += 1;
                    rows.push(row![i, k, "", "", "", "", false, e.to_string()]);
                }
            }
        }
    }
    ctx.out.csv("jacobian.csv", &["sample", "k", "name", "analytic", "fd", "residual", "pass", "error"], &rows)?;
    println!("{} entries, max residual {}, {}", rows.len(), worst.cell(), error_note(failures, errors));
    Ok(Outcome::new(failures == 0 && errors == 0, json!({ "args": args, "fd_rel_tol": tol, "fd_step": opts.step })))
}

pub fn det(ctx: &mut Context, args: &CorpusArgs) -> Result<Outcome, CommandError> {
    let opts = options(ctx);
    let samples = corpus(ctx, args, &opts)?;
    let domain = &ctx.scene()?.domain;
    let reports =
        ctx.par_map(&samples, |s| (1..args.bounces).map(|k| det_check(domain, &s.cycle, k, &opts)).collect::<Vec<_>>());
    let (mut rows, mut failures, mut errors) = (Vec::new(), 0, 0);
    for (i, per_sample) in reports.iter().enumerate() {
        for (j, r) in per_sample.iter().enumerate() {
            match r {
                Ok(d) => {
                    let (rf, rd) = (rel(d.analytic, d.formula), rel(d.analytic, d.fd));
                    let pass = rf < DET_FORMULA_TOL && rd < DET_FD_TOL;
                    failures += !pass as usize;
                    rows.push(row![i, j + 1, d.analytic, d.formula, d.fd, rf, rd, pass, ""]);
                }
                Err(e) => {
                    errors += 1;
                    rows.push(row![i, j + 1, "", "", "", "", "", false, e.to_string()]);
                }
            }
        }
    }
    ctx.out.csv(
        "det.csv",
        &["sample", "k", "analytic", "formula", "fd", "formula_residual", "fd_residual", "pass", "error"],
        &rows,
    )?;
    println!("{} determinants, {}", rows.len(), error_note(failures, errors));
    Ok(Outcome::new(failures == 0 && errors == 0, json!({ "args": args, "fd_step": opts.step })))
}

pub fn chain(ctx: &mut Context, args: &CorpusArgs) -> Result<Outcome, CommandError> {
    let opts = options(ctx);
    let samples = corpus(ctx, args, &opts)?;
    let domain = &ctx.scene()?.domain;
    let reports = ctx.par_map(&samples, |s| chain_determinant(domain, &s.cycle, 1, args.bounces, &opts));
    let (mut rows, mut failures, mut errors) = (Vec::new(), 0, 0);
    for (i, r) in reports.iter().enumerate() {
        match r {
            Ok(c) => {
                let pass = rel(c.product_analytic, c.closed_form) < CHAIN_TOL
                    && residual(c.reduced, c.reduced_fd) < ctx.tolerances().fd_rel_tol;
                failures += !pass as usize;
                rows.push(row![
                    i,
                    c.first,
                    c.last,
                    c.product_analytic,
                    c.product_formula,
                    c.product_fd,
                    c.closed_form,
                    c.reduced,
                    c.reduced_fd,
                    c.quoted,
                    pass,
                    ""
                ]);
            }
            Err(e) => {
                errors += 1;
                rows.push(row![i, 1usize, args.bounces, "", "", "", "", "", "", "", false, e.to_string()]);
            }
        }
    }
    ctx.out.csv(
        "chain.csv",
        &[
            "sample",
            "first",
            "last",
            "product_analytic",
            "product_formula",
            "product_fd",
            "closed_form",
            "reduced",
            "reduced_fd",
            "quoted",
            "pass",
            "error",
        ],
        &rows,
    )?;
    println!("{} chains, {}", rows.len(), error_note(failures, errors));
    Ok(Outcome::new(failures == 0 && errors == 0, json!({ "args": args, "fd_step": opts.step })))
}

/// Sweep point of the change-of-variable check.
#[derive(Clone, Copy)]
struct Probe {
    sample: usize,
    s_prime: f64,
    u: Vec3,
}

/// A report is consistent when every hypothesis holds and the determinant
/// matches and clears the floor, or when some hypothesis fails and the pass
/// flag is down.
pub fn cov_consistent(r: &CovReport, tol: f64) -> bool {
    if r.violations.is_empty() {
        r.pass && r.residual() < tol
    } else {
        !r.pass
    }
}

pub fn cov_check(ctx: &mut Context, args: &CovArgs) -> Result<Outcome, CommandError> {
    let opts = options(ctx);
    let tol = ctx.tolerances();
    let scene = ctx.scene()?;
    let (n_times, n_dirs) = ctx.global.grid.unwrap_or((8, 8));
    let samples = sample_phases(&scene.domain, args.phases, 1, 0.1, ctx.seed(), &opts)?;
    let cov = CovOptions {
        delta2: tol.delta2,
        eps_prime: tol.eps_prime,
        window: tol.cov_window,
        jacobian: opts,
        ..CovOptions::default()
    };
    let mut probes = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let base = s.phase.t - args.lag;
        for a in 0..n_times {
            let s_prime = base - args.span * (a as f64 + 0.5) / n_times as f64;
            for b in 0..n_dirs {
                let ang = std::f64::consts::TAU * (b as f64 + 0.5) / n_dirs as f64;
                let u = Vec3::new(args.speed * ang.cos(), args.axial, args.speed * ang.sin());
                probes.push(Probe { sample: i, s_prime, u });
            }
        }
    }
    let domain = &scene.domain;
    let results = ctx.par_map(&probes, |p| {
        let phase: &PhasePoint = &samples[p.sample].phase;
        change_of_variable_check(domain, phase, phase.t - args.lag, p.u, p.s_prime, &cov)
    });
    let (mut rows, mut inconsistent, mut excluded, mut admissible) = (Vec::new(), 0, 0, 0);
    for (p, r) in probes.iter().zip(&results) {
        let s = samples[p.sample].phase.t - args.lag;
        match r {
            Ok(r) => {
                let ok = cov_consistent(r, tol.fd_rel_tol);
                inconsistent += !ok as usize;
                admissible += r.violations.is_empty() as usize;
                let labels: Vec<&str> = r.violations.iter().map(|c| c.label()).collect();
                rows.push(row![
                    p.sample,
                    s,
                    p.s_prime,
                    p.u.x,
                    p.u.y,
                    p.u.z,
                    r.bounces,
                    r.det_fd,
                    r.det_analytic,
                    r.residual(),
                    r.psi,
                    labels.join(";"),
                    r.pass,
                    ""
                ]);
            }
            Err(e) => {
                // grazing or a changed bounce sequence inside the stencil
                excluded += 1;
                let note = match e {
                    JacobianError::GrazingAtBounce(_) | JacobianError::CombinatoricsChanged => e.to_string(),
                    other => {
                        inconsistent += 1;
                        other.to_string()
                    }
                };
                rows.push(row![p.sample, s, p.s_prime, p.u.x, p.u.y, p.u.z, "", "", "", "", "", "", false, note]);
            }
        }
    }
    ctx.out.csv(
        "cov.csv",
        &[
            "sample",
            "s",
            "s_prime",
            "u1",
            "u2",
            "u3",
            "bounces",
            "det_fd",
            "det_analytic",
            "residual",
            "psi",
            "violations",
            "pass",
            "error",
        ],
        &rows,
    )?;
    println!("{} probes, {admissible} admissible, {excluded} excluded, {inconsistent} inconsistent", rows.len());
    Ok(Outcome::new(inconsistent == 0, json!({ "args": args, "grid": [n_times, n_dirs], "cov": format!("{cov:?}") })))
}

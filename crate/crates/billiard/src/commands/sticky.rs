use billiard_core::grazing::{
    build_sticky_example, delta_star, detect_sticky, trace_grazing_family, ArcConstruction, GrazingError,
    GrazingFamily, LaunchSign, StickyReport, Verdict, STICKY_TARGET,
};
use billiard_core::trajectory::{Horizon, Termination};
use billiard_core::Vec2;
use serde_json::json;

use super::{CommandError, Context, Outcome};
use crate::cli::{StickyBuildArgs, StickyDetectArgs};
use crate::output::{Cell, Svg};
use crate::row;

/// Path length of the parabola example launches: enough to pass the target after
/// the bounce on the parabola.
const EXAMPLE_REACH: f64 = 4.0;

const REPORT_HEADER: [&str; 8] = ["bounce", "family_size", "x", "y", "residual", "condition", "verdict", "error"];

fn report_cells(r: &Result<StickyReport, GrazingError>, bounce: usize) -> Vec<String> {
    match r {
        Ok(r) => row![
            r.bounce,
            r.family_size,
            r.point.map(|p| p.x),
            r.point.map(|p| p.y),
            r.residual,
            r.condition,
            r.verdict.label(),
            ""
        ],
        Err(e) => row![bounce, "", "", "", "", "", "error", e.to_string()],
    }
}

fn draw_family(svg: &mut Svg, family: &GrazingFamily, tail: f64) {
    for l in &family.launches {
        let mut pts = vec![l.phase.position()];
        pts.extend(l.cycle.events.iter().map(|e| e.position()));
        if let Some(e) = l.cycle.events.last() {
            if matches!(
                l.cycle.termination,
                Termination::Escaped | Termination::HorizonLength | Termination::HorizonTime
            ) {
                pts.push(e.position() + e.velocity().normalize() * tail * l.cycle.direction.sign());
            }
        }
        svg.polyline(&pts, "#4c72b0", 0.5);
    }
}

pub fn build(ctx: &mut Context, args: &StickyBuildArgs) -> Result<Outcome, CommandError> {
    let construction = args.x0.map_or(ArcConstruction::Envelope, |x0| ArcConstruction::Integrated { x0 });
    let example = build_sticky_example(args.delta_max, args.samples, construction)?;
    let rows: Vec<_> = example
        .arc
        .iter()
        .map(|a| row![a.delta, a.delta_star, a.slope, a.point.x, a.point.y, a.chord_offset])
        .collect();
    ctx.out.csv("arc.csv", &["delta", "delta_star", "slope", "x", "y", "chord_offset"], &rows)?;

    let tol = ctx.tolerances().sticky_tol;
    let family = example.family(1.0, EXAMPLE_REACH)?;
    let report = detect_sticky(&family, 1, tol);
    ctx.out.csv("sticky.csv", &REPORT_HEADER, &[report_cells(&report, 1)])?;

    let target = Vec2::new(STICKY_TARGET[0], STICKY_TARGET[1]);
    let closed = (1.0 + args.delta_max) - (1.0 + args.delta_max * args.delta_max).sqrt();
    let star_err = (delta_star(args.delta_max) - closed).abs();
    let max_offset = example.arc.iter().map(|a| a.chord_offset.abs()).fold(0.0, f64::max);
    let (verdict, miss) = match &report {
        Ok(r) => (r.verdict, r.point.map_or(f64::INFINITY, |p| (p - target).norm())),
        Err(_) => (Verdict::Degenerate, f64::INFINITY),
    };
    if args.svg {
        let mut svg = Svg::new(&example.domain);
        draw_family(&mut svg, &family, 1.0);
        let arc: Vec<Vec2> = example.arc.iter().map(|a| a.point).collect();
        svg.polyline(&arc, "#d62728", 2.0);
        if let Ok(StickyReport { point: Some(p), .. }) = &report {
            svg.cross(*p, 8.0, "#d62728");
        }
        ctx.out.text("sticky.svg", &svg.finish())?;
    }
    println!(
        "verdict {}, distance to (1,1) {}, max chord offset {}, delta_* error {}",
        verdict.label(),
        miss.cell(),
        max_offset.cell(),
        star_err.cell()
    );
    let passed = verdict == Verdict::Sticky && miss < tol && star_err < 1e-12;
    Ok(Outcome::new(passed, json!({ "args": args, "sticky_tol": tol })))
}

pub fn detect(ctx: &mut Context, args: &StickyDetectArgs) -> Result<Outcome, CommandError> {
    let scene = ctx.scene()?;
    let tol = ctx.tolerances().sticky_tol;
    let header: Vec<&str> = ["source", "curve", "start", "end", "sign"].into_iter().chain(REPORT_HEADER).collect();
    let mut rows = Vec::new();
    let mut svg = args.svg.then(|| Svg::new(&scene.domain));
    let mut sticky = 0;
    if let Some(example) = &scene.sticky {
        let family = example.family(args.speed, EXAMPLE_REACH)?;
        let r = detect_sticky(&family, args.bounce, tol);
        sticky += r.as_ref().is_ok_and(|r| r.verdict == Verdict::Sticky) as usize;
        let mut cells = row!["parabola", "", "", "", "plus"];
        cells.extend(report_cells(&r, args.bounce));
        rows.push(cells);
        if let Some(svg) = svg.as_mut() {
            draw_family(svg, &family, 1.0);
            let arc: Vec<Vec2> = example.arc.iter().map(|a| a.point).collect();
            svg.polyline(&arc, "#d62728", 2.0);
            if let Ok(StickyReport { point: Some(p), .. }) = &r {
                svg.cross(*p, 8.0, "#d62728");
            }
        }
    } else {
        let settings = ctx.trace_settings();
        let horizon = match settings.horizon() {
            Horizon::Unbounded => Horizon::Length(4.0 * scene.domain.diameter()),
            h => h,
        };
        let jobs: Vec<_> = scene
            .domain
            .decomposition()
            .concave_intervals()
            .flat_map(|(c, i)| [(c, i, LaunchSign::Plus), (c, i, LaunchSign::Minus)])
            .collect();
        let results = ctx.par_map(&jobs, |&(c, i, sign)| {
            let family = trace_grazing_family(&scene.domain, c, i, args.launches, args.speed, sign, horizon)?;
            let report = detect_sticky(&family, args.bounce, tol);
            Ok::<_, GrazingError>((family, report))
        });
        for (&(c, i, sign), r) in jobs.iter().zip(results) {
            let mut cells = row!["concave", c, i.start, i.end, sign.value()];
            match r {
                Ok((family, report)) => {
                    sticky += report.as_ref().is_ok_and(|r| r.verdict == Verdict::Sticky) as usize;
                    cells.extend(report_cells(&report, args.bounce));
                    if let Some(svg) = svg.as_mut() {
                        draw_family(svg, &family, 0.0);
                        if let Ok(StickyReport { point: Some(p), verdict: Verdict::Sticky, .. }) = &report {
                            svg.cross(*p, 8.0, "#d62728");
                        }
                    }
                }
                Err(e) => cells.extend(report_cells(&Err(e), args.bounce)),
            }
            rows.push(cells);
        }
    }
    ctx.out.csv("sticky.csv", &header, &rows)?;
    if let Some(svg) = svg {
        ctx.out.text("sticky.svg", &svg.finish())?;
    }
    println!("{} families, {sticky} sticky", rows.len());
    Ok(Outcome::new(true, json!({ "args": args, "sticky_tol": tol })))
}

use billiard_core::geometry::{InflectionTag, Location};
use billiard_core::grazing::inflection_ray_atlas;
use billiard_core::trajectory::{
    bounce_count, lift_cylinder, trace_cycles, Direction, Horizon, PhasePoint, Termination,
};
use billiard_core::{Vec2, Vec3};
use serde_json::json;

use super::{CommandError, Context, Outcome};
use crate::cli::{AtlasArgs, CountArgs, TraceArgs};
use crate::output::{class_color, Svg};
use crate::row;

fn tag_label(tag: InflectionTag) -> &'static str {
    match tag {
        InflectionTag::Plus => "plus",
        InflectionTag::Minus => "minus",
    }
}

pub fn classify(ctx: &mut Context) -> Result<Outcome, CommandError> {
    let scene = ctx.scene()?;
    let dec = scene.domain.decomposition();
    let mut rows = Vec::new();
    for (id, c) in scene.domain.curves().iter().enumerate() {
        let d = dec.curve(id);
        let k = d.max_abs_curvature;
        for i in &d.concave {
            rows.push(row![id, "concave", i.start, i.end, "", k]);
        }
        for i in &d.convex {
            rows.push(row![id, "convex", i.start, i.end, "", k]);
        }
        for f in &d.inflections {
            rows.push(row![id, "inflection", f.tau, f.tau, tag_label(f.tag), k]);
        }
        if d.flat {
            let (lo, hi) = c.range();
            rows.push(row![id, "flat", lo, hi, "", k]);
        }
    }
    println!(
        "{} curves, {} concave intervals, {} inflections",
        scene.domain.curves().len(),
        dec.concave_count(),
        dec.inflection_count()
    );
    ctx.out.csv("classify.csv", &["curve", "piece", "start", "end", "tag", "max_abs_curvature"], &rows)?;
    Ok(Outcome::new(true, json!({})))
}

pub fn trace(ctx: &mut Context, args: &TraceArgs) -> Result<Outcome, CommandError> {
    let scene = ctx.scene()?;
    let mut opts = ctx.trace_options();
    if args.backward {
        opts.direction = Direction::Backward;
    }
    let [x1, x2, x3] = args.position;
    let [v1, v2, v3] = args.velocity;
    let origin = PhasePoint::new(Vec3::new(x1, x2, x3), Vec3::new(v1, v2, v3), 0.0);
    let cycle = trace_cycles(&scene.domain, &origin, &opts)?;
    let h = scene.domain.height();
    let rows: Vec<_> = cycle
        .events
        .iter()
        .map(|e| {
            let p = e.position();
            row![
                e.index,
                e.t,
                p.x,
                lift_cylinder(&origin, e.t, h),
                p.y,
                e.post.x,
                e.post.y,
                e.post.z,
                e.incidence,
                e.class.label(),
                e.curve,
                e.tau
            ]
        })
        .collect();
    ctx.out.csv(
        "cycle.csv",
        &["k", "t", "x1", "x2", "x3", "v1", "v2", "v3", "incidence", "class", "curve_id", "tau"],
        &rows,
    )?;
    if args.svg {
        let mut svg = Svg::new(&scene.domain);
        let mut pts = vec![origin.position()];
        pts.extend(cycle.events.iter().map(|e| e.position()));
        if matches!(cycle.termination, Termination::HorizonTime | Termination::HorizonLength | Termination::Escaped) {
            let last = cycle.events.last().map_or(origin.position(), |e| e.position());
            let v = cycle.events.last().map_or(origin.velocity(), |e| e.velocity()) * opts.direction.sign();
            let tail = match opts.horizon {
                Horizon::Time(h) => {
                    cycle.state_at(origin.t + opts.direction.sign() * h).map_or(0.0, |(x, _)| (x - last).norm())
                }
                Horizon::Length(l) => (l - cycle.length).max(0.0),
                Horizon::Unbounded => scene.domain.diameter(),
            };
            pts.push(last + v.normalize() * tail);
        }
        svg.polyline(&pts, "#4c72b0", 1.0);
        svg.dot(origin.position(), 4.0, "#000000");
        for e in cycle.events.iter().filter(|e| e.class.is_grazing()) {
            svg.dot(e.position(), 5.0, class_color(e.class));
        }
        ctx.out.text("cycle.svg", &svg.finish())?;
    }
    println!("{} bounces, termination {}, length {}", cycle.events.len(), cycle.termination.label(), cycle.length);
    if let Some(f) = &cycle.failure {
        eprintln!("warning: trace stopped early: {f}");
    }
    Ok(Outcome::new(cycle.failure.is_none(), args))
}

/// Positions on the `grid` cell centres of the bounding box that lie in the
/// domain, crossed with `directions` angles.
pub fn count(ctx: &mut Context, args: &CountArgs) -> Result<Outcome, CommandError> {
    let scene = ctx.scene()?;
    let d = &scene.domain;
    if args.directions == 0 || !(args.speed > 0.0) {
        return Err(CommandError::Usage("count needs at least one direction and a positive speed".into()));
    }
    let (nx, ny) = ctx.global.grid.unwrap_or((16, 16));
    let settings = ctx.trace_settings();
    let length = settings.horizon_length.unwrap_or(10.0 * d.diameter());
    let opts = settings.options();
    let (lo, hi) = d.bounds();
    let mut phases = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let x = Vec2::new(
                lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / nx as f64,
                lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / ny as f64,
            );
            if d.locate(x, 1e-9 * d.diameter()) != Location::Inside {
                continue;
            }
            for k in 0..args.directions {
                let a = std::f64::consts::TAU * (k as f64 + 0.5) / args.directions as f64;
                phases.push((x, a));
            }
        }
    }
    let results = ctx.par_map(&phases, |&(x, a)| {
        let v = Vec2::new(a.cos(), a.sin()) * args.speed;
        bounce_count(d, &PhasePoint::planar(x, v), length, &opts)
    });
    let rows: Vec<_> = phases
        .iter()
        .zip(&results)
        .map(|(&(x, a), r)| match r {
            Ok(n) => row![x.x, x.y, a, Some(*n), ""],
            Err(e) => row![x.x, x.y, a, None::<usize>, e.to_string()],
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_err()).count();
    ctx.out.csv("count.csv", &["x1", "x3", "angle", "count", "error"], &rows)?;
    println!("{} phases, path length {length}, {failures} failures", rows.len());
    Ok(Outcome::new(true, json!({ "args": args, "grid": [nx, ny], "length": length })))
}

pub fn atlas(ctx: &mut Context, args: &AtlasArgs) -> Result<Outcome, CommandError> {
    let scene = ctx.scene()?;
    let length = args.length.unwrap_or(2.0 * scene.domain.diameter());
    let atlas = inflection_ray_atlas(&scene.domain, args.speed, length)?;
    let mut rows = Vec::new();
    for (i, l) in atlas.launches.iter().enumerate() {
        for (j, s) in l.segments.iter().enumerate() {
            rows.push(row![
                i,
                l.curve,
                l.tau,
                tag_label(l.tag),
                l.sign.value(),
                j,
                s.start.x,
                s.start.y,
                s.end.x,
                s.end.y,
                l.termination.label()
            ]);
        }
    }
    ctx.out.csv(
        "atlas.csv",
        &["launch", "curve", "tau", "tag", "sign", "segment", "x_start", "y_start", "x_end", "y_end", "termination"],
        &rows,
    )?;
    if args.svg {
        let mut svg = Svg::new(&scene.domain);
        for l in &atlas.launches {
            for s in &l.segments {
                svg.polyline(&[s.start, s.end], "#dd8452", 1.0);
            }
            svg.dot(l.phase.position(), 4.0, "#2ca02c");
        }
        ctx.out.text("atlas.svg", &svg.finish())?;
    }
    println!("{} launches, {} segments", atlas.launches.len(), rows.len());
    Ok(Outcome::new(true, json!({ "args": args, "length": length })))
}

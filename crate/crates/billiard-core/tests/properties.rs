use approx::assert_relative_eq;
use billiard_core::geometry::{chart, AnalyticCurve, Domain, GraphSide, Location};
use billiard_core::grazing::{delta_star, detect_sticky, GrazingFamily, LaunchSign, Verdict};
use billiard_core::jacobians::{bounce_jacobian, chain_determinant, JacobianOptions};
use billiard_core::kinetic::{transport_ensemble, AxisMode, ParticleEnsemble};
use billiard_core::trajectory::{bounce_count, reflect, trace_cycles, Horizon, PhasePoint, Termination, TraceOptions};
use billiard_core::{Vec2, Vec3};
use proptest::prelude::*;

fn unit(angle: f64) -> Vec2 {
    Vec2::new(angle.cos(), angle.sin())
}

fn phase(x: Vec2, v: Vec2, axial: f64) -> PhasePoint {
    PhasePoint::new(Vec3::new(x.x, 0.0, x.y), Vec3::new(v.x, axial, v.y), 0.0)
}

fn scenes() -> Vec<Domain> {
    vec![
        Domain::disk(1.0).unwrap(),
        Domain::annulus(1.0, 0.3).unwrap(),
        Domain::ellipse(2.0, 1.0).unwrap(),
        Domain::polar(0.3, 3).unwrap(),
    ]
}

/// Interior point of `domain` from a polar sample around the origin, or
/// `None` when it falls outside or too close to the boundary.
fn interior(domain: &Domain, r: f64, a: f64) -> Option<Vec2> {
    let x = unit(a) * r;
    let inside = matches!(domain.locate(x, 1e-12), Location::Inside);
    (inside && domain.project(x).distance > 0.05).then_some(x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reflection_is_an_isometric_involution(
        v in prop::array::uniform3(-3.0..3.0f64),
        a in 0.0..std::f64::consts::TAU,
    ) {
        let v = Vec3::from(v);
        let n = Vec3::new(a.cos(), 0.0, a.sin());
        let w = reflect(v, n);
        prop_assert!((w.norm() - v.norm()).abs() < 1e-12);
        prop_assert_eq!(w.y, v.y);
        prop_assert!((w.dot(&n) + v.dot(&n)).abs() < 1e-12);
        prop_assert!((reflect(w, n) - v).norm() < 1e-12);
    }

    #[test]
    fn bounces_sit_on_the_boundary_and_keep_the_speed(
        scene in 0..4usize,
        r in 0.0..1.5f64,
        a in 0.0..std::f64::consts::TAU,
        b in 0.0..std::f64::consts::TAU,
        speed in 0.5..2.0f64,
    ) {
        let d = &scenes()[scene];
        let Some(x) = interior(d, r, a) else { return Ok(()) };
        let opts = TraceOptions::forward().with_horizon(Horizon::Length(20.0));
        let c = trace_cycles(d, &phase(x, unit(b) * speed, 0.3), &opts).unwrap();
        for e in &c.events {
            let p = d.project(e.position());
            prop_assert!(p.distance < 1e-9 * d.diameter());
            prop_assert!((e.post.norm() - e.pre.norm()).abs() < 1e-12 * speed);
            prop_assert_eq!(e.post.y, e.pre.y);
            let n = d.curves()[e.curve].normal(e.tau);
            let (vin, vout) = (Vec2::new(e.pre.x, e.pre.z), Vec2::new(e.post.x, e.post.z));
            prop_assert!((vin.dot(&n) + vout.dot(&n)).abs() < 1e-12 * speed);
        }
    }

    #[test]
    fn backward_trace_retraces_the_forward_one(
        scene in 0..4usize,
        r in 0.0..1.5f64,
        a in 0.0..std::f64::consts::TAU,
        b in 0.0..std::f64::consts::TAU,
        duration in 0.5..6.0f64,
    ) {
        let d = &scenes()[scene];
        let Some(x) = interior(d, r, a) else { return Ok(()) };
        let start = phase(x, unit(b), 0.0);
        let fwd = trace_cycles(d, &start, &TraceOptions::forward().with_horizon(Horizon::Time(duration))).unwrap();
        prop_assume!(fwd.termination == Termination::HorizonTime);
        prop_assume!(fwd.events.iter().all(|e| e.incidence > 1e-3));
        let (y, w) = fwd.state_at(duration).unwrap();
        let end = PhasePoint::new(Vec3::new(y.x, 0.0, y.y), Vec3::new(w.x, 0.0, w.y), duration);
        let bwd = trace_cycles(d, &end, &TraceOptions::backward().with_horizon(Horizon::Time(duration))).unwrap();
        prop_assert_eq!(bwd.events.len(), fwd.events.len());
        let (x0, v0) = bwd.state_at(0.0).unwrap();
        prop_assert!((x0 - x).norm() < 1e-9, "{} {}", x0, x);
        prop_assert!((v0 - unit(b)).norm() < 1e-9);
    }

    #[test]
    fn chart_inverts_and_stays_orthogonal(
        scene in 0..4usize,
        tau in 0.0..std::f64::consts::TAU,
        x1 in -0.05..0.05f64,
        frac in -0.9..0.9f64,
    ) {
        let d = &scenes()[scene];
        let reach = chart(d, 0, tau, 0.0).unwrap().reach();
        let ch = chart(d, 0, tau, reach.min(0.2)).unwrap();
        let x3 = frac * ch.radius();
        let (g11, g33) = ch.metric(x1, x3);
        let (e1, e3) = ch.coordinate_frame(x1, x3);
        prop_assert!(ch.metric_cross_term(x1, x3).abs() < 1e-12 * e1.norm());
        prop_assert_eq!(g33, 1.0);
        assert_relative_eq!(g11, e1.norm_squared(), max_relative = 1e-12);
        prop_assert!((e3.norm() - 1.0).abs() < 1e-12);
        let (y1, y3) = ch.coordinates(ch.eta(x1, x3)).unwrap();
        prop_assert!((y1 - x1).abs() < 1e-10 && (y3 - x3).abs() < 1e-10);
    }

    #[test]
    fn bounce_determinants_match_the_closed_form(
        scene in 1..4usize,
        r in 0.0..1.5f64,
        a in 0.0..std::f64::consts::TAU,
        b in 0.0..std::f64::consts::TAU,
    ) {
        let d = &scenes()[scene];
        let Some(x) = interior(d, r, a) else { return Ok(()) };
        let opts = JacobianOptions::default();
        let c = trace_cycles(d, &phase(x, unit(b), 0.0), &opts.trace.with_horizon(Horizon::Length(8.0))).unwrap();
        prop_assume!(c.events.len() >= 3);
        prop_assume!(c.events.iter().take(3).all(|e| e.incidence > 0.05));
        let j = bounce_jacobian(d, &c, 1, &opts).unwrap();
        let det = j.determinant.unwrap();
        prop_assert!((det.analytic - det.formula).abs() < 1e-8 * det.formula.abs());
        let chain = chain_determinant(d, &c, 1, 3, &opts).unwrap();
        prop_assert!((chain.product_analytic - chain.closed_form).abs() < 1e-10 * chain.closed_form.abs());
    }

    #[test]
    fn disk_diameter_count_follows_the_chord_sum(length in 0.01..40.0f64) {
        // chords 1, 2, 2, ... from the centre along a diameter
        let d = Domain::disk(1.0).unwrap();
        let whole = ((length - 1.0) / 2.0).ceil().max(0.0) as usize;
        prop_assume!(((length - 1.0) / 2.0).fract().abs() > 1e-9 && length > 1.0 + 1e-9);
        let n = bounce_count(&d, &phase(Vec2::zeros(), Vec2::new(1.0, 0.0), 0.0), length, &TraceOptions::forward()).unwrap();
        prop_assert_eq!(n, 1 + whole);
    }

    #[test]
    fn delta_star_solves_the_quadratic(delta in 0.0..0.45f64) {
        let s = delta_star(delta);
        // s^2/2 = (1 + delta)(s - 1) + 1
        prop_assert!((0.5 * s * s - (1.0 + delta) * (s - 1.0) - 1.0).abs() < 1e-14);
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn mirror_families_recover_the_common_point(
        px in -1.0..1.0f64,
        py in 0.5..1.5f64,
        eta in 1e-9..1e-4f64,
        seeds in prop::collection::vec((-2.0..2.0f64, 0.0..std::f64::consts::TAU), 5..12),
    ) {
        // lines aimed at the mirror image of P reflect through P
        let floor = AnalyticCurve::graph(vec![0.0], -20.0, 20.0, GraphSide::Above).unwrap();
        let d = Domain::sandbox(vec![floor]).unwrap();
        let image = Vec2::new(px, -py);
        let phases: Vec<_> = seeds
            .iter()
            .map(|&(x0, a)| {
                let start = Vec2::new(x0, 2.0);
                let dir = (image + unit(a) * eta - start).normalize();
                phase(start, dir, 0.0)
            })
            .collect();
        let fam = GrazingFamily::from_phases(&d, phases, LaunchSign::Plus, &TraceOptions::forward().with_horizon(Horizon::Length(20.0))).unwrap();
        let r = detect_sticky(&fam, 1, 1e-6).unwrap();
        prop_assume!(r.verdict != Verdict::Degenerate);
        let p = r.point.unwrap();
        prop_assert!((p - Vec2::new(px, py)).norm() < 3.0 * eta * r.condition.sqrt().max(1.0), "{:?}", r);
    }

    #[test]
    fn transport_conserves_mass_and_energy(seed in any::<u64>(), count in 1..40usize) {
        let d = Domain::polar(0.3, 3).unwrap();
        let e = ParticleEnsemble::maxwellian(&d, count, (0.5, 2.0), seed).unwrap();
        let t = transport_ensemble(&d, &e, 5.0, AxisMode::Off, &TraceOptions::forward()).unwrap();
        prop_assert_eq!(t.report.mass_drift, 0.0);
        prop_assert!(t.report.energy_drift < 1e-12);
    }
}

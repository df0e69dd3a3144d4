use proptest::prelude::*;

use nullrig::catalog::{load, Scenario};
use nullrig::error::Error;
use nullrig::geodesics::{
    cross_metric_residual, energy_drift, integrate, prop3_equivalence_check,
    reversibility_residual, sample_times, AmbientChart, Control, GeodesicState, MetricKind,
    RiggedChart,
};
use nullrig::rigging::{NullHypersurface, RiggedFrame};
use nullrig::spacetime::ChartedSpacetime;
use nullrig::transverse::TransverseGeometry;

const HYPERSURFACES: [&str; 8] = [
    "minkowski_hyperplane",
    "minkowski_hyperplane_tilted",
    "minkowski_cone",
    "ppwave_wavefront",
    "ppwave_twisted",
    "ppwave_flat",
    "desitter_horizon",
    "ads_slice",
];

fn scenario(name: &str) -> Scenario {
    load(name).unwrap()
}

/// Point of `L` above the sampling-domain point with unit-box coordinates `u`.
fn point_on(surface: &NullHypersurface, u: &[f64]) -> Option<Vec<f64>> {
    let domain = surface.sampling_domain();
    let raw: Vec<f64> = domain
        .iter()
        .zip(u)
        .map(|([lo, hi], t)| lo + t * (hi - lo))
        .collect();
    let p = surface
        .solve_graph(&raw, domain[surface.graph_coordinate()])
        .ok()?;
    surface.ambient().exit_coordinate(&p).is_none().then_some(p)
}

fn combine(c: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (ci, b) in c.iter().zip(basis) {
        for (o, x) in out.iter_mut().zip(b) {
            *o += ci * x;
        }
    }
    out
}

fn unit_screen(frame: &RiggedFrame, c: &[f64]) -> Option<Vec<f64>> {
    let e = frame.screen();
    let n = c[..e.len()].iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.1).then(|| combine(&c[..e.len()].iter().map(|x| x / n).collect::<Vec<_>>(), &e))
}

/// Nested central differences of `f` along the coordinate multi-index.
fn central(f: &dyn Fn(&[f64]) -> f64, p: &[f64], index: &[usize], h: f64) -> f64 {
    match index.split_first() {
        None => f(p),
        Some((&i, rest)) => {
            let mut a = p.to_vec();
            let mut b = p.to_vec();
            a[i] += h;
            b[i] -= h;
            (central(f, &a, rest, h) - central(f, &b, rest, h)) / (2.0 * h)
        }
    }
}

fn richardson(f: &dyn Fn(&[f64]) -> f64, p: &[f64], index: &[usize], h: f64) -> f64 {
    (4.0 * central(f, p, index, h / 2.0) - central(f, p, index, h)) / 3.0
}

fn outside_chart(e: &Error) -> bool {
    matches!(e, Error::ChartExit { .. } | Error::OutOfChart { .. })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_jets_match_richardson_differences(
        which in 0usize..HYPERSURFACES.len(),
        u in prop::collection::vec(0.1f64..0.9, 4),
        index in prop::collection::vec(0usize..4, 1..=3),
        entry in 0usize..16,
    ) {
        let s = scenario(HYPERSURFACES[which]);
        let m: &ChartedSpacetime = &s.spacetime;
        let domain = s.hypersurface.as_ref().unwrap().sampling_domain();
        let p: Vec<f64> = domain.iter().zip(&u).map(|([lo, hi], t)| lo + t * (hi - lo)).collect();
        let jet = m.metric_jets(&p, 3).unwrap()[entry].partial(&index);
        let f = |q: &[f64]| m.metric_at(q).unwrap()[(entry / 4, entry % 4)];
        let fd = richardson(&f, &p, &index, 2e-2);
        prop_assert!((jet - fd).abs() <= (1e-6 * jet.abs()).max(1e-9),
            "{} entry {entry} index {index:?}: jet {jet} vs {fd}", s.name);
    }

    #[test]
    fn frame_invariants_hold_everywhere(
        which in 0usize..HYPERSURFACES.len(),
        u in prop::collection::vec(0.0f64..1.0, 4),
        a in prop::collection::vec(-1.0f64..1.0, 3),
        b in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let s = scenario(HYPERSURFACES[which]);
        let surface = s.hypersurface.as_ref().unwrap();
        let p = point_on(surface, &u);
        prop_assume!(p.is_some());
        let frame = surface.build_frame(&p.unwrap()).unwrap();
        prop_assert!(frame.xi_residual() < 1e-9);
        prop_assert!(frame.null_rigging_residual() < 1e-9);
        prop_assert!(frame.rigged_metric_residual() < 1e-9);
        for e in frame.screen() {
            prop_assert!(frame.df(&e).abs() < 1e-9);
        }
        let basis = frame.frame();
        let (x, y) = (combine(&a, &basis), combine(&b, &basis));
        let screen_x = combine(&a[..2], &frame.screen());
        prop_assert!(frame.screen_form_residual(&x, &screen_x).unwrap().abs() < 1e-8);
        let bxy = frame.second_fundamental(&x, &y).unwrap();
        prop_assert!((bxy - frame.second_fundamental_by_extension(&x, &y).unwrap()).abs() < 1e-8);
        prop_assert!((bxy - frame.g(&frame.screen_shape_operator(&x).unwrap(), &y)).abs() < 1e-8);
        let tg = TransverseGeometry::from_frame(frame);
        prop_assert!(tg.flow_residual(&x, &y).unwrap().abs() < 1e-7);
    }

    #[test]
    fn radical_is_rigging_independent(
        pair in 0usize..2,
        u in prop::collection::vec(0.0f64..1.0, 4),
    ) {
        let (first, second) = [("minkowski_hyperplane", "minkowski_hyperplane_tilted"), ("ppwave_wavefront", "ppwave_twisted")][pair];
        let s1 = scenario(first);
        let s2 = scenario(second);
        let l1 = s1.hypersurface.as_ref().unwrap();
        let l2 = s2.hypersurface.as_ref().unwrap();
        let p = point_on(l2, &u);
        prop_assume!(p.is_some());
        let p = p.unwrap();
        let a = l1.build_frame(&p).unwrap().xi();
        let b = l2.build_frame(&p).unwrap().xi();
        // Rank one: every 2x2 minor of [a; b] vanishes.
        let scale = a.iter().map(|x| x.abs()).fold(0.0, f64::max) * b.iter().map(|x| x.abs()).fold(0.0, f64::max);
        for i in 0..4 {
            for j in i + 1..4 {
                prop_assert!((a[i] * b[j] - a[j] * b[i]).abs() < 1e-8 * scale);
            }
        }
    }

    #[test]
    fn geodesics_conserve_energy_and_reverse(
        u in 0.0f64..1.0, r in 0.8f64..1.2, th in 1.0f64..2.1, ph in 0.0f64..6.0,
        v in prop::collection::vec(-1.0f64..1.0, 4),
        null in any::<bool>(),
    ) {
        let s = scenario("desitter_horizon");
        let chart = AmbientChart(&s.spacetime);
        let p = [u - 0.5, r, th, ph];
        let mut v = v;
        if null {
            // Solve g(v,v) = 0 for the u-component: g_uu v_u^2 + 2 g_ur v_u v_r + rest = 0.
            let g = s.spacetime.metric_at(&p).unwrap();
            let mut w = v.clone();
            w[0] = 0.0;
            let rest = s.spacetime.inner(&p, &w, &w).unwrap();
            let lin = 2.0 * (1..4).map(|j| g[(0, j)] * v[j]).sum::<f64>();
            let quad = g[(0, 0)];
            let disc = lin * lin - 4.0 * quad * rest;
            prop_assume!(quad.abs() > 1e-6 && disc >= 0.0);
            v[0] = (-lin + disc.sqrt()) / (2.0 * quad);
            prop_assume!(v[0].abs() < 5.0);
        }
        let start = GeodesicState::new(&p, &v);
        let traj = integrate(&chart, &start, &sample_times(0.3, 6), Control::default());
        prop_assume!(!matches!(&traj, Err(e) if outside_chart(e)));
        let traj = traj.unwrap();
        prop_assert!(energy_drift(&chart, &start, &traj).unwrap() < 1e-8);
        let back = reversibility_residual(&chart, &start, 0.3, Control::default());
        prop_assume!(!matches!(&back, Err(e) if outside_chart(e)));
        prop_assert!(back.unwrap() < 1e-8);
    }

    #[test]
    fn leaf_correspondence_verdict_is_stable_under_halving(
        which in 0usize..2,
        u in prop::collection::vec(0.0f64..1.0, 4),
        c in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        let s = scenario(["minkowski_hyperplane", "ppwave_wavefront"][which]);
        let surface = s.hypersurface.as_ref().unwrap();
        let p = point_on(surface, &u);
        prop_assume!(p.is_some());
        let p = p.unwrap();
        let frame = surface.build_frame(&p).unwrap();
        let v = unit_screen(&frame, &c);
        prop_assume!(v.is_some());
        let v = v.unwrap();
        let verdict = |control: Control| {
            prop_equivalence(surface, &p, &v, control).map(|r| r < 1e-6)
        };
        let full = verdict(Control::default());
        prop_assume!(full.is_some());
        prop_assert_eq!(full, verdict(Control::default().halved()));
        prop_assert_eq!(full, Some(true));
    }

    #[test]
    fn cbar_verdict_is_stable_under_halving(
        tilted in any::<bool>(),
        u in prop::collection::vec(0.0f64..1.0, 4),
        c in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let s = scenario(if tilted { "minkowski_hyperplane_tilted" } else { "minkowski_hyperplane" });
        let surface = s.hypersurface.as_ref().unwrap();
        let p = point_on(surface, &u);
        prop_assume!(p.is_some());
        let p = p.unwrap();
        let frame = surface.build_frame(&p).unwrap();
        let v = combine(&c, &frame.frame());
        prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 0.01);
        let rigged = RiggedChart::new(surface);
        let start = rigged.project(&GeodesicState::new(&p, &v));
        let verdict = |control: Control| -> Option<(bool, bool)> {
            let traj = integrate(&rigged, &start, &sample_times(0.2, 4), control).ok()?;
            let r = cross_metric_residual(surface, MetricKind::Rigged, &traj).ok()?;
            Some((r.cbar < 1e-9, r.defect < 1e-8))
        };
        let full = verdict(Control::default());
        prop_assume!(full.is_some());
        prop_assert_eq!(full, verdict(Control::default().halved()));
        let (small_cbar, geodesic) = full.unwrap();
        // Sufficiency: vanishing C̄ forces the rigged geodesic to be ambient.
        prop_assert!(!small_cbar || geodesic);
    }
}

fn prop_equivalence(
    surface: &NullHypersurface,
    p: &[f64],
    v: &[f64],
    control: Control,
) -> Option<f64> {
    match prop3_equivalence_check(surface, p, v, 0.2, control) {
        Ok(r) => Some(r.max()),
        Err(e) if outside_chart(&e) => None,
        Err(e) => panic!("{e}"),
    }
}

//! Acceptance criteria, one PASS/FAIL line each. Runs with a custom harness
//! so the lines are always printed; exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::Rng;

use nullrig::catalog::{load, Scenario};
use nullrig::checks::{hunt_options, run, RunConfig, Suite};
use nullrig::exec::Execution;
use nullrig::geodesics::{
    cross_metric_residual, hunt, integrate, prop3_equivalence_check, sample_times, CausalCharacter,
    Control, GeodesicState, MetricKind, RiggedChart,
};
use nullrig::report::{CheckReport, Status};
use nullrig::rigging::RiggedFrame;
use nullrig::sampling::sample_rng;
use nullrig::spacetime::{ChartedSpacetime, VectorField};
use nullrig::transverse::{InducedChart, TransverseGeometry};

type Outcome = Result<String, String>;

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
const CLOSED_TOTALLY_GEODESIC: [&str; 4] = [
    "minkowski_hyperplane",
    "ppwave_flat",
    "desitter_horizon",
    "ads_slice",
];

fn scenario(name: &str) -> Scenario {
    load(name).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn report(name: &str, suites: &[Suite], samples: usize, execution: Execution) -> CheckReport {
    let s = scenario(name);
    let mut config = RunConfig::for_scenario(&s).with_suites(suites);
    config.samples = samples;
    config.execution = execution;
    run(&s, &config).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Max residual of an evaluated check, failing on skips.
fn residual(r: &CheckReport, id: &str) -> Result<f64, String> {
    let c = r
        .check(id)
        .ok_or_else(|| format!("{}: no record {id}", r.scenario))?;
    if c.status == Status::Skipped {
        return Err(format!(
            "{}: {id} skipped ({})",
            r.scenario,
            c.reason.as_deref().unwrap_or("")
        ));
    }
    Ok(c.max_residual)
}

fn below(r: &CheckReport, id: &str, tol: f64) -> Result<f64, String> {
    let v = residual(r, id)?;
    if v < tol {
        Ok(v)
    } else {
        Err(format!("{}: {id} = {v:e} not below {tol:e}", r.scenario))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn frames(name: &str, count: usize) -> (Scenario, Vec<RiggedFrame>) {
    let s = scenario(name);
    let surface = s.hypersurface.as_ref().unwrap();
    let frames = surface
        .sample_points(count, s.seed)
        .unwrap()
        .iter()
        .map(|p| surface.build_frame(p).unwrap())
        .collect();
    (s, frames)
}

fn c1_curvature_identity() -> Outcome {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for name in [
        "minkowski_hyperplane",
        "ppwave_wavefront",
        "ppwave_twisted",
        "desitter_horizon",
        "ads_slice",
    ] {
        let r = report(name, &[Suite::Curvat], 200, Execution::Sequential);
        worst =
            worst
                .max(below(&r, "curvat.rigged", 1e-5)?)
                .max(below(&r, "curvat.ambient", 1e-5)?);
    }
    let elapsed = started.elapsed().as_secs_f64();
    ensure(elapsed < 60.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!(
        "max residual {worst:.2e} over 5 x 200 samples in {elapsed:.1} s on one thread"
    ))
}

fn transverse_mean(r: &CheckReport) -> Result<f64, String> {
    r.check("expected.transverse_curvature_mean")
        .and_then(|c| c.value)
        .ok_or_else(|| format!("{}: no transverse curvature mean", r.scenario))
}

fn c2_constant_curvature() -> Outcome {
    let ds = report(
        "desitter_horizon",
        &[Suite::Curvat],
        200,
        Execution::Parallel,
    );
    let mean = transverse_mean(&ds)?;
    ensure((mean - 1.0).abs() < 1e-4, || {
        format!("de Sitter mean {mean}")
    })?;
    let std = below(&ds, "curvat.transverse_constancy", 1e-5)?;
    let ads = report("ads_slice", &[Suite::Curvat], 200, Execution::Parallel);
    let ads_mean = transverse_mean(&ads)?;
    ensure((ads_mean + 1.0).abs() < 1e-4, || {
        format!("AdS mean {ads_mean}")
    })?;
    Ok(format!(
        "de Sitter mean {mean:.9} (std {std:.1e}), AdS mean {ads_mean:.9}"
    ))
}

fn c3_flow_identity() -> Outcome {
    let mut worst = 0.0f64;
    for name in HYPERSURFACES {
        let r = report(name, &[Suite::Flow], 200, Execution::Parallel);
        worst = worst.max(below(&r, "flow.lie_identity", 1e-7)?);
    }
    // On the cone both sides equal -2/r on unit screen vectors.
    let (_, frames) = frames("minkowski_cone", 40);
    let mut cone = 0.0f64;
    let mut smallest = f64::INFINITY;
    for f in frames {
        let p = f.point();
        let r = (p[1] * p[1] + p[2] * p[2] + p[3] * p[3]).sqrt();
        let tg = TransverseGeometry::from_frame(f);
        for a in 1..=2 {
            let lie = tg.lie_xi(a, a);
            cone = cone.max((lie + 2.0 / r).abs());
            smallest = smallest.min(lie.abs());
        }
    }
    ensure(cone < 1e-7, || {
        format!("cone L_xi g~ differs from -2/r by {cone:e}")
    })?;
    ensure(smallest > 0.1, || {
        format!("cone L_xi g~ unexpectedly small ({smallest:e})")
    })?;
    Ok(format!(
        "max residual {worst:.2e} on {} scenarios; cone matches -2/r to {cone:.1e} with |L_xi g~| >= {smallest:.2}",
        HYPERSURFACES.len()
    ))
}

fn c4_connection_coincidence() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for name in HYPERSURFACES {
        let r = report(name, &[Suite::Transverse], 200, Execution::Parallel);
        let c = r.check("transverse.connection_coincidence").unwrap();
        if name == "minkowski_cone" {
            ensure(c.status == Status::Skipped, || {
                "cone connection check not skipped".into()
            })?;
            continue;
        }
        worst = worst.max(below(&r, "transverse.connection_coincidence", 1e-7)?);
        count += 1;
    }
    Ok(format!(
        "max coefficient difference {worst:.2e} on {count} totally geodesic scenarios"
    ))
}

fn c5_screen_form_identity() -> Outcome {
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for name in HYPERSURFACES {
        let r = report(name, &[Suite::Induced], 200, Execution::Parallel);
        a = a.max(below(&r, "induced.screen_form_identity", 1e-8)?);
        b = b.max(below(&r, "induced.b_two_route", 1e-8)?);
    }
    Ok(format!(
        "C identity {a:.2e}, two-route B {b:.2e} at 200 samples per scenario"
    ))
}

fn c6_closed_rigging_chain() -> Outcome {
    let (mut dw, mut lie, mut par) = (0.0f64, 0.0f64, 0.0f64);
    for name in CLOSED_TOTALLY_GEODESIC {
        let r = report(name, &[Suite::Flow], 200, Execution::Parallel);
        dw = dw.max(below(&r, "flow.domega_closed", 1e-8)?);
        lie = lie.max(below(&r, "flow.killing_xi", 1e-8)?);
        par = par.max(below(&r, "flow.xi_parallel", 1e-7)?);
    }
    let s = scenario("ppwave_twisted");
    let surface = s.hypersurface.as_ref().unwrap();
    let (mut control_dw, mut control_par) = (0.0f64, 0.0f64);
    for p in surface.sample_points(20, s.seed).unwrap() {
        let chart = InducedChart::on_surface(surface, &p, 3).unwrap();
        let tg = TransverseGeometry::at(surface, &p).unwrap();
        let e = tg.frame().screen();
        control_dw = control_dw.max(chart.domega(&e[0], &e[1]).abs());
        control_par = control_par.max(tg.killing_xi_residual_unchecked().1);
    }
    ensure(control_dw > 1e-3 && control_par > 1e-3, || {
        format!("twisted control too small: d omega {control_dw:e}, nabla~ xi {control_par:e}")
    })?;
    Ok(format!(
        "d omega {dw:.1e}, L_xi g~ {lie:.1e}, nabla~ xi {par:.1e}; twisted control d omega {control_dw:.3}, nabla~ xi {control_par:.3}"
    ))
}

/// `Hess f(x,y) + g(R(x,ζ)ζ,y) − g(∇_x ζ, ∇_y ζ)` with `f = ½g(ζ,ζ)` by
/// central differences of the metric and the field; curvature from the
/// library's Riemann tensor.
fn hessian_identity_by_differences(
    m: &ChartedSpacetime,
    z: &VectorField,
    p: &[f64],
    x: &[f64],
    y: &[f64],
) -> f64 {
    let n = m.dim();
    let h = 1e-3;
    let shifted = |d: &[(usize, f64)]| {
        let mut q = p.to_vec();
        for &(i, s) in d {
            q[i] += s;
        }
        q
    };
    let f = |q: &[f64]| {
        let zq = z.eval(q).unwrap();
        0.5 * m.inner(q, &zq, &zq).unwrap()
    };
    let gamma = m.christoffel(p).unwrap();
    let zp = z.eval(p).unwrap();
    let df: Vec<f64> = (0..n)
        .map(|k| (f(&shifted(&[(k, h)])) - f(&shifted(&[(k, -h)]))) / (2.0 * h))
        .collect();
    let mut hess = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d2 = (f(&shifted(&[(i, h), (j, h)]))
                - f(&shifted(&[(i, h), (j, -h)]))
                - f(&shifted(&[(i, -h), (j, h)]))
                + f(&shifted(&[(i, -h), (j, -h)])))
                / (4.0 * h * h);
            let christ: f64 = (0..n).map(|k| gamma[(k * n + i) * n + j] * df[k]).sum();
            hess += (d2 - christ) * x[i] * y[j];
        }
    }
    let nabla = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|k| {
                let mut out = 0.0;
                for i in 0..n {
                    let dz = (z.eval(&shifted(&[(i, h)])).unwrap()[k]
                        - z.eval(&shifted(&[(i, -h)])).unwrap()[k])
                        / (2.0 * h);
                    out += v[i] * dz;
                    for j in 0..n {
                        out += gamma[(k * n + i) * n + j] * v[i] * zp[j];
                    }
                }
                out
            })
            .collect()
    };
    let rm = m.riemann(p).unwrap();
    let mut rxz = vec![0.0; n];
    for (l, r) in rxz.iter_mut().enumerate() {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    *r += rm[((l * n + k) * n + i) * n + j] * zp[k] * x[i] * zp[j];
                }
            }
        }
    }
    hess + m.inner(p, &rxz, y).unwrap() - m.inner(p, &nabla(x), &nabla(y)).unwrap()
}

fn c7_killing_hessian() -> Outcome {
    let minkowski = scenario("minkowski_hyperplane").spacetime;
    let ppwave = scenario("ppwave_wavefront").spacetime;
    let field = |m: &ChartedSpacetime, c: [&str; 4]| {
        VectorField::parse(&c, m.coordinates(), "field").unwrap()
    };
    let cases = [
        ("d/dt", &minkowski, field(&minkowski, ["1", "0", "0", "0"])),
        (
            "d/dt + rotation",
            &minkowski,
            field(&minkowski, ["1", "-y", "x", "0"]),
        ),
        (
            "pp-wave d/du",
            &ppwave,
            field(&ppwave, ["1", "0", "0", "0"]),
        ),
    ];
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()
    };
    let mut worst = 0.0f64;
    for (label, m, z) in &cases {
        for i in 0..50 {
            let mut rng = sample_rng(3, i);
            let (p, x, y) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            let r = m
                .hessian_identity_residual(&p, z, &x, &y)
                .map_err(|e| format!("{label}: {e}"))?
                .abs();
            ensure(r < 1e-6, || format!("{label}: residual {r:e} at {p:?}"))?;
            worst = worst.max(r);
        }
    }
    let control = field(&minkowski, ["1 + x^2", "0", "0", "0"]);
    let p = [0.1, 0.5, -0.2, 0.3];
    ensure(
        minkowski
            .hessian_identity_residual(&p, &control, &p, &p)
            .is_err(),
        || "non-Killing control passed the Killing gate".into(),
    )?;
    let mut control_max = 0.0f64;
    let mut oracle_gap = 0.0f64;
    for i in 0..20 {
        let mut rng = sample_rng(4, i);
        let (q, x, y) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let r = minkowski
            .hessian_identity_residual_unchecked(&q, &control, &x, &y)
            .unwrap();
        oracle_gap = oracle_gap
            .max((r - hessian_identity_by_differences(&minkowski, &control, &q, &x, &y)).abs());
        control_max = control_max.max(r.abs());
    }
    ensure(control_max > 1e-3, || {
        format!("control residual only {control_max:e}")
    })?;
    ensure(oracle_gap < 1e-5, || {
        format!("finite-difference oracle disagrees by {oracle_gap:e}")
    })?;
    Ok(format!(
        "Killing residual {worst:.1e} on 3 fields; (1+x^2) d/dt control {control_max:.3} (difference oracle within {oracle_gap:.0e})"
    ))
}

fn unit_screen_vector(frame: &RiggedFrame, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    let e = frame.screen();
    let c: Vec<f64> = (0..e.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut v = vec![0.0; frame.dim()];
    for (ci, ei) in c.iter().zip(&e) {
        for (vk, ek) in v.iter_mut().zip(ei) {
            *vk += ci / norm * ek;
        }
    }
    v
}

fn c8_geodesic_correspondence() -> Outcome {
    let mut worst = 0.0f64;
    for name in ["minkowski_hyperplane", "ppwave_wavefront"] {
        let (s, frames) = frames(name, 12);
        let surface = s.hypersurface.as_ref().unwrap();
        for (i, f) in frames.iter().enumerate() {
            let v = unit_screen_vector(f, &mut sample_rng(s.seed, i as u64));
            for control in [Control::default(), Control::default().halved()] {
                let r = prop3_equivalence_check(surface, f.point(), &v, 0.5, control)
                    .map_err(|e| format!("{name}: {e}"))?
                    .max();
                ensure(r < 1e-6, || format!("{name}: discrepancy {r:e}"))?;
                worst = worst.max(r);
            }
        }
    }
    let s = scenario("minkowski_hyperplane_tilted");
    let surface = s.hypersurface.as_ref().unwrap();
    let point = [0.0, 0.0, 0.1, -0.2];
    let frame = surface.build_frame(&point).unwrap();
    let xi = frame.xi();
    let cbar = frame.cbar(&xi, &xi).unwrap();
    ensure((cbar - 1.0).abs() < 1e-6, || {
        format!("control C~(xi,xi) = {cbar}")
    })?;
    let rigged = RiggedChart::new(surface);
    // Along -ξ the curve moves to larger x, away from the chart edge.
    let back: Vec<f64> = xi.iter().map(|v| -v).collect();
    let start = rigged.project(&GeodesicState::new(&point, &back));
    let trajectory = integrate(&rigged, &start, &sample_times(0.5, 8), Control::default()).unwrap();
    let cross = cross_metric_residual(surface, MetricKind::Rigged, &trajectory).unwrap();
    ensure(cross.defect > 1e-3, || {
        format!("control cross-metric residual only {:e}", cross.defect)
    })?;
    Ok(format!(
        "three-way discrepancy {worst:.1e} (stable under halved tolerance); control C~ = {cbar:.9}, cross residual {:.3}",
        cross.defect
    ))
}

fn c9_periodic_hunt() -> Outcome {
    let s = scenario("flat_torus");
    let started = Instant::now();
    let options = hunt_options(&s, &RunConfig::for_scenario(&s));
    let origin = s.hunt.as_ref().map(|h| h.origin.clone()).unwrap();
    let table = hunt(&s.spacetime, &origin, options, Execution::Sequential);
    let elapsed = started.elapsed().as_secs_f64();
    ensure(elapsed < 120.0, || format!("took {elapsed:.1} s"))?;
    let orbits = &table.orbits;
    ensure(orbits.len() >= 3, || {
        format!("only {} orbits", orbits.len())
    })?;
    for o in orbits {
        ensure(o.closure_error < 1e-8, || {
            format!("closure error {:e}", o.closure_error)
        })?;
        // Flat metric: a closed geodesic translates by a lattice vector.
        let shift: Vec<f64> = o.velocity.iter().map(|v| v * o.period).collect();
        let off = shift
            .iter()
            .map(|x| (x - x.round()).abs())
            .fold(0.0, f64::max);
        let nonzero = shift.iter().any(|x| x.round() != 0.0);
        ensure(off < 1e-6 && nonzero, || {
            format!("period * velocity {shift:?} is not a lattice vector")
        })?;
    }
    for (i, a) in orbits.iter().enumerate() {
        for b in &orbits[i + 1..] {
            let d: f64 = a
                .velocity
                .iter()
                .zip(&b.velocity)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            ensure(d > 1e-6 || (a.period - b.period).abs() > 1e-6, || {
                "duplicate orbits".into()
            })?;
        }
    }
    let count = |c: CausalCharacter| orbits.iter().filter(|o| o.causal_character == c).count();
    let (null, space) = (
        count(CausalCharacter::Null),
        count(CausalCharacter::Spacelike),
    );
    ensure(null >= 1 && space >= 1, || {
        format!("{null} null, {space} spacelike")
    })?;
    Ok(format!(
        "{} orbits ({null} null, {space} spacelike, {} timelike) in {elapsed:.2} s",
        orbits.len(),
        count(CausalCharacter::Timelike)
    ))
}

fn c10_ricci_bound() -> Outcome {
    let mut worst = 0.0f64;
    let mut direct = 0.0f64;
    for name in CLOSED_TOTALLY_GEODESIC {
        let r = report(name, &[Suite::Curvat], 200, Execution::Parallel);
        worst = worst.max(below(&r, "curvat.ricci_bound", 1e-5)?);
        let s = scenario(name);
        let surface = s.hypersurface.as_ref().unwrap();
        for p in surface.sample_points(10, s.seed + 1).unwrap() {
            let tr = TransverseGeometry::at(surface, &p)
                .unwrap()
                .transverse_ricci(surface)
                .unwrap();
            let c = tr.comparison_residual.ok_or("comparison not computed")?;
            direct = direct.max(c);
        }
    }
    ensure(direct < 1e-5, || format!("direct comparison {direct:e}"))?;
    Ok(format!(
        "suite residual {worst:.1e}, direct unit-probe residual {direct:.1e}"
    ))
}

fn c11_determinism() -> Outcome {
    for name in ["ppwave_twisted", "desitter_horizon", "flat_torus"] {
        let s = scenario(name);
        let mut config = RunConfig::for_scenario(&s);
        config.samples = 40;
        let a = run(&s, &config).unwrap().to_json();
        let b = run(&s, &config).unwrap().to_json();
        config.execution = Execution::Sequential;
        let c = run(&s, &config).unwrap().to_json();
        ensure(a == b && a == c, || format!("{name}: reports differ"))?;
    }
    Ok("identical JSON across repeated and sequential runs of 3 scenarios".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("curvature identity", c1_curvature_identity),
        ("constant transverse curvature", c2_constant_curvature),
        ("Riemannian-flow identity", c3_flow_identity),
        ("connection coincidence", c4_connection_coincidence),
        ("screen fundamental form identity", c5_screen_form_identity),
        ("closed-rigging chain", c6_closed_rigging_chain),
        ("Killing-Hessian identity", c7_killing_hessian),
        ("geodesic correspondence", c8_geodesic_correspondence),
        ("periodic geodesic hunt", c9_periodic_hunt),
        ("transverse Ricci comparison", c10_ricci_bound),
        ("determinism", c11_determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let label = format!("criterion {} ({title})", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {label}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {label}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

use nullrig::catalog::{list_scenarios, load, Scenario};
use nullrig::checks::{hunt_options, run, RunConfig, Suite};
use nullrig::exec::Execution;
use nullrig::geodesics::{hunt, integrate, AmbientChart, Control, GeodesicState};
use nullrig::report::{CheckReport, Status};
use serde_json::Value;

fn scenario(name: &str) -> Scenario {
    load(name).unwrap()
}

fn default_report(s: &Scenario) -> CheckReport {
    run(s, &RunConfig::for_scenario(s)).unwrap()
}

#[test]
fn every_scenario_passes_at_defaults() {
    for name in list_scenarios() {
        let s = scenario(name);
        let report = default_report(&s);
        let failed: Vec<_> = report
            .checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .map(|c| &c.id)
            .collect();
        assert!(failed.is_empty(), "{name}: {failed:?}");
        for e in &s.expected {
            let id = format!("expected.{}", e.quantity);
            let record = report
                .check(&id)
                .unwrap_or_else(|| panic!("{name}: no record {id}"));
            assert_eq!(record.status, Status::Pass, "{name}: {id}");
        }
    }
}

#[test]
fn negative_controls_miss_by_a_wide_margin() {
    // The cone is not totally geodesic.
    let cone = scenario("minkowski_cone");
    let b = cone
        .hypersurface
        .as_ref()
        .unwrap()
        .totally_geodesic_report(cone.samples, cone.seed, Execution::Sequential)
        .unwrap();
    assert!(b - 1e-7 > 1e-3, "cone max |B| = {b}");

    // The twisted rigging is not closed.
    let twisted = scenario("ppwave_twisted");
    let report = default_report(&twisted);
    let domega = report
        .check("expected.max_abs_domega")
        .unwrap()
        .value
        .unwrap();
    assert!(domega - 1e-8 > 1e-3, "twisted max |d omega| = {domega}");
    for id in ["flow.domega_closed", "flow.killing_xi", "flow.xi_parallel"] {
        assert_eq!(report.check(id).unwrap().status, Status::Skipped, "{id}");
    }
}

/// Coordinate difference reduced onto the fundamental domain of the periodic axes.
fn reduced(periods: &[Option<f64>], a: &[f64], b: &[f64]) -> Vec<f64> {
    periods
        .iter()
        .zip(a.iter().zip(b))
        .map(|(p, (x, y))| {
            let d = y - x;
            p.map_or(d, |p| d - p * (d / p).round())
        })
        .collect()
}

#[test]
fn reported_orbits_close_when_integrated_afresh() {
    let s = scenario("flat_torus");
    let options = hunt_options(&s, &RunConfig::for_scenario(&s));
    let origin = s.hunt.as_ref().unwrap().origin.clone();
    let table = hunt(&s.spacetime, &origin, options, Execution::Parallel);
    assert!(!table.orbits.is_empty());
    let chart = AmbientChart(&s.spacetime);
    for o in &table.orbits {
        let start = GeodesicState::new(&o.position, &o.velocity);
        let end = &integrate(&chart, &start, &[o.period], Control::default()).unwrap()[0];
        let dx = reduced(s.spacetime.periods(), &o.position, &end.position);
        let closure = dx
            .iter()
            .chain(
                end.velocity
                    .iter()
                    .zip(&o.velocity)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>()
                    .iter(),
            )
            .map(|x| x.abs())
            .fold(0.0, f64::max);
        assert!(
            closure < 1e-8,
            "orbit T = {} closes to {closure:e}",
            o.period
        );
    }
}

fn is_number_string(v: &Value) -> bool {
    v.as_str()
        .is_some_and(|s| s.parse::<f64>().is_ok() || matches!(s, "NaN" | "inf" | "-inf"))
}

fn assert_report_schema(json: &str) {
    let r: Value = serde_json::from_str(json).unwrap();
    assert!(r["scenario"].is_string());
    assert!(r["engine_version"].is_string());
    assert!(r["seed"].is_u64());
    assert!(r["samples"].is_u64());
    assert!(r["passed"].is_boolean());
    let checks = r["checks"].as_array().unwrap();
    let ids: Vec<&str> = checks
        .iter()
        .map(|c| c["check_id"].as_str().unwrap())
        .collect();
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    assert_eq!(ids, sorted, "records sorted by id");
    for c in checks {
        assert!(c["anchor"].is_string());
        assert!(c["sample_count"].is_u64());
        assert!(is_number_string(&c["tolerance"]));
        let status = c["status"].as_str().unwrap();
        assert!(matches!(status, "pass" | "fail" | "skipped"));
        if status == "skipped" {
            assert!(c["reason"].is_string(), "skipped record needs a reason");
            assert!(c.get("max_residual").is_none());
        } else {
            assert!(is_number_string(&c["max_residual"]));
        }
        if let Some(v) = c.get("value") {
            assert!(is_number_string(v));
        }
    }
    assert!(r.get("wall_time_seconds").is_none_or(is_number_string));
}

#[test]
fn emitted_reports_follow_the_schema() {
    for name in list_scenarios() {
        let s = scenario(name);
        let mut config = RunConfig::for_scenario(&s);
        config.samples = config.samples.min(12);
        assert_report_schema(&run(&s, &config).unwrap().to_json());
    }
    let s = scenario("minkowski_hyperplane");
    let mut config = RunConfig::for_scenario(&s).with_suites(&[Suite::Frame]);
    config.timing = true;
    let json = run(&s, &config).unwrap().to_json();
    assert_report_schema(&json);
    assert!(json.contains("wall_time_seconds"));
}

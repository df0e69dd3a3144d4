//! Check suites over seeded samples of a scenario, assembled into a
//! [`CheckReport`].
//!
//! Every sample is evaluated independently (its random probes come from its
//! own stream), so the report does not depend on the execution mode.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::catalog::Scenario;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geodesics::{
    cross_metric_residual, energy_drift, hunt, integrate, prop3_equivalence_check,
    reversibility_residual, sample_times, AmbientChart, CausalCharacter, Control, GeodesicState,
    HuntOptions, MetricKind, RiggedChart, SearchOptions,
};
use crate::report::{CheckRecord, CheckReport, Status};
use crate::rigging::{NullHypersurface, RiggedFrame, TOTALLY_GEODESIC_TOL};
use crate::sampling::sample_rng;
use crate::spacetime::{antisymmetry_residual, bianchi_residual, orthonormal_frame, KILLING_TOL};
use crate::transverse::{InducedChart, TransverseGeometry};

/// Samples used by the geodesic suite (each integrates several curves).
pub const GEODESIC_SAMPLES: usize = 32;
/// Parameter length of the suite's geodesics.
const GEODESIC_LENGTH: f64 = 0.2;
/// `|C̄(γ′,γ′)|` below which a rigged geodesic must also be an ambient one.
const CBAR_ZERO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Frame,
    Induced,
    Flow,
    Transverse,
    Curvat,
    Geodesic,
    Periodic,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Frame,
        Suite::Induced,
        Suite::Flow,
        Suite::Transverse,
        Suite::Curvat,
        Suite::Geodesic,
        Suite::Periodic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Frame => "frame",
            Suite::Induced => "induced",
            Suite::Flow => "flow",
            Suite::Transverse => "transverse",
            Suite::Curvat => "curvat",
            Suite::Geodesic => "geodesic",
            Suite::Periodic => "periodic",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::scenario("suites", format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gate {
    None,
    Killing,
    TotallyGeodesic,
    Closed,
    ClosedTotallyGeodesic,
}

struct CheckDef {
    id: &'static str,
    suite: Suite,
    anchor: &'static str,
    tolerance: f64,
    gate: Gate,
}

const fn def(
    id: &'static str,
    suite: Suite,
    anchor: &'static str,
    tolerance: f64,
    gate: Gate,
) -> CheckDef {
    CheckDef {
        id,
        suite,
        anchor,
        tolerance,
        gate,
    }
}

use Gate as G;
use Suite as S;

/// Residual checks computed per sample. Expected-value, constancy and hunt
/// records are assembled separately.
const CHECKS: &[CheckDef] = &[
    def("ambient.antisymmetry", S::Frame, "R(x,y,z,w) = -R(y,x,z,w) = -R(x,y,w,z)", 1e-9, G::None),
    def("ambient.bianchi", S::Frame, "R(x,y)z + R(y,z)x + R(z,x)y = 0", 1e-9, G::None),
    def(
        "ambient.killing_hessian",
        S::Frame,
        "Hess(g(zeta,zeta)/2)(x,y) = g(nabla_x zeta, nabla_y zeta) - g(R(x,zeta)zeta, y) for Killing zeta",
        1e-6,
        G::Killing,
    ),
    def("ambient.ncc", S::Frame, "Ric(u,u) >= 0 for null u (violation amount)", 1e-6, G::None),
    def("frame.hypersurface_null", S::Frame, "g(grad F, grad F) = 0 on L", 1e-8, G::None),
    def("frame.null_rigging", S::Frame, "g(N,N) = 0, g(N,xi) = 1, g(N,S) = 0", 1e-9, G::None),
    def("frame.rigged_metric", S::Frame, "omega(xi) = 1, omega(S) = 0, g~ = I in the frame", 1e-9, G::None),
    def("frame.xi", S::Frame, "g(xi,xi) = 0, g(xi,zeta) = 1, dF(xi) = 0", 1e-9, G::None),
    def("induced.b_radical", S::Induced, "B(xi, U) = 0", 1e-9, G::None),
    def("induced.b_symmetry", S::Induced, "B(U,V) = B(V,U)", 1e-8, G::None),
    def("induced.b_two_route", S::Induced, "-g(nabla_U xi, V) = g(nabla_U V~, xi)", 1e-8, G::None),
    def("induced.screen_form_identity", S::Induced, "C(U,X) = -g(nabla_U zeta, X) - g(zeta,zeta) B(U,X) / 2", 1e-8, G::None),
    def(
        "induced.shape_consistency",
        S::Induced,
        "g(A*(U), V) = B(U,V), g(A(U), X) = C(U,X)",
        1e-8,
        G::None,
    ),
    def("induced.tau_two_route", S::Induced, "g(nabla_U zeta, xi) = g(nabla_U N, xi)", 1e-8, G::None),
    def("flow.domega_closed", S::Flow, "closed rigging implies d omega = 0", 1e-8, G::Closed),
    def(
        "flow.killing_xi",
        S::Flow,
        "closed rigging, B = 0 implies L_xi g~ = 0",
        1e-8,
        G::ClosedTotallyGeodesic,
    ),
    def("flow.lie_identity", S::Flow, "(L_xi g~)(U,V) = -2 B(U,V)", 1e-7, G::None),
    def(
        "flow.xi_parallel",
        S::Flow,
        "closed rigging, B = 0 implies nabla~ xi = 0",
        1e-7,
        G::ClosedTotallyGeodesic,
    ),
    def(
        "transverse.connection_coincidence",
        S::Transverse,
        "nabla^T = nabla* on the screen when B = 0",
        1e-7,
        G::TotallyGeodesic,
    ),
    def(
        "transverse.domega_two_route",
        S::Transverse,
        "d omega(U,V) = g~(nabla~_U xi, V) - g~(nabla~_V xi, U)",
        1e-7,
        G::None,
    ),
    def("transverse.metric_compat", S::Transverse, "nabla* g = 0 on the screen", 1e-7, G::None),
    def(
        "transverse.pullback",
        S::Transverse,
        "graph-chart g~ = (g + alpha (x) alpha) on the frame",
        1e-9,
        G::None,
    ),
    def(
        "transverse.ricci_symmetry",
        S::Transverse,
        "Ric^T is symmetric",
        1e-8,
        G::TotallyGeodesic,
    ),
    def("transverse.root_polish", S::Transverse, "|F| at the graph-chart base point", 1e-12, G::None),
    def(
        "transverse.scalar_trace",
        S::Transverse,
        "S^T = tr Ric^T = sum of K^T over frame pairs",
        1e-9,
        G::TotallyGeodesic,
    ),
    def(
        "transverse.torsion",
        S::Transverse,
        "nabla*_X Y - nabla*_Y X = P[X,Y]",
        1e-7,
        G::None,
    ),
    def("curvat.ambient", S::Curvat, "K^T(X,Y) = K(X,Y)", 1e-5, G::TotallyGeodesic),
    def(
        "curvat.ricci_bound",
        S::Curvat,
        "Ric^T(X,X) = Ric(X,X) - 2 g(R(xi,X)X, N)",
        1e-5,
        G::ClosedTotallyGeodesic,
    ),
    def(
        "curvat.rigged",
        S::Curvat,
        "K^T(X,Y) = K~(X,Y) + 3/4 d omega(X,Y)^2",
        1e-5,
        G::TotallyGeodesic,
    ),
    def(
        "geodesic.cbar_criterion",
        S::Geodesic,
        "C~(g',g') = 0 implies a g~-geodesic is a g-geodesic",
        1e-8,
        G::ClosedTotallyGeodesic,
    ),
    def("geodesic.null_energy", S::Geodesic, "g(g',g') conserved along null geodesics", 1e-8, G::None),
    def(
        "geodesic.prop3",
        S::Geodesic,
        "screen-leaf geodesics agree for g~, g and i*g",
        1e-6,
        G::None,
    ),
    def("geodesic.reversibility", S::Geodesic, "integrate T then -T returns to the start", 1e-8, G::None),
];

const EXPECTED_ANCHOR: &str = "scenario expected value";
const CONSTANCY_ID: &str = "curvat.transverse_constancy";
const CONSTANCY_ANCHOR: &str = "constant curvature c implies K^T = c (sample std)";
const CONSTANCY_TOL: f64 = 1e-5;
const HUNT_ID: &str = "periodic.hunt";
const HUNT_ANCHOR: &str = "gamma(T) = gamma(0), gamma'(T) = gamma'(0) modulo the lattice";

fn expected_suite(quantity: &str) -> Suite {
    match quantity {
        "max_abs_b" => Suite::Induced,
        "max_abs_domega" => Suite::Transverse,
        _ => Suite::Curvat,
    }
}

/// Every check id the runner can emit (for `--tol` validation).
pub fn check_ids() -> Vec<String> {
    let mut ids: Vec<String> = CHECKS.iter().map(|c| c.id.to_string()).collect();
    ids.extend(
        crate::catalog::QUANTITIES
            .iter()
            .map(|q| format!("expected.{q}")),
    );
    ids.push(CONSTANCY_ID.into());
    ids.push(HUNT_ID.into());
    ids.sort();
    ids
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub samples: usize,
    pub seed: u64,
    pub suites: Vec<Suite>,
    pub tolerances: BTreeMap<String, f64>,
    pub execution: Execution,
    pub timing: bool,
    /// Overrides the scenario's hunt defaults.
    pub hunt: Option<HuntOptions>,
}

impl RunConfig {
    /// All suites with the scenario's default seed and sample count.
    pub fn for_scenario(scenario: &Scenario) -> Self {
        RunConfig {
            samples: scenario.samples,
            seed: scenario.seed,
            suites: Suite::ALL.to_vec(),
            tolerances: BTreeMap::new(),
            execution: Execution::default(),
            timing: false,
            hunt: None,
        }
    }

    pub fn with_suites(mut self, suites: &[Suite]) -> Self {
        self.suites = suites.to_vec();
        self
    }

    fn tolerance(&self, id: &str, default: f64) -> f64 {
        self.tolerances.get(id).copied().unwrap_or(default)
    }

    fn has(&self, suite: Suite) -> bool {
        self.suites.contains(&suite)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Obs {
    Residual(f64),
    Value(f64),
    Precondition(String),
}

#[derive(Debug, Default)]
struct Aggregate {
    max: f64,
    count: usize,
    values: Vec<f64>,
    precondition: Option<String>,
}

impl Aggregate {
    fn push(&mut self, obs: Obs) {
        match obs {
            Obs::Residual(r) => {
                if !self.max.is_nan() && (r.is_nan() || r > self.max || self.count == 0) {
                    self.max = r;
                }
                self.count += 1;
            }
            Obs::Value(v) => self.values.push(v),
            Obs::Precondition(p) => {
                self.precondition.get_or_insert(p);
            }
        }
    }

    fn max_value(&self) -> f64 {
        self.values.iter().fold(
            f64::NEG_INFINITY,
            |a, &b| if b.is_nan() { b } else { a.max(b) },
        )
    }

    fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    fn std(&self) -> f64 {
        let m = self.mean();
        (self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

type Observations = Vec<(&'static str, Obs)>;

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn combine(coeffs: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (c, b) in coeffs.iter().zip(basis) {
        for (o, x) in out.iter_mut().zip(b) {
            *o += c * x;
        }
    }
    out
}

fn random_tangent(rng: &mut ChaCha8Rng, frame: &RiggedFrame) -> Vec<f64> {
    let f = frame.frame();
    combine(&uniform(rng, f.len()), &f)
}

/// A `g`-orthonormal pair in the screen from random coefficients.
fn random_screen_pair(rng: &mut ChaCha8Rng, frame: &RiggedFrame) -> (Vec<f64>, Vec<f64>) {
    let e = frame.screen();
    let q = e.len();
    let unit = |v: Vec<f64>| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect::<Vec<_>>()
    };
    let a = unit(uniform(rng, q));
    let b = uniform(rng, q);
    let d: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let b = unit(b.iter().zip(&a).map(|(y, x)| y - d * x).collect());
    (combine(&a, &e), combine(&b, &e))
}

fn euclidean_unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn residual_or_precondition(r: Result<f64>) -> Result<Option<Obs>> {
    match r {
        Err(Error::Precondition { name, detail }) => {
            Ok(Some(Obs::Precondition(format!("{name}: {detail}"))))
        }
        r => Ok(within_chart(r)?.map(Obs::Residual)),
    }
}

/// `None` when a geodesic left the coordinate chart: the sample then says
/// nothing about the identity.
fn within_chart<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::ChartExit { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn observe_sample(
    surface: &NullHypersurface,
    point: &[f64],
    index: usize,
    config: &RunConfig,
) -> Result<Observations> {
    let mut rng = sample_rng(config.seed, index as u64);
    let ambient = surface.ambient();
    let n = ambient.dim();
    let tg = TransverseGeometry::at(surface, point)?;
    let frame = tg.frame();
    let geo = frame.geometry();
    let mut obs: Observations = Vec::new();
    let b_max = frame.second_fundamental_matrix().amax();
    obs.push(("gate.b", Obs::Value(b_max)));
    obs.push((
        "gate.closed",
        Obs::Value(
            ambient
                .closedness_residual(point, surface.rigging())?
                .amax(),
        ),
    ));
    obs.push((
        "gate.killing",
        Obs::Value(ambient.killing_residual(point, surface.rigging())?.amax()),
    ));
    let fr = frame.frame();

    if config.has(Suite::Frame) {
        let (x, y, z, w) = (
            uniform(&mut rng, n),
            uniform(&mut rng, n),
            uniform(&mut rng, n),
            uniform(&mut rng, n),
        );
        obs.push((
            "ambient.bianchi",
            Obs::Residual(bianchi_residual(geo, &x, &y, &z)),
        ));
        obs.push((
            "ambient.antisymmetry",
            Obs::Residual(antisymmetry_residual(geo, &x, &y, &z, &w)),
        ));
        let h = ambient.hessian_identity_residual_unchecked(point, surface.rigging(), &x, &y)?;
        obs.push(("ambient.killing_hessian", Obs::Residual(h.abs())));
        let basis = orthonormal_frame(&geo.metric_matrix())?;
        let dir = euclidean_unit(&uniform(&mut rng, n - 1));
        let mut u = basis[0].clone();
        for (c, e) in dir.iter().zip(&basis[1..]) {
            for (ui, ei) in u.iter_mut().zip(e) {
                *ui += c * ei;
            }
        }
        let ric = ambient.ncc_residual(point, &u)?;
        obs.push(("ambient.ncc", Obs::Residual((-ric).max(0.0))));
        obs.push(("frame.xi", Obs::Residual(frame.xi_residual())));
        obs.push((
            "frame.null_rigging",
            Obs::Residual(frame.null_rigging_residual()),
        ));
        obs.push((
            "frame.rigged_metric",
            Obs::Residual(frame.rigged_metric_residual()),
        ));
        let df2: f64 = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                frame.df(&e).powi(2)
            })
            .sum();
        obs.push((
            "frame.hypersurface_null",
            Obs::Residual(frame.level_gradient_norm().abs() / df2),
        ));
    }

    if config.has(Suite::Induced) {
        let xi = frame.xi();
        let mut radical = 0.0f64;
        for f in &fr {
            radical = radical
                .max(frame.second_fundamental(&xi, f)?.abs())
                .max(frame.second_fundamental(f, &xi)?.abs());
        }
        obs.push(("induced.b_radical", Obs::Residual(radical)));
        let (u, v) = (
            random_tangent(&mut rng, frame),
            random_tangent(&mut rng, frame),
        );
        let (x, _) = random_screen_pair(&mut rng, frame);
        let buv = frame.second_fundamental(&u, &v)?;
        obs.push((
            "induced.b_symmetry",
            Obs::Residual((buv - frame.second_fundamental(&v, &u)?).abs()),
        ));
        obs.push((
            "induced.b_two_route",
            Obs::Residual((buv - frame.second_fundamental_by_extension(&u, &v)?).abs()),
        ));
        obs.push((
            "induced.screen_form_identity",
            Obs::Residual(frame.screen_form_residual(&u, &x)?.abs()),
        ));
        obs.push((
            "induced.tau_two_route",
            Obs::Residual((frame.tau(&u)? - frame.tau_by_null_rigging(&u)?).abs()),
        ));
        let astar = frame.g(&frame.screen_shape_operator(&u)?, &v) - buv;
        let a = frame.g(&frame.shape_operator(&u)?, &x) - frame.screen_fundamental(&u, &x)?;
        obs.push((
            "induced.shape_consistency",
            Obs::Residual(astar.abs().max(a.abs())),
        ));
        obs.push(("expected.max_abs_b", Obs::Value(b_max)));
    }

    let needs_chart =
        config.has(Suite::Flow) || config.has(Suite::Transverse) || config.has(Suite::Curvat);
    let chart = if needs_chart {
        Some(InducedChart::on_surface(surface, point, 3)?)
    } else {
        None
    };

    if config.has(Suite::Flow) {
        let chart = chart.as_ref().unwrap();
        let (u, v) = (
            random_tangent(&mut rng, frame),
            random_tangent(&mut rng, frame),
        );
        obs.push((
            "flow.lie_identity",
            Obs::Residual(tg.flow_residual(&u, &v)?.abs()),
        ));
        let (lie, par) = tg.killing_xi_residual_unchecked();
        obs.push(("flow.killing_xi", Obs::Residual(lie)));
        obs.push(("flow.xi_parallel", Obs::Residual(par)));
        let mut dw = 0.0f64;
        for a in &fr {
            for b in &fr {
                dw = dw.max(chart.domega(a, b).abs());
            }
        }
        obs.push(("flow.domega_closed", Obs::Residual(dw)));
    }

    if config.has(Suite::Transverse) {
        let chart = chart.as_ref().unwrap();
        let mut pull = 0.0f64;
        for a in &fr {
            for b in &fr {
                let lhs = chart.inner(&chart.to_induced(a), &chart.to_induced(b));
                pull = pull.max((lhs - frame.rigged_inner(a, b)).abs());
            }
        }
        obs.push(("transverse.pullback", Obs::Residual(pull)));
        obs.push((
            "transverse.root_polish",
            Obs::Residual(chart.root_residual()),
        ));
        obs.push((
            "transverse.metric_compat",
            Obs::Residual(tg.metric_compatibility_residual()),
        ));
        obs.push(("transverse.torsion", Obs::Residual(tg.torsion_residual())));
        let t = tg.transverse_connection_unchecked();
        let s = tg.screen_connection();
        let diff = t
            .iter()
            .flatten()
            .flatten()
            .zip(s.iter().flatten().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        obs.push(("transverse.connection_coincidence", Obs::Residual(diff)));
        let (u, v) = (
            random_tangent(&mut rng, frame),
            random_tangent(&mut rng, frame),
        );
        obs.push((
            "transverse.domega_two_route",
            Obs::Residual((chart.domega(&u, &v) - tg.domega_by_connection(&u, &v)).abs()),
        ));
        let ric = tg.transverse_ricci_matrix();
        obs.push((
            "transverse.ricci_symmetry",
            Obs::Residual((&ric - ric.transpose()).amax()),
        ));
        let e = frame.screen();
        let mut sectional_sum = 0.0;
        let mut domega_max = 0.0f64;
        for a in 0..e.len() {
            for b in 0..e.len() {
                if a != b {
                    sectional_sum += tg.transverse_curvature_unchecked(&e[a], &e[b]);
                }
                domega_max = domega_max.max(chart.domega(&e[a], &e[b]).abs());
            }
        }
        obs.push((
            "transverse.scalar_trace",
            Obs::Residual((sectional_sum - ric.trace()).abs()),
        ));
        obs.push(("expected.max_abs_domega", Obs::Value(domega_max)));
    }

    if config.has(Suite::Curvat) {
        let chart = chart.as_ref().unwrap();
        let (x, y) = random_screen_pair(&mut rng, frame);
        let kt = tg.transverse_curvature_unchecked(&x, &y);
        let kr = chart.rigged_curvature(&x, &y)?;
        let dw = chart.domega(&x, &y);
        let ka = geo.sectional(&x, &y)?;
        obs.push((
            "curvat.rigged",
            Obs::Residual((kt - kr - 0.75 * dw * dw).abs()),
        ));
        obs.push(("curvat.ambient", Obs::Residual((kt - ka).abs())));
        obs.push(("expected.transverse_curvature_mean", Obs::Value(kt)));
        obs.push(("expected.rigged_curvature_mean", Obs::Value(kr)));
        obs.push(("expected.ambient_screen_curvature_mean", Obs::Value(ka)));
        let ric = tg.transverse_ricci_matrix();
        let cx: Vec<f64> = frame.screen().iter().map(|e| frame.g(&x, e)).collect();
        let mut lhs = 0.0;
        for a in 0..cx.len() {
            for b in 0..cx.len() {
                lhs += ric[(a, b)] * cx[a] * cx[b];
            }
        }
        obs.push((
            "curvat.ricci_bound",
            Obs::Residual((lhs - tg.ricci_bound_quantity(&x)).abs()),
        ));
    }

    if config.has(Suite::Geodesic) && index < GEODESIC_SAMPLES {
        let control = Control::default();
        let ambient_chart = AmbientChart(ambient);
        let start = GeodesicState::new(point, &euclidean_unit(&frame.xi()));
        let times = sample_times(GEODESIC_LENGTH, 8);
        if let Some(traj) = within_chart(integrate(&ambient_chart, &start, &times, control))? {
            obs.push((
                "geodesic.null_energy",
                Obs::Residual(energy_drift(&ambient_chart, &start, &traj)?),
            ));
        }
        if let Some(r) = within_chart(reversibility_residual(
            &ambient_chart,
            &start,
            GEODESIC_LENGTH,
            control,
        ))? {
            obs.push(("geodesic.reversibility", Obs::Residual(r)));
        }
        let (x, _) = random_screen_pair(&mut rng, frame);
        let prop3 =
            prop3_equivalence_check(surface, point, &x, GEODESIC_LENGTH, control).map(|r| r.max());
        if let Some(o) = residual_or_precondition(prop3)? {
            obs.push(("geodesic.prop3", o));
        }
        let u = euclidean_unit(&random_tangent(&mut rng, frame));
        let rigged = RiggedChart::new(surface);
        let start = rigged.project(&GeodesicState::new(point, &u));
        if let Some(traj) = within_chart(integrate(&rigged, &start, &times, control))? {
            let cross = cross_metric_residual(surface, MetricKind::Rigged, &traj)?;
            if cross.cbar < CBAR_ZERO {
                obs.push(("geodesic.cbar_criterion", Obs::Residual(cross.defect)));
            }
        }
    }
    Ok(obs)
}

/// Runs the selected suites on `scenario`.
pub fn run(scenario: &Scenario, config: &RunConfig) -> Result<CheckReport> {
    let started = Instant::now();
    let known = check_ids();
    for id in config.tolerances.keys() {
        if !known.contains(id) {
            return Err(Error::scenario("--tol", format!("unknown check `{id}`")));
        }
    }
    let mut records = Vec::new();
    let surface_suites: Vec<Suite> = config
        .suites
        .iter()
        .copied()
        .filter(|s| *s != Suite::Periodic)
        .collect();
    match &scenario.hypersurface {
        None => {
            for d in CHECKS.iter().filter(|d| surface_suites.contains(&d.suite)) {
                records.push(CheckRecord::skipped(
                    d.id,
                    d.anchor,
                    config.tolerance(d.id, d.tolerance),
                    "scenario has no hypersurface",
                ));
            }
        }
        Some(surface) if !surface_suites.is_empty() => {
            records.extend(run_surface_suites(scenario, surface, config)?);
        }
        Some(_) => {}
    }
    if config.has(Suite::Periodic) {
        records.push(run_hunt(scenario, config));
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(CheckReport {
        scenario: scenario.name.clone(),
        engine_version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        samples: config.samples,
        checks: records,
        wall_time: config.timing.then(|| started.elapsed().as_secs_f64()),
    })
}

fn run_surface_suites(
    scenario: &Scenario,
    surface: &NullHypersurface,
    config: &RunConfig,
) -> Result<Vec<CheckRecord>> {
    let points = surface.sample_points(config.samples, config.seed)?;
    let per_sample = config.execution.map_indexed(points.len(), |i| {
        observe_sample(surface, &points[i], i, config)
    });
    let mut agg: BTreeMap<&'static str, Aggregate> = BTreeMap::new();
    for obs in per_sample {
        for (id, o) in obs? {
            agg.entry(id).or_default().push(o);
        }
    }
    let gate_max = |id: &str| agg.get(id).map_or(0.0, Aggregate::max_value);
    let max_b = gate_max("gate.b");
    let max_closed = gate_max("gate.closed");
    let max_killing = gate_max("gate.killing");
    let tg_reason = (!(max_b < TOTALLY_GEODESIC_TOL))
        .then(|| format!("not totally geodesic (max |B| = {max_b:.1})"));
    let closed_reason = (!(max_closed < KILLING_TOL))
        .then(|| format!("rigging not closed (max |d alpha| = {max_closed:.1e})"));
    let killing_reason = (!(max_killing < KILLING_TOL))
        .then(|| format!("rigging not Killing (max |L_zeta g| = {max_killing:.1e})"));
    let gate_reason = |gate: Gate| -> Option<String> {
        match gate {
            Gate::None => None,
            Gate::Killing => killing_reason.clone(),
            Gate::TotallyGeodesic => tg_reason.clone(),
            Gate::Closed => closed_reason.clone(),
            Gate::ClosedTotallyGeodesic => tg_reason.clone().or_else(|| closed_reason.clone()),
        }
    };

    let mut records = Vec::new();
    for d in CHECKS.iter().filter(|d| config.has(d.suite)) {
        let tol = config.tolerance(d.id, d.tolerance);
        let suite_gate = if d.suite == Suite::Curvat {
            tg_reason.clone()
        } else {
            None
        };
        if let Some(reason) = suite_gate.or_else(|| gate_reason(d.gate)) {
            records.push(CheckRecord::skipped(d.id, d.anchor, tol, reason));
            continue;
        }
        let a = agg.get(d.id);
        if let Some(p) = a.and_then(|a| a.precondition.clone()) {
            records.push(CheckRecord::skipped(
                d.id,
                d.anchor,
                tol,
                format!("precondition failed ({p})"),
            ));
            continue;
        }
        match a {
            Some(a) if a.count > 0 => {
                records.push(CheckRecord::evaluated(d.id, d.anchor, a.count, a.max, tol))
            }
            _ => {
                let reason = if d.id == "geodesic.cbar_criterion" {
                    "C~(g',g') nonzero on every sampled geodesic"
                } else {
                    "no samples"
                };
                records.push(CheckRecord::skipped(d.id, d.anchor, tol, reason));
            }
        }
    }

    for e in &scenario.expected {
        let suite = expected_suite(&e.quantity);
        if !config.has(suite) {
            continue;
        }
        let id = format!("expected.{}", e.quantity);
        let tol = config.tolerance(&id, e.tolerance);
        if suite == Suite::Curvat {
            if let Some(reason) = &tg_reason {
                records.push(CheckRecord::skipped(
                    &id,
                    EXPECTED_ANCHOR,
                    tol,
                    reason.clone(),
                ));
                continue;
            }
        }
        let Some(a) = agg.get(id.as_str()).filter(|a| !a.values.is_empty()) else {
            records.push(CheckRecord::skipped(
                &id,
                EXPECTED_ANCHOR,
                tol,
                "no samples",
            ));
            continue;
        };
        let measured = if e.quantity.starts_with("max_abs") {
            a.max_value()
        } else {
            a.mean()
        };
        records.push(
            CheckRecord::evaluated(
                &id,
                EXPECTED_ANCHOR,
                a.values.len(),
                (measured - e.value).abs(),
                tol,
            )
            .with_value(measured),
        );
    }

    if config.has(Suite::Curvat) && scenario.expected("transverse_curvature_mean").is_some() {
        let tol = config.tolerance(CONSTANCY_ID, CONSTANCY_TOL);
        match (&tg_reason, agg.get("expected.transverse_curvature_mean")) {
            (Some(reason), _) => records.push(CheckRecord::skipped(
                CONSTANCY_ID,
                CONSTANCY_ANCHOR,
                tol,
                reason.clone(),
            )),
            (None, Some(a)) if !a.values.is_empty() => records.push(
                CheckRecord::evaluated(
                    CONSTANCY_ID,
                    CONSTANCY_ANCHOR,
                    a.values.len(),
                    a.std(),
                    tol,
                )
                .with_value(a.mean()),
            ),
            _ => records.push(CheckRecord::skipped(
                CONSTANCY_ID,
                CONSTANCY_ANCHOR,
                tol,
                "no samples",
            )),
        }
    }
    Ok(records)
}

/// Hunt options from the scenario, overridden by the run configuration.
pub fn hunt_options(scenario: &Scenario, config: &RunConfig) -> HuntOptions {
    config.hunt.unwrap_or_else(|| {
        let h = scenario.hunt.as_ref();
        HuntOptions {
            grid: h.map_or(3, |h| h.grid),
            period: h.map_or(1.0, |h| h.period),
            search: SearchOptions {
                budget: h.map_or(200, |h| h.budget),
                ..SearchOptions::default()
            },
        }
    })
}

fn run_hunt(scenario: &Scenario, config: &RunConfig) -> CheckRecord {
    let tol = config.tolerance(HUNT_ID, crate::geodesics::CLOSURE_TOL);
    let spacetime = &scenario.spacetime;
    if !spacetime.has_periodic() {
        return CheckRecord::skipped(HUNT_ID, HUNT_ANCHOR, tol, "no periodic coordinates");
    }
    let Some(setup) = &scenario.hunt else {
        return CheckRecord::skipped(HUNT_ID, HUNT_ANCHOR, tol, "scenario declares no hunt setup");
    };
    let origin = setup.origin.clone();
    let options = hunt_options(scenario, config);
    let table = hunt(spacetime, &origin, options, config.execution);
    let cells = table.orbits.len() + table.failed.len();
    if table.orbits.is_empty() {
        let r =
            CheckRecord::evaluated(HUNT_ID, HUNT_ANCHOR, cells, f64::INFINITY, tol).with_value(0.0);
        return if cells == 0 {
            CheckRecord {
                status: Status::Skipped,
                ..r
            }
            .with_reason("empty guess grid")
        } else {
            r.with_reason("no periodic geodesic found")
        };
    }
    let worst = table
        .orbits
        .iter()
        .map(|o| o.closure_error)
        .fold(0.0, f64::max);
    let count = |c: CausalCharacter| {
        table
            .orbits
            .iter()
            .filter(|o| o.causal_character == c)
            .count()
    };
    CheckRecord::evaluated(HUNT_ID, HUNT_ANCHOR, cells, worst, tol)
        .with_value(table.orbits.len() as f64)
        .with_reason(format!(
            "{} orbits: {} timelike, {} null, {} spacelike",
            table.orbits.len(),
            count(CausalCharacter::Timelike),
            count(CausalCharacter::Null),
            count(CausalCharacter::Spacelike)
        ))
}

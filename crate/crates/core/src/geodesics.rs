//! Geodesics of the ambient metric, of the rigged metric in the graph chart,
//! and of screen leaves, plus the periodic-orbit search on compact quotients.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rigging::{NullHypersurface, TOTALLY_GEODESIC_TOL};
use crate::spacetime::{christoffel_values, ChartedSpacetime};
use crate::transverse::{graph_embedding, pullback, InducedChart, TransverseGeometry};

/// Drift bound on `g(γ′,γ′)` and on the back-and-forth round trip.
pub const ENERGY_TOL: f64 = 1e-8;
/// Closure error below which an orbit counts as periodic.
pub const CLOSURE_TOL: f64 = 1e-8;
/// `|g(v,v)|/|v|²` below which a velocity counts as null.
pub const CAUSAL_TOL: f64 = 1e-9;
/// Largest `|F|` tolerated along a trajectory that should lie on `L`.
pub const ON_SURFACE_TOL: f64 = 1e-8;
/// Frobenius bound for an integrable screen.
pub const INTEGRABILITY_TOL: f64 = 1e-7;
/// Bound on `|C(X,X)|` for the leaf correspondence.
pub const SCREEN_FORM_TOL: f64 = 1e-8;

/// A coordinate chart carrying a metric whose geodesics can be integrated.
pub trait MetricChart {
    fn dim(&self) -> usize;
    /// `Γ^k_ij` at `x`, indexed `(k*n + i)*n + j`.
    fn christoffel(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>>;
    /// Name of a non-periodic coordinate outside its bounds.
    fn exit_coordinate(&self, x: &[f64]) -> Option<String>;
}

pub struct AmbientChart<'a>(pub &'a ChartedSpacetime);

impl MetricChart for AmbientChart<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn christoffel(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.0.christoffel(x)
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.0.metric_at(x)
    }

    fn exit_coordinate(&self, x: &[f64]) -> Option<String> {
        self.0
            .exit_coordinate(x)
            .map(|i| self.0.coordinates()[i].clone())
    }
}

/// `(L, g̃)` in the graph chart: coordinates are the ambient ones without the
/// graph coordinate.
pub struct RiggedChart<'a> {
    surface: &'a NullHypersurface,
    induced: Vec<usize>,
    bracket: [f64; 2],
}

impl<'a> RiggedChart<'a> {
    pub fn new(surface: &'a NullHypersurface) -> Self {
        let ambient = surface.ambient();
        let graph = surface.graph_coordinate();
        RiggedChart {
            surface,
            induced: (0..ambient.dim()).filter(|&i| i != graph).collect(),
            bracket: ambient.bounds()[graph],
        }
    }

    /// The point of `L` over chart coordinates `y`.
    pub fn lift_point(&self, y: &[f64]) -> Result<Vec<f64>> {
        let graph = self.surface.graph_coordinate();
        let mut p = vec![0.5 * (self.bracket[0] + self.bracket[1]); y.len() + 1];
        for (a, &i) in self.induced.iter().enumerate() {
            p[i] = y[a];
        }
        p[graph] = p[graph].clamp(self.bracket[0], self.bracket[1]);
        self.surface.solve_graph(&p, self.bracket)
    }

    pub fn chart_at(&self, y: &[f64], order: u8) -> Result<InducedChart> {
        InducedChart::on_surface(self.surface, &self.lift_point(y)?, order)
    }

    /// Ambient position and velocity of a chart state.
    pub fn lift(&self, state: &GeodesicState) -> Result<GeodesicState> {
        let chart = self.chart_at(&state.position, 1)?;
        Ok(GeodesicState {
            parameter: state.parameter,
            position: chart.base_point().to_vec(),
            velocity: chart.to_ambient(&state.velocity),
        })
    }

    /// Chart state of an ambient state on `L` (drops the graph slot).
    pub fn project(&self, state: &GeodesicState) -> GeodesicState {
        GeodesicState {
            parameter: state.parameter,
            position: self.induced.iter().map(|&i| state.position[i]).collect(),
            velocity: self.induced.iter().map(|&i| state.velocity[i]).collect(),
        }
    }
}

impl MetricChart for RiggedChart<'_> {
    fn dim(&self) -> usize {
        self.induced.len()
    }

    fn christoffel(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.chart_at(y, 2)?.christoffel()
    }

    fn metric(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.chart_at(y, 1)?.metric_matrix())
    }

    fn exit_coordinate(&self, y: &[f64]) -> Option<String> {
        let ambient = self.surface.ambient();
        self.induced.iter().enumerate().find_map(|(a, &i)| {
            let [lo, hi] = ambient.bounds()[i];
            (ambient.periods()[i].is_none() && !(lo <= y[a] && y[a] <= hi))
                .then(|| ambient.coordinates()[i].clone())
        })
    }
}

/// A screen leaf through a base point, as the coordinate slice spanned by
/// the scenario's leaf coordinates, with the induced metric `i*g`.
pub struct LeafChart<'a> {
    surface: &'a NullHypersurface,
    base: Vec<f64>,
    leaf: Vec<usize>,
}

impl<'a> LeafChart<'a> {
    pub fn new(surface: &'a NullHypersurface, base: &[f64]) -> Result<Self> {
        let leaf = surface.leaf_coordinates().ok_or(Error::Precondition {
            name: "leaf coordinates",
            detail: "the scenario declares no leaf coordinates".into(),
        })?;
        if leaf.contains(&surface.graph_coordinate()) {
            return Err(Error::scenario(
                "leaf_coordinates",
                "the graph coordinate cannot be a leaf coordinate",
            ));
        }
        Ok(LeafChart {
            surface,
            base: base.to_vec(),
            leaf: leaf.to_vec(),
        })
    }

    fn embedding(&self, y: &[f64], order: u8) -> Result<Vec<crate::jets::Jet3>> {
        let mut p = self.base.clone();
        for (a, &i) in self.leaf.iter().enumerate() {
            p[i] = y[a];
        }
        let bracket = self.surface.ambient().bounds()[self.surface.graph_coordinate()];
        let p = self.surface.solve_graph(&p, bracket)?;
        Ok(graph_embedding(self.surface, &p, &self.leaf, order)?.0)
    }

    fn metric_jets(&self, y: &[f64], order: u8) -> Result<Vec<crate::jets::Jet3>> {
        let phi = self.embedding(y, order)?;
        let ambient = self.surface.ambient();
        let g = ambient.metric_on(&phi)?;
        let tangent: Vec<Vec<_>> = (0..self.leaf.len())
            .map(|a| phi.iter().map(|c| c.derivative(a)).collect())
            .collect();
        Ok(pullback(ambient.dim(), &g, &tangent, None))
    }

    /// Leaf components of an ambient vector tangent to the leaf.
    pub fn project(&self, state: &GeodesicState) -> GeodesicState {
        GeodesicState {
            parameter: state.parameter,
            position: self.leaf.iter().map(|&i| state.position[i]).collect(),
            velocity: self.leaf.iter().map(|&i| state.velocity[i]).collect(),
        }
    }

    pub fn lift(&self, state: &GeodesicState) -> Result<GeodesicState> {
        let phi = self.embedding(&state.position, 1)?;
        let velocity = phi
            .iter()
            .map(|c| c.directional_value(&state.velocity))
            .collect();
        Ok(GeodesicState {
            parameter: state.parameter,
            position: phi.iter().map(|c| c.value()).collect(),
            velocity,
        })
    }
}

impl MetricChart for LeafChart<'_> {
    fn dim(&self) -> usize {
        self.leaf.len()
    }

    fn christoffel(&self, y: &[f64]) -> Result<Vec<f64>> {
        christoffel_values(self.leaf.len(), &self.metric_jets(y, 2)?, y)
    }

    fn metric(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let q = self.leaf.len();
        let g = self.metric_jets(y, 1)?;
        Ok(DMatrix::from_fn(q, q, |a, b| g[a * q + b].value()))
    }

    fn exit_coordinate(&self, y: &[f64]) -> Option<String> {
        let ambient = self.surface.ambient();
        self.leaf.iter().enumerate().find_map(|(a, &i)| {
            let [lo, hi] = ambient.bounds()[i];
            (ambient.periods()[i].is_none() && !(lo <= y[a] && y[a] <= hi))
                .then(|| ambient.coordinates()[i].clone())
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicState {
    pub parameter: f64,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl GeodesicState {
    pub fn new(position: &[f64], velocity: &[f64]) -> Self {
        GeodesicState {
            parameter: 0.0,
            position: position.to_vec(),
            velocity: velocity.to_vec(),
        }
    }
}

/// Step-size control for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Control {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Control {
    fn default() -> Self {
        Control {
            rtol: 1e-12,
            atol: 1e-12,
            max_steps: 200_000,
        }
    }
}

impl Control {
    pub fn halved(self) -> Self {
        Control {
            rtol: 0.5 * self.rtol,
            atol: 0.5 * self.atol,
            ..self
        }
    }
}

fn acceleration(chart: &dyn MetricChart, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let n = v.len();
    let gamma = chart.christoffel(x)?;
    Ok((0..n)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += gamma[(k * n + i) * n + j] * v[i] * v[j];
                }
            }
            -s
        })
        .collect())
}

fn rhs(chart: &dyn MetricChart, y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len() / 2;
    let mut out = y[n..].to_vec();
    out.extend(acceleration(chart, &y[..n], &y[n..])?);
    Ok(out)
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `ẍ^k + Γ^k_ij ẋ^i ẋ^j = 0` with an adaptive Dormand–Prince
/// 5(4) pair, landing exactly on each requested parameter value. `times`
/// must run monotonically away from `start.parameter` in either direction.
/// Periodic coordinates are not reduced, so the trajectory stays continuous.
pub fn integrate(
    chart: &dyn MetricChart,
    start: &GeodesicState,
    times: &[f64],
    control: Control,
) -> Result<Vec<GeodesicState>> {
    let n = chart.dim();
    if let Some(c) = chart.exit_coordinate(&start.position) {
        return Err(Error::ChartExit {
            t: start.parameter,
            coordinate: c,
        });
    }
    let mut t = start.parameter;
    let mut y: Vec<f64> = start
        .position
        .iter()
        .chain(&start.velocity)
        .copied()
        .collect();
    let mut k1 = rhs(chart, &y)?;
    let span = times.last().map_or(0.0, |&e| e - t);
    let dir = if span < 0.0 { -1.0 } else { 1.0 };
    let mut h = dir * (0.01 * span.abs()).clamp(1e-6, 0.1);
    let mut out = Vec::with_capacity(times.len());
    let mut steps = 0usize;
    for &target in times {
        if (target - t) * dir < 0.0 {
            return Err(Error::scenario("times", "sample times must be monotone"));
        }
        while (target - t) * dir > 0.0 {
            steps += 1;
            if steps > control.max_steps || h.abs() < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::StepUnderflow { t });
            }
            let remaining = target - t;
            let last = h.abs() >= remaining.abs();
            let step = if last { remaining } else { h };
            let mut k: Vec<Vec<f64>> = vec![k1.clone()];
            let mut trial = vec![0.0; 2 * n];
            let mut failed = false;
            for s in 1..7 {
                for i in 0..2 * n {
                    trial[i] = y[i] + step * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
                }
                match rhs(chart, &trial) {
                    Ok(f) => k.push(f),
                    Err(e) => {
                        if chart.exit_coordinate(&trial[..n]).is_some() || h.abs() > 1e-6 {
                            failed = true;
                            break;
                        }
                        return Err(e);
                    }
                }
            }
            if failed {
                h *= 0.25;
                continue;
            }
            // The seventh stage evaluates at the 5th-order solution.
            let y_new = trial.clone();
            let mut err = 0.0;
            for i in 0..2 * n {
                let e: f64 = step * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
                let sc = control.atol + control.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / (2 * n) as f64).sqrt();
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                // Shrink steps that leave the chart until the exit is located.
                if let Some(c) = chart.exit_coordinate(&y_new[..n]) {
                    if step.abs() > 1e-9 * (1.0 + t.abs()) {
                        h = 0.5 * step;
                        continue;
                    }
                    return Err(Error::ChartExit {
                        t: t + step,
                        coordinate: c,
                    });
                }
                t = if last { target } else { t + step };
                y = y_new;
                k1 = k.pop().unwrap();
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                h = step * factor;
            }
        }
        out.push(GeodesicState {
            parameter: t,
            position: y[..n].to_vec(),
            velocity: y[n..].to_vec(),
        });
    }
    Ok(out)
}

/// `n` evenly spaced parameter values ending at `t` (excluding 0).
pub fn sample_times(t: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| t * i as f64 / n as f64).collect()
}

pub fn energy(chart: &dyn MetricChart, state: &GeodesicState) -> Result<f64> {
    let g = chart.metric(&state.position)?;
    let v = DVector::from_column_slice(&state.velocity);
    Ok(v.dot(&(&g * &v)))
}

/// `max |g(γ′,γ′)(t) − g(γ′,γ′)(0)|` over the samples.
pub fn energy_drift(
    chart: &dyn MetricChart,
    start: &GeodesicState,
    trajectory: &[GeodesicState],
) -> Result<f64> {
    let e0 = energy(chart, start)?;
    let mut worst = 0.0f64;
    for s in trajectory {
        worst = worst.max((energy(chart, s)? - e0).abs());
    }
    Ok(worst)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Integrate to `t`, then back by `−t`; returns the position plus velocity
/// mismatch with the start.
pub fn reversibility_residual(
    chart: &dyn MetricChart,
    start: &GeodesicState,
    t: f64,
    control: Control,
) -> Result<f64> {
    let forward = integrate(chart, start, &[start.parameter + t], control)?;
    let back = integrate(chart, &forward[0], &[start.parameter], control)?;
    Ok(distance(&back[0].position, &start.position) + distance(&back[0].velocity, &start.velocity))
}

/// Which metric a trajectory was integrated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Ambient,
    Rigged,
}

/// Geodesic defect of a trajectory in the other metric, with the largest
/// `|C̄(γ′,γ′)|` sampled along it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossResidual {
    pub defect: f64,
    pub cbar: f64,
}

/// `max |γ̈ + Γ_B(γ′,γ′)|` of a trajectory on `L` computed in metric `kind`,
/// measured in the other of the ambient and rigged metrics. Ambient
/// trajectories are given in ambient coordinates, rigged ones in the graph
/// chart.
pub fn cross_metric_residual(
    surface: &NullHypersurface,
    kind: MetricKind,
    trajectory: &[GeodesicState],
) -> Result<CrossResidual> {
    let ambient_chart = AmbientChart(surface.ambient());
    let rigged = RiggedChart::new(surface);
    let mut defect = 0.0f64;
    let mut cbar = 0.0f64;
    for s in trajectory {
        let (amb, chart_state) = match kind {
            MetricKind::Ambient => (s.clone(), rigged.project(s)),
            MetricKind::Rigged => (rigged.lift(s)?, s.clone()),
        };
        let f = surface.level_value(&amb.position)?.abs();
        if !(f <= ON_SURFACE_TOL) {
            return Err(Error::LeftHypersurface(f));
        }
        let chart = rigged.chart_at(&chart_state.position, 2)?;
        let geo_rigged = crate::spacetime::christoffel_values(
            chart.dim(),
            chart.metric_jets(),
            &chart.induced_coordinates(),
        )?;
        let m = chart.dim();
        let rigged_acc = |v: &[f64]| -> Vec<f64> {
            (0..m)
                .map(|k| {
                    let mut a = 0.0;
                    for i in 0..m {
                        for j in 0..m {
                            a += geo_rigged[(k * m + i) * m + j] * v[i] * v[j];
                        }
                    }
                    -a
                })
                .collect()
        };
        let d = match kind {
            MetricKind::Rigged => {
                let ydd = rigged_acc(&chart_state.velocity);
                let mut a = chart.to_ambient(&ydd);
                for (ai, bi) in a
                    .iter_mut()
                    .zip(chart.second_derivative(&chart_state.velocity))
                {
                    *ai += bi;
                }
                let geodesic = acceleration(&ambient_chart, &amb.position, &amb.velocity)?;
                distance(&a, &geodesic)
            }
            MetricKind::Ambient => {
                let a = acceleration(&ambient_chart, &amb.position, &amb.velocity)?;
                let ydd = chart.to_induced(&a);
                distance(&ydd, &rigged_acc(&chart_state.velocity))
            }
        };
        defect = defect.max(d);
        let frame = surface.build_frame(&amb.position)?;
        cbar = cbar.max(frame.cbar(&amb.velocity, &amb.velocity)?.abs());
    }
    Ok(CrossResidual { defect, cbar })
}

/// Pairwise discrepancies (max over samples of position plus velocity
/// distance in ambient coordinates) between the rigged, ambient and leaf
/// geodesics from the same initial data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prop3Residuals {
    pub rigged_ambient: f64,
    pub leaf_ambient: f64,
    pub leaf_rigged: f64,
}

impl Prop3Residuals {
    pub fn max(&self) -> f64 {
        self.rigged_ambient
            .max(self.leaf_ambient)
            .max(self.leaf_rigged)
    }
}

/// Checks the hypotheses of the leaf correspondence at `point`: integrable
/// screen, `L` totally geodesic, `C(X,X) = 0` on the screen and along
/// `velocity`, and `velocity` tangent to the coordinate leaf.
pub fn prop3_preconditions(
    surface: &NullHypersurface,
    point: &[f64],
    velocity: &[f64],
) -> Result<()> {
    LeafChart::new(surface, point)?;
    let geometry = TransverseGeometry::at(surface, point)?;
    let frame = geometry.frame();
    let frob = geometry.screen_integrability_residual();
    if !(frob < INTEGRABILITY_TOL) {
        return Err(Error::Precondition {
            name: "integrable screen",
            detail: format!("max |g̃([X,Y], ξ)| = {frob:e}"),
        });
    }
    let b = frame.second_fundamental_matrix().amax();
    if !(b < TOTALLY_GEODESIC_TOL) {
        return Err(Error::Precondition {
            name: "totally geodesic",
            detail: format!("max |B| = {b:e}"),
        });
    }
    frame.check_screen(velocity)?;
    let mut probes = frame.screen();
    probes.push(velocity.to_vec());
    for x in &probes {
        let c = frame.screen_fundamental(x, x)?.abs();
        if !(c < SCREEN_FORM_TOL) {
            return Err(Error::Precondition {
                name: "C(X,X) = 0",
                detail: format!("|C(X,X)| = {c:e}"),
            });
        }
    }
    let leaf = surface.leaf_coordinates().unwrap_or(&[]);
    let graph = surface.graph_coordinate();
    let off = (0..point.len())
        .filter(|i| *i != graph && !leaf.contains(i))
        .map(|i| velocity[i].abs())
        .fold(0.0, f64::max);
    if off > 1e-9 {
        return Err(Error::Precondition {
            name: "leaf-tangent velocity",
            detail: format!("off-leaf component {off:e}"),
        });
    }
    Ok(())
}

pub fn prop3_equivalence_check(
    surface: &NullHypersurface,
    point: &[f64],
    velocity: &[f64],
    t: f64,
    control: Control,
) -> Result<Prop3Residuals> {
    prop3_preconditions(surface, point, velocity)?;
    let times = sample_times(t, 8);
    let start = GeodesicState::new(point, velocity);
    let ambient = AmbientChart(surface.ambient());
    let amb = integrate(&ambient, &start, &times, control)?;
    let rigged = RiggedChart::new(surface);
    let rig = integrate(&rigged, &rigged.project(&start), &times, control)?
        .iter()
        .map(|s| rigged.lift(s))
        .collect::<Result<Vec<_>>>()?;
    let leaf = LeafChart::new(surface, point)?;
    let lf = integrate(&leaf, &leaf.project(&start), &times, control)?
        .iter()
        .map(|s| leaf.lift(s))
        .collect::<Result<Vec<_>>>()?;
    let m = surface.ambient();
    let gap = |a: &[GeodesicState], b: &[GeodesicState]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                let dx = m.lattice_difference(&x.position, &y.position);
                dx.iter().map(|d| d * d).sum::<f64>().sqrt() + distance(&x.velocity, &y.velocity)
            })
            .fold(0.0, f64::max)
    };
    Ok(Prop3Residuals {
        rigged_ambient: gap(&rig, &amb),
        leaf_ambient: gap(&lf, &amb),
        leaf_rigged: gap(&lf, &rig),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalCharacter {
    Timelike,
    Null,
    Spacelike,
}

impl std::fmt::Display for CausalCharacter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CausalCharacter::Timelike => "timelike",
            CausalCharacter::Null => "null",
            CausalCharacter::Spacelike => "spacelike",
        })
    }
}

/// Causal character from `g(v,v)/|v|²` with threshold [`CAUSAL_TOL`].
pub fn causal_character(g: &DMatrix<f64>, v: &[f64]) -> CausalCharacter {
    let vv = DVector::from_column_slice(v);
    let ratio = vv.dot(&(g * &vv)) / vv.norm_squared();
    if ratio.abs() < CAUSAL_TOL {
        CausalCharacter::Null
    } else if ratio < 0.0 {
        CausalCharacter::Timelike
    } else {
        CausalCharacter::Spacelike
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Simplex iterations before the Newton polish.
    pub budget: usize,
    pub newton_iterations: usize,
    pub target: Option<CausalCharacter>,
    pub control: Control,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 200,
            newton_iterations: 20,
            target: None,
            control: Control::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbitResult {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub period: f64,
    pub closure_error: f64,
    pub causal_character: CausalCharacter,
    pub converged: bool,
    /// Objective after the simplex stage and after each Newton step.
    pub trace: Vec<f64>,
}

/// Shooting map of the periodic search over `z = (x0, v, T)`.
struct Shooting<'a> {
    spacetime: &'a ChartedSpacetime,
    control: Control,
    target: Option<CausalCharacter>,
    speed2: f64,
    t_min: f64,
}

impl Shooting<'_> {
    fn n(&self) -> usize {
        self.spacetime.dim()
    }

    /// Lattice-reduced position and velocity mismatch after time `T`.
    fn closure(&self, x0: &[f64], v: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let end = integrate(
            &AmbientChart(self.spacetime),
            &GeodesicState::new(x0, v),
            &[t],
            self.control,
        )?;
        let dx = self.spacetime.lattice_difference(x0, &end[0].position);
        let dv = end[0].velocity.iter().zip(v).map(|(a, b)| a - b).collect();
        Ok((dx, dv))
    }

    fn residual(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n();
        let (x0, v, t) = (&z[..n], &z[n..2 * n], z[2 * n]);
        let mut rows = match self.closure(x0, v, t) {
            Ok((dx, dv)) => [dx, dv].concat(),
            Err(_) => vec![1e3; 2 * n],
        };
        let g = self
            .spacetime
            .metric_at(x0)
            .unwrap_or_else(|_| DMatrix::identity(n, n));
        let vv = DVector::from_column_slice(v);
        let gvv = vv.dot(&(&g * &vv));
        let e2 = vv.norm_squared();
        match self.target {
            None => rows.push(e2 - self.speed2),
            Some(CausalCharacter::Null) => {
                rows.push(gvv);
                rows.push(e2 - self.speed2);
            }
            Some(CausalCharacter::Spacelike) => rows.push(gvv - 1.0),
            Some(CausalCharacter::Timelike) => rows.push(gvv + 1.0),
        }
        rows
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let t = z[2 * self.n()];
        let penalty = if t < self.t_min {
            1e6 * (self.t_min - t).powi(2)
        } else {
            0.0
        };
        self.residual(z).iter().map(|r| r * r).sum::<f64>() + penalty
    }
}

fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    iterations: usize,
) -> (Vec<f64>, f64) {
    let d = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..d {
        let mut p = start.to_vec();
        p[i] += step * (1.0 + p[i].abs());
        let v = f(&p);
        simplex.push((p, v));
    }
    let by_value = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| a.1.total_cmp(&b.1);
    for _ in 0..iterations {
        simplex.sort_by(by_value);
        if simplex[d].1 - simplex[0].1 <= 1e-30 && simplex[0].1 < 1e-28 {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|k| simplex[..d].iter().map(|p| p.0[k]).sum::<f64>() / d as f64)
            .collect();
        let along = |s: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[d].0)
                .map(|(c, w)| c + s * (w - c))
                .collect()
        };
        let reflected = along(-1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            simplex[d] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[d].1 {
                along(-0.5)
            } else {
                along(0.5)
            };
            let fc = f(&contracted);
            if fc < simplex[d].1.min(fr) {
                simplex[d] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    p.0 = best
                        .iter()
                        .zip(&p.0)
                        .map(|(b, x)| b + 0.5 * (x - b))
                        .collect();
                    p.1 = f(&p.0);
                }
            }
        }
    }
    simplex.sort_by(by_value);
    simplex.swap_remove(0)
}

/// Searches for `γ` with `γ(T) ≡ γ(0)` modulo the period lattice and
/// `γ′(T) = γ′(0)`, starting from `guess` and period `t0`. Non-null results
/// are reported at unit speed.
pub fn find_periodic_geodesic(
    spacetime: &ChartedSpacetime,
    guess: &GeodesicState,
    t0: f64,
    options: SearchOptions,
) -> Result<PeriodicOrbitResult> {
    if !spacetime.has_periodic() {
        return Err(Error::Precondition {
            name: "periodic coordinate",
            detail: "the chart has no periodic coordinate".into(),
        });
    }
    if !(t0 > 0.0) {
        return Err(Error::Precondition {
            name: "positive period guess",
            detail: format!("T0 = {t0}"),
        });
    }
    let n = spacetime.dim();
    let shooting = Shooting {
        spacetime,
        control: options.control,
        target: options.target,
        speed2: guess.velocity.iter().map(|v| v * v).sum(),
        t_min: 0.25 * t0,
    };
    let mut z: Vec<f64> = guess
        .position
        .iter()
        .chain(&guess.velocity)
        .copied()
        .collect();
    z.push(t0);
    let objective = |z: &[f64]| shooting.objective(z);
    let mut trace = Vec::new();
    if shooting.objective(&z) > 1e-28 {
        let (best, value) = nelder_mead(&objective, &z, 0.05, options.budget);
        if value <= shooting.objective(&z) {
            z = best;
        }
    }
    trace.push(shooting.objective(&z));
    for _ in 0..options.newton_iterations {
        let r = DVector::from_vec(shooting.residual(&z));
        if r.norm() < 1e-14 {
            break;
        }
        let h = 1e-6;
        let mut jac = DMatrix::zeros(r.len(), z.len());
        for j in 0..z.len() {
            let mut zp = z.clone();
            zp[j] += h;
            let rp = DVector::from_vec(shooting.residual(&zp));
            jac.set_column(j, &((rp - &r) / h));
        }
        let svd = jac.svd(true, true);
        let tol = 1e-10 * svd.singular_values.max();
        let Ok(step) = svd.solve(&(-&r), tol) else {
            break;
        };
        let mut scale = 1.0;
        let current = shooting.objective(&z);
        let mut improved = false;
        for _ in 0..12 {
            let candidate: Vec<f64> = z
                .iter()
                .zip(step.iter())
                .map(|(a, s)| a + scale * s)
                .collect();
            if candidate[2 * n] >= shooting.t_min && shooting.objective(&candidate) < current {
                z = candidate;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        trace.push(shooting.objective(&z));
        if !improved {
            break;
        }
    }
    let x0 = spacetime.reduce(&z[..n]);
    let mut v = z[n..2 * n].to_vec();
    let mut period = z[2 * n];
    let g = spacetime.metric_at(&x0)?;
    let character = causal_character(&g, &v);
    if character != CausalCharacter::Null {
        let vv = DVector::from_column_slice(&v);
        let s = vv.dot(&(&g * &vv)).abs().sqrt();
        v.iter_mut().for_each(|c| *c /= s);
        period *= s;
    }
    let closure_error = match shooting.closure(&x0, &v, period) {
        Ok((dx, dv)) => {
            dx.iter().map(|d| d * d).sum::<f64>().sqrt()
                + dv.iter().map(|d| d * d).sum::<f64>().sqrt()
        }
        Err(_) => f64::INFINITY,
    };
    Ok(PeriodicOrbitResult {
        position: x0,
        velocity: v,
        period,
        closure_error,
        causal_character: character,
        converged: closure_error < CLOSURE_TOL,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuntOptions {
    /// Points per axis of the velocity grid on `[−1, 1]^n`.
    pub grid: usize,
    /// Period scale: the guess for cell `v` is `T0 = period · |v|`.
    pub period: f64,
    pub search: SearchOptions,
}

impl Default for HuntOptions {
    fn default() -> Self {
        HuntOptions {
            grid: 3,
            period: 1.0,
            search: SearchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailedCell {
    pub cell: Vec<f64>,
    pub closure_error: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HuntTable {
    pub orbits: Vec<PeriodicOrbitResult>,
    pub failed: Vec<FailedCell>,
}

/// Velocity grid `linspace(−1, 1, grid)^n` without the zero cell.
pub fn velocity_grid(n: usize, grid: usize) -> Vec<Vec<f64>> {
    if grid < 2 {
        return Vec::new();
    }
    let axis: Vec<f64> = (0..grid)
        .map(|k| -1.0 + 2.0 * k as f64 / (grid - 1) as f64)
        .collect();
    let mut cells = vec![Vec::new()];
    for _ in 0..n {
        cells = cells
            .into_iter()
            .flat_map(|c| {
                axis.iter().map(move |&a| {
                    let mut c = c.clone();
                    c.push(a);
                    c
                })
            })
            .collect();
    }
    cells.retain(|c| c.iter().any(|&v| v != 0.0));
    cells
}

/// Runs the periodic search from `origin` over the velocity grid, merges
/// orbits whose states agree within `1e-6` after lattice reduction, and
/// sorts by closure error, then by initial data.
pub fn hunt(
    spacetime: &ChartedSpacetime,
    origin: &[f64],
    options: HuntOptions,
    exec: Execution,
) -> HuntTable {
    let cells = velocity_grid(spacetime.dim(), options.grid);
    let results = exec.map_indexed(cells.len(), |i| {
        let cell = &cells[i];
        let speed = cell.iter().map(|v| v * v).sum::<f64>().sqrt();
        let v: Vec<f64> = cell.iter().map(|c| c / speed).collect();
        find_periodic_geodesic(
            spacetime,
            &GeodesicState::new(origin, &v),
            options.period * speed,
            options.search,
        )
    });
    let mut orbits = Vec::new();
    let mut failed = Vec::new();
    for (cell, r) in cells.into_iter().zip(results) {
        match r {
            Ok(o) if o.converged => orbits.push(o),
            Ok(o) => failed.push(FailedCell {
                cell,
                closure_error: o.closure_error,
                reason: "closure error above tolerance".into(),
            }),
            Err(e) => failed.push(FailedCell {
                cell,
                closure_error: f64::INFINITY,
                reason: e.to_string(),
            }),
        }
    }
    let lex = |a: &PeriodicOrbitResult, b: &PeriodicOrbitResult| {
        a.closure_error
            .total_cmp(&b.closure_error)
            .then_with(|| {
                a.position
                    .iter()
                    .chain(&a.velocity)
                    .zip(b.position.iter().chain(&b.velocity))
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then_with(|| a.period.total_cmp(&b.period))
    };
    orbits.sort_by(lex);
    let mut kept: Vec<PeriodicOrbitResult> = Vec::new();
    for o in orbits {
        let duplicate = kept.iter().any(|k| {
            let dx = spacetime.lattice_difference(&k.position, &o.position);
            dx.iter().map(|d| d * d).sum::<f64>().sqrt()
                + distance(&k.velocity, &o.velocity)
                + (k.period - o.period).abs()
                < 1e-6
        });
        if !duplicate {
            kept.push(o);
        }
    }
    HuntTable {
        orbits: kept,
        failed,
    }
}

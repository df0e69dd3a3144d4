//! Lorentzian manifolds given by a single chart with expression-valued
//! metric components.

mod levi_civita;

use nalgebra::{DMatrix, SymmetricEigen};

pub use levi_civita::{bracket, christoffel_values, invert_jet_matrix, values, LeviCivita};

use crate::error::{Error, Result};
use crate::exprlang::{parse, BoundExpr, FunctionRegistry};
use crate::jets::Jet3;

/// Killing test threshold for hypothesis-gated operations.
pub const KILLING_TOL: f64 = 1e-8;
/// `|g(u,u)|` below which a vector counts as null.
pub const NULL_TOL: f64 = 1e-10;

pub(crate) fn bind_source(source: &str, coordinates: &[String], path: &str) -> Result<BoundExpr> {
    let expr = parse(source).map_err(|e| Error::from_parse(path, source, &e))?;
    BoundExpr::bind(&expr, coordinates, &FunctionRegistry::default())
        .map_err(|e| Error::from_bind(path, &e))
}

/// Vector field with expression components in chart coordinates.
#[derive(Debug, Clone)]
pub struct VectorField {
    components: Vec<BoundExpr>,
}

impl VectorField {
    pub fn parse(sources: &[impl AsRef<str>], coordinates: &[String], path: &str) -> Result<Self> {
        if sources.len() != coordinates.len() {
            return Err(Error::scenario(
                path,
                format!(
                    "expected {} components, found {}",
                    coordinates.len(),
                    sources.len()
                ),
            ));
        }
        let components = sources
            .iter()
            .enumerate()
            .map(|(i, s)| bind_source(s.as_ref(), coordinates, &format!("{path}[{i}]")))
            .collect::<Result<_>>()?;
        Ok(VectorField { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| Ok(c.eval(point)?)).collect()
    }

    /// Components evaluated on jet inputs (seeds or a composite map).
    pub fn jets(&self, inputs: &[Jet3]) -> Result<Vec<Jet3>> {
        self.components
            .iter()
            .map(|c| Ok(c.eval_jet(inputs)?))
            .collect()
    }

    pub fn sources(&self) -> Vec<String> {
        self.components
            .iter()
            .map(|c| c.source().to_string())
            .collect()
    }
}

/// `(M, g)` on one coordinate box, with optional periodic identifications.
#[derive(Debug, Clone)]
pub struct ChartedSpacetime {
    coordinates: Vec<String>,
    bounds: Vec<[f64; 2]>,
    periods: Vec<Option<f64>>,
    /// Row-major, both triangles filled.
    metric: Vec<BoundExpr>,
}

impl ChartedSpacetime {
    /// `metric_upper` lists the upper triangle row by row:
    /// `g_00, g_01, …, g_0(n-1), g_11, …`. Bounds for periodic coordinates
    /// are replaced by `[0, period]`.
    pub fn new(
        coordinates: Vec<String>,
        bounds: Vec<[f64; 2]>,
        periods: Vec<Option<f64>>,
        metric_upper: &[impl AsRef<str>],
    ) -> Result<Self> {
        let n = coordinates.len();
        if !(2..=6).contains(&n) {
            return Err(Error::scenario(
                "dimension",
                format!("unsupported dimension {n}"),
            ));
        }
        if bounds.len() != n || periods.len() != n {
            return Err(Error::scenario(
                "bounds",
                "one entry per coordinate is required",
            ));
        }
        for (i, name) in coordinates.iter().enumerate() {
            if coordinates[..i].contains(name) {
                return Err(Error::scenario(
                    "coordinates",
                    format!("duplicate coordinate `{name}`"),
                ));
            }
        }
        let mut bounds = bounds;
        for (i, p) in periods.iter().enumerate() {
            match p {
                Some(p) if !(*p > 0.0 && p.is_finite()) => {
                    return Err(Error::scenario(
                        format!("periodic.{}", coordinates[i]),
                        "period must be positive",
                    ))
                }
                Some(p) => bounds[i] = [0.0, *p],
                None => {
                    let [lo, hi] = bounds[i];
                    if !(lo < hi) {
                        return Err(Error::scenario(
                            format!("bounds.{}", coordinates[i]),
                            "lower bound must be below upper bound",
                        ));
                    }
                }
            }
        }
        let expected = n * (n + 1) / 2;
        if metric_upper.len() != expected {
            return Err(Error::scenario(
                "metric",
                format!(
                    "expected {expected} upper-triangle entries, found {}",
                    metric_upper.len()
                ),
            ));
        }
        let mut upper = Vec::with_capacity(expected);
        for (k, s) in metric_upper.iter().enumerate() {
            upper.push(bind_source(
                s.as_ref(),
                &coordinates,
                &format!("metric[{k}]"),
            )?);
        }
        let mut metric = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                let k = a * n - a * (a + 1) / 2 + b;
                metric.push(upper[k].clone());
            }
        }
        Ok(ChartedSpacetime {
            coordinates,
            bounds,
            periods,
            metric,
        })
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coordinates
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn periods(&self) -> &[Option<f64>] {
        &self.periods
    }

    pub fn has_periodic(&self) -> bool {
        self.periods.iter().any(Option::is_some)
    }

    pub fn coordinate_index(&self, name: &str) -> Option<usize> {
        self.coordinates.iter().position(|c| c == name)
    }

    /// Canonical representative: periodic coordinates into `[0, period)`.
    pub fn reduce(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .zip(&self.periods)
            .map(|(&x, p)| match p {
                Some(p) => x.rem_euclid(*p),
                None => x,
            })
            .collect()
    }

    /// Lattice-reduced displacement `b − a` (periodic components taken in
    /// `[−period/2, period/2]`).
    pub fn lattice_difference(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(b)
            .zip(&self.periods)
            .map(|((&x, &y), p)| {
                let d = y - x;
                match p {
                    Some(p) => d - p * (d / p).round(),
                    None => d,
                }
            })
            .collect()
    }

    /// Index of the first non-periodic coordinate outside its bounds.
    pub fn exit_coordinate(&self, point: &[f64]) -> Option<usize> {
        (0..self.dim()).find(|&i| {
            self.periods[i].is_none()
                && !(self.bounds[i][0] <= point[i] && point[i] <= self.bounds[i][1])
        })
    }

    pub fn check_in_chart(&self, point: &[f64]) -> Result<()> {
        match self.exit_coordinate(point) {
            Some(i) => Err(Error::OutOfChart {
                coordinate: self.coordinates[i].clone(),
                value: point[i],
            }),
            None => Ok(()),
        }
    }

    pub fn metric_at(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        let p = self.reduce(point);
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.metric[i * n + j].eval(&p)?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }

    pub fn inner(&self, point: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        let g = self.metric_at(point)?;
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += g[(i, j)] * u[i] * v[j];
            }
        }
        Ok(s)
    }

    /// Metric components on arbitrary jet inputs, one jet per coordinate.
    /// Periodic inputs are shifted to their canonical representative.
    pub fn metric_on(&self, inputs: &[Jet3]) -> Result<Vec<Jet3>> {
        let n = self.dim();
        let shifted = self.reduce_inputs(inputs);
        let mut out: Vec<Option<Jet3>> = vec![None; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.metric[i * n + j].eval_jet(&shifted)?;
                out[j * n + i] = Some(v.clone());
                out[i * n + j] = Some(v);
            }
        }
        Ok(out.into_iter().map(Option::unwrap).collect())
    }

    pub(crate) fn reduce_inputs(&self, inputs: &[Jet3]) -> Vec<Jet3> {
        inputs
            .iter()
            .zip(&self.periods)
            .map(|(j, p)| match p {
                Some(p) => {
                    let v = j.value();
                    j.add_scalar(v.rem_euclid(*p) - v)
                }
                None => j.clone(),
            })
            .collect()
    }

    /// Coordinate seeds `x_i` at `point` (periodic values reduced).
    pub fn seeds(&self, point: &[f64], order: u8) -> Vec<Jet3> {
        let p = self.reduce(point);
        let n = self.dim();
        (0..n).map(|i| Jet3::variable(n, order, i, p[i])).collect()
    }

    pub fn metric_jets(&self, point: &[f64], order: u8) -> Result<Vec<Jet3>> {
        self.metric_on(&self.seeds(point, order))
    }

    /// Connection and curvature at `point` (order-3 metric jets).
    pub fn geometry(&self, point: &[f64]) -> Result<LeviCivita> {
        LeviCivita::from_metric(self.dim(), self.metric_jets(point, 3)?, point)
    }

    /// `Γ^k_ij` at `point`, index `(k*n + i)*n + j`.
    pub fn christoffel(&self, point: &[f64]) -> Result<Vec<f64>> {
        christoffel_values(self.dim(), &self.metric_jets(point, 1)?, point)
    }

    pub fn riemann(&self, point: &[f64]) -> Result<Vec<f64>> {
        Ok(self.geometry(point)?.riemann().to_vec())
    }

    pub fn ricci(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.geometry(point)?.ricci_matrix())
    }

    pub fn sectional_curvature(&self, point: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        self.geometry(point)?.sectional(u, v)
    }

    /// `g(R(x,ξ)ξ, x) / g(x,x)` for null `ξ` and spacelike `x`.
    pub fn null_sectional_curvature(&self, point: &[f64], xi: &[f64], x: &[f64]) -> Result<f64> {
        let geo = self.geometry(point)?;
        null_sectional(&geo, xi, x)
    }

    /// Components of `L_Z g`.
    pub fn killing_residual(&self, point: &[f64], z: &VectorField) -> Result<DMatrix<f64>> {
        let seeds = self.seeds(point, 1);
        let g = self.metric_on(&seeds)?;
        let zj = z.jets(&seeds)?;
        Ok(lie_derivative_of_metric(self.dim(), &g, &zj))
    }

    /// Components of `dα` with `α = g(Z, ·)`: `(dα)_ij = ∂_i α_j − ∂_j α_i`.
    pub fn closedness_residual(&self, point: &[f64], z: &VectorField) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let seeds = self.seeds(point, 1);
        let g = self.metric_on(&seeds)?;
        let zj = z.jets(&seeds)?;
        let alpha: Vec<Jet3> = (0..n)
            .map(|j| {
                let mut s = &g[j] * &zj[0];
                for i in 1..n {
                    s += &(&g[i * n + j] * &zj[i]);
                }
                s
            })
            .collect();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            alpha[j].partial(&[i]) - alpha[i].partial(&[j])
        }))
    }

    /// `Hess f(x,y) + g(R(x,ζ)ζ, y) − g(∇_x ζ, ∇_y ζ)` with `f = ½ g(ζ,ζ)`.
    /// The identity behind it needs `ζ` Killing, which is checked first.
    pub fn hessian_identity_residual(
        &self,
        point: &[f64],
        zeta: &VectorField,
        x: &[f64],
        y: &[f64],
    ) -> Result<f64> {
        let k = max_abs(&self.killing_residual(point, zeta)?);
        if k >= KILLING_TOL {
            return Err(Error::Precondition {
                name: "killing",
                detail: format!("max |L_Z g| = {k:e}"),
            });
        }
        self.hessian_identity_residual_unchecked(point, zeta, x, y)
    }

    /// Same as [`Self::hessian_identity_residual`] without the Killing gate.
    pub fn hessian_identity_residual_unchecked(
        &self,
        point: &[f64],
        zeta: &VectorField,
        x: &[f64],
        y: &[f64],
    ) -> Result<f64> {
        let n = self.dim();
        let seeds = self.seeds(point, 3);
        let geo = LeviCivita::from_metric(n, self.metric_on(&seeds)?, point)?;
        let z = zeta.jets(&seeds)?;
        let f = geo.inner_jets(&z, &z).scale(0.5);
        let mut hess = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut h = f.partial(&[i, j]);
                for k in 0..n {
                    h -= geo.gamma(k, i, j).value() * f.partial(&[k]);
                }
                hess += h * x[i] * y[j];
            }
        }
        let zv = values(&z);
        let curv = geo.curvature_form(x, &zv, &zv, y);
        let dx = values(&geo.covariant_derivative(x, &z));
        let dy = values(&geo.covariant_derivative(y, &z));
        Ok(hess + curv - geo.inner(&dx, &dy))
    }

    /// `Ric(u,u)` for null `u`.
    pub fn ncc_residual(&self, point: &[f64], u: &[f64]) -> Result<f64> {
        let geo = self.geometry(point)?;
        let norm = geo.inner(u, u);
        if norm.abs() >= NULL_TOL {
            return Err(Error::NotNull(norm));
        }
        Ok(geo.ricci(u, u))
    }

    /// Signature and periodicity checks on an interior grid with
    /// `per_axis` points per coordinate.
    pub fn validate(&self, per_axis: usize) -> Result<()> {
        let n = self.dim();
        let total = per_axis.pow(n as u32);
        let mut point = vec![0.0; n];
        for idx in 0..total {
            let mut rem = idx;
            for (i, x) in point.iter_mut().enumerate() {
                let k = rem % per_axis;
                rem /= per_axis;
                let [lo, hi] = self.bounds[i];
                *x = lo + (k as f64 + 0.5) / per_axis as f64 * (hi - lo);
            }
            let g = self
                .metric_at(&point)
                .map_err(|e| Error::scenario("metric", format!("at {point:?}: {e}")))?;
            check_signature(&g)
                .map_err(|m| Error::scenario("metric", format!("at {point:?}: {m}")))?;
            if idx % 7 == 0 {
                self.check_periodicity(&point)?;
            }
        }
        Ok(())
    }

    fn check_periodicity(&self, point: &[f64]) -> Result<()> {
        let n = self.dim();
        let eval_raw = |p: &[f64]| -> Result<Vec<f64>> {
            self.metric.iter().map(|e| Ok(e.eval(p)?)).collect()
        };
        let base = eval_raw(point)?;
        for i in 0..n {
            if let Some(period) = self.periods[i] {
                let mut q = point.to_vec();
                q[i] += period;
                let shifted = eval_raw(&q)?;
                let diff = base
                    .iter()
                    .zip(&shifted)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if diff > 1e-9 {
                    return Err(Error::scenario(
                        format!("periodic.{}", self.coordinates[i]),
                        format!(
                            "metric is not invariant under the period shift (difference {diff:e})"
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn check_signature(g: &DMatrix<f64>) -> std::result::Result<(), String> {
    let n = g.nrows();
    for i in 0..n {
        for j in 0..i {
            if g[(i, j)] != g[(j, i)] {
                return Err("metric is not symmetric".into());
            }
        }
    }
    let eig = SymmetricEigen::new(g.clone());
    let scale = eig.eigenvalues.amax();
    if !scale.is_finite() {
        return Err("metric has non-finite entries".into());
    }
    if eig.eigenvalues.iter().any(|&l| l.abs() <= 1e-12 * scale) {
        return Err("metric is degenerate".into());
    }
    let negative = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
    if negative != 1 {
        return Err(format!(
            "signature has {negative} negative directions, expected 1"
        ));
    }
    Ok(())
}

/// `(L_Z g)_ij = Z^k ∂_k g_ij + g_kj ∂_i Z^k + g_ik ∂_j Z^k` from first-order
/// jets.
pub(crate) fn lie_derivative_of_metric(n: usize, g: &[Jet3], z: &[Jet3]) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let mut s = 0.0;
        for k in 0..n {
            s += z[k].value() * g[i * n + j].partial(&[k])
                + g[k * n + j].value() * z[k].partial(&[i])
                + g[i * n + k].value() * z[k].partial(&[j]);
        }
        s
    })
}

pub(crate) fn null_sectional(geo: &LeviCivita, xi: &[f64], x: &[f64]) -> Result<f64> {
    let nn = geo.inner(xi, xi);
    if nn.abs() >= NULL_TOL {
        return Err(Error::NotNull(nn));
    }
    let xx = geo.inner(x, x);
    if xx.abs() < NULL_TOL {
        return Err(Error::NullVector);
    }
    if xx < 0.0 {
        return Err(Error::Precondition {
            name: "spacelike",
            detail: format!("g(x,x) = {xx:e}"),
        });
    }
    Ok(geo.curvature_form(x, xi, xi, x) / xx)
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

/// `R(x,y)z + R(y,z)x + R(z,x)y`, largest component.
pub fn bianchi_residual(geo: &LeviCivita, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
    let a = geo.curvature_vector(x, y, z);
    let b = geo.curvature_vector(y, z, x);
    let c = geo.curvature_vector(z, x, y);
    (0..a.len())
        .map(|i| (a[i] + b[i] + c[i]).abs())
        .fold(0.0, f64::max)
}

/// Antisymmetry of `g(R(x,y)z,w)` in the first and in the last pair.
pub fn antisymmetry_residual(geo: &LeviCivita, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
    let a = geo.curvature_form(x, y, z, w);
    let first = (a + geo.curvature_form(y, x, z, w)).abs();
    let last = (a + geo.curvature_form(x, y, w, z)).abs();
    first.max(last)
}

/// A `g`-orthonormal basis at a point from the eigenvectors of the metric
/// matrix, timelike vector first.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
    let n = g.nrows();
    let eig = SymmetricEigen::new(g.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut frame = Vec::with_capacity(n);
    for &k in &order {
        let lambda = eig.eigenvalues[k];
        if lambda.abs() < 1e-14 {
            return Err(Error::SingularMetric { point: vec![] });
        }
        let s = 1.0 / lambda.abs().sqrt();
        frame.push(eig.eigenvectors.column(k).iter().map(|c| c * s).collect());
    }
    Ok(frame)
}

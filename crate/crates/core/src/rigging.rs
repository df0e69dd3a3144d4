//! Rigged structure on a null hypersurface `L = {F = 0}`: the rigged field
//! `ξ`, the null rigging `N`, the screen, and the induced tensors.
//!
//! All frame fields are carried as order-2 jets in the ambient chart around
//! the base point, so first derivatives along `L` (and second derivatives
//! where the transverse module needs them) come out exactly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::exprlang::BoundExpr;
use crate::jets::Jet3;
use crate::sampling::HaltonBox;
use crate::spacetime::{bind_source, values, ChartedSpacetime, LeviCivita, VectorField};

/// `|dF(u)|` above which a vector is rejected as non-tangent (relative to
/// `|u|`).
pub const TANGENT_TOL: f64 = 1e-9;
/// Target for the graph-coordinate root polish.
pub const ROOT_TOL: f64 = 1e-12;
/// `max |B|` below which `L` counts as totally geodesic.
pub const TOTALLY_GEODESIC_TOL: f64 = 1e-7;

/// A null hypersurface with a rigging, as one scenario instance.
#[derive(Debug, Clone)]
pub struct NullHypersurface {
    ambient: ChartedSpacetime,
    level: BoundExpr,
    rigging: VectorField,
    graph_coordinate: usize,
    sampling_domain: Vec<[f64; 2]>,
    leaf_coordinates: Option<Vec<usize>>,
}

impl NullHypersurface {
    pub fn new(
        ambient: ChartedSpacetime,
        level_function: &str,
        rigging: &[impl AsRef<str>],
        graph_coordinate: usize,
        sampling_domain: Vec<[f64; 2]>,
    ) -> Result<Self> {
        let n = ambient.dim();
        if n < 3 {
            return Err(Error::scenario(
                "dimension",
                "a null hypersurface needs dimension at least 3",
            ));
        }
        let level = bind_source(level_function, ambient.coordinates(), "level_function")?;
        let rigging = VectorField::parse(rigging, ambient.coordinates(), "rigging")?;
        if graph_coordinate >= n {
            return Err(Error::scenario("graph_coordinate", "index out of range"));
        }
        if sampling_domain.len() != n {
            return Err(Error::scenario(
                "sampling_domain",
                "one interval per coordinate is required",
            ));
        }
        for (i, &[lo, hi]) in sampling_domain.iter().enumerate() {
            if !(lo <= hi) {
                return Err(Error::scenario(
                    format!("sampling_domain.{}", ambient.coordinates()[i]),
                    "empty interval",
                ));
            }
        }
        Ok(NullHypersurface {
            ambient,
            level,
            rigging,
            graph_coordinate,
            sampling_domain,
            leaf_coordinates: None,
        })
    }

    /// Coordinates spanning the screen leaves through a point (the other
    /// coordinates held fixed).
    pub fn with_leaf_coordinates(mut self, leaf: Vec<usize>) -> Result<Self> {
        let n = self.ambient.dim();
        if leaf.len() != n - 2 || leaf.iter().any(|&i| i >= n) {
            return Err(Error::scenario(
                "leaf_coordinates",
                format!("expected {} coordinates", n - 2),
            ));
        }
        self.leaf_coordinates = Some(leaf);
        Ok(self)
    }

    pub fn ambient(&self) -> &ChartedSpacetime {
        &self.ambient
    }

    pub fn rigging(&self) -> &VectorField {
        &self.rigging
    }

    pub fn graph_coordinate(&self) -> usize {
        self.graph_coordinate
    }

    pub fn sampling_domain(&self) -> &[[f64; 2]] {
        &self.sampling_domain
    }

    pub fn leaf_coordinates(&self) -> Option<&[usize]> {
        self.leaf_coordinates.as_deref()
    }

    /// Same hypersurface and chart with a different rigging.
    pub fn with_rigging(&self, rigging: &[impl AsRef<str>]) -> Result<Self> {
        let mut out = self.clone();
        out.rigging = VectorField::parse(rigging, self.ambient.coordinates(), "rigging")?;
        Ok(out)
    }

    pub fn level_value(&self, point: &[f64]) -> Result<f64> {
        Ok(self.level.eval(&self.ambient.reduce(point))?)
    }

    /// `F` on jet inputs (seeds or a composite map).
    pub fn level_on(&self, inputs: &[Jet3]) -> Result<Jet3> {
        Ok(self.level.eval_jet(&self.ambient.reduce_inputs(inputs))?)
    }

    fn level_and_slope(&self, point: &[f64]) -> Result<(f64, f64)> {
        let g = self.graph_coordinate;
        let n = self.ambient.dim();
        let seeds: Vec<Jet3> = (0..n)
            .map(|i| {
                if i == g {
                    Jet3::variable(n, 1, i, point[i])
                } else {
                    Jet3::constant(n, 1, point[i])
                }
            })
            .collect();
        let f = self.level_on(&seeds)?;
        Ok((f.value(), f.partial(&[g])))
    }

    /// Moves `point` onto `L` along the graph coordinate: bisection on
    /// `bracket` when it brackets a sign change, then Newton polish to
    /// `|F| < 1e-12`.
    pub fn solve_graph(&self, point: &[f64], bracket: [f64; 2]) -> Result<Vec<f64>> {
        let g = self.graph_coordinate;
        let mut p = point.to_vec();
        let eval = |p: &mut Vec<f64>, s: f64| -> Result<f64> {
            p[g] = s;
            self.level_value(p)
        };
        let [mut lo, mut hi] = bracket;
        let flo = eval(&mut p, lo)?;
        let fhi = eval(&mut p, hi)?;
        let mut s = point[g];
        if flo == 0.0 {
            s = lo;
        } else if fhi == 0.0 {
            s = hi;
        } else if flo.signum() != fhi.signum() {
            let mut f_lo = flo;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= 1e-9 * (1.0 + mid.abs()) {
                    break;
                }
                let fm = eval(&mut p, mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == f_lo.signum() {
                    lo = mid;
                    f_lo = fm;
                } else {
                    hi = mid;
                }
            }
            s = 0.5 * (lo + hi);
        }
        p[g] = s;
        let mut best = (self.level_value(&p)?.abs(), s);
        for _ in 0..20 {
            if best.0 < ROOT_TOL {
                break;
            }
            let (f, slope) = self.level_and_slope(&p)?;
            if slope == 0.0 || !slope.is_finite() {
                break;
            }
            p[g] -= f / slope;
            let r = self.level_value(&p)?.abs();
            if r < best.0 {
                best = (r, p[g]);
            } else {
                break;
            }
        }
        p[g] = best.1;
        if !(best.0 < ROOT_TOL) {
            return Err(Error::RootSolve(format!("|F| = {:e} at {p:?}", best.0)));
        }
        Ok(p)
    }

    /// Up to `count` points of `L`: shifted Halton points of the sampling
    /// domain moved onto `L` along the graph coordinate. Points whose root
    /// solve fails are skipped.
    pub fn sample_points(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let halton = HaltonBox::new(&self.sampling_domain, seed);
        let bracket = self.sampling_domain[self.graph_coordinate];
        let mut out = Vec::with_capacity(count);
        let mut index = 0u64;
        while out.len() < count {
            if index as usize > 20 * count + 100 {
                return Err(Error::RootSolve(format!(
                    "only {} of {count} sample points could be placed on the hypersurface",
                    out.len()
                )));
            }
            let raw = halton.point(index);
            index += 1;
            if let Ok(p) = self.solve_graph(&raw, bracket) {
                if self.ambient.exit_coordinate(&p).is_none() {
                    out.push(p);
                }
            }
        }
        Ok(out)
    }

    pub fn build_frame(&self, point: &[f64]) -> Result<RiggedFrame> {
        RiggedFrame::build(self, point)
    }

    /// `max |B|` over frame pairs at sampled points.
    pub fn totally_geodesic_report(
        &self,
        samples: usize,
        seed: u64,
        exec: Execution,
    ) -> Result<f64> {
        let points = self.sample_points(samples, seed)?;
        let per_point = exec.map_indexed(points.len(), |i| -> Result<f64> {
            let frame = self.build_frame(&points[i])?;
            Ok(max_abs(&frame.second_fundamental_matrix()))
        });
        let mut max = 0.0f64;
        for r in per_point {
            max = max.max(r?);
        }
        Ok(max)
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

/// `Σ_i u^i D[i]` where `D[i]` is the covariant derivative along `∂_i`.
fn contract(u: &[f64], d: &[Vec<f64>]) -> Vec<f64> {
    let n = d[0].len();
    let mut out = vec![0.0; n];
    for (ui, di) in u.iter().zip(d) {
        for k in 0..n {
            out[k] += ui * di[k];
        }
    }
    out
}

/// The rigging construction at a point of `L`.
///
/// Frame convention: `E_0 = ξ`, `E_a = e_a` for the screen vectors
/// (`a = 1..=n−2`).
#[derive(Debug, Clone)]
pub struct RiggedFrame {
    point: Vec<f64>,
    geo: LeviCivita,
    df: Vec<Jet3>,
    zeta: Vec<Jet3>,
    alpha: Vec<Jet3>,
    zeta_norm: Jet3,
    xi: Vec<Jet3>,
    null_rigging: Vec<Jet3>,
    screen: Vec<Vec<Jet3>>,
    // Covariant derivatives along coordinate directions: d[i][k] = (∇_∂i V)^k.
    d_xi: Vec<Vec<f64>>,
    d_zeta: Vec<Vec<f64>>,
    d_null: Vec<Vec<f64>>,
    d_screen: Vec<Vec<Vec<f64>>>,
}

impl RiggedFrame {
    fn build(s: &NullHypersurface, point: &[f64]) -> Result<Self> {
        let m = &s.ambient;
        let n = m.dim();
        m.check_in_chart(point)?;
        let seeds = m.seeds(point, 3);
        let geo = LeviCivita::from_metric(n, m.metric_on(&seeds)?, point)?;
        let f = s.level_on(&seeds)?;
        let df: Vec<Jet3> = (0..n).map(|i| f.derivative(i)).collect();
        let ginv = geo.inverse_metric_jets();
        let grad: Vec<Jet3> = (0..n)
            .map(|i| {
                let mut acc = &ginv[i * n] * &df[0];
                for j in 1..n {
                    acc += &(&ginv[i * n + j] * &df[j]);
                }
                acc
            })
            .collect();
        let zeta = s.rigging.jets(&seeds)?;
        let zeta_f = jet_dot(&zeta, &df);
        let scale = norm(&values(&zeta)) * norm(&values(&df));
        if !(zeta_f.value().abs() > 1e-10 * scale.max(1e-300)) {
            return Err(Error::NotTransverse(zeta_f.value()));
        }
        let xi: Vec<Jet3> = grad.iter().map(|g| g / &zeta_f).collect();
        let g = geo.metric_jets();
        let alpha: Vec<Jet3> = (0..n)
            .map(|j| {
                let mut acc = &g[j] * &zeta[0];
                for i in 1..n {
                    acc += &(&g[i * n + j] * &zeta[i]);
                }
                acc
            })
            .collect();
        let zeta_norm = jet_dot(&alpha, &zeta);
        let half = zeta_norm.scale(0.5);
        let null_rigging: Vec<Jet3> = (0..n).map(|k| &zeta[k] - &(&half * &xi[k])).collect();

        // Screen candidates s_a = t_a − α(t_a) ξ with t_a = ∂_a − (∂_aF/ζF) ζ.
        // A candidate that cancels down to rounding noise (t_a along ξ) must
        // not be normalized into a spurious direction, hence the floor.
        let mut floor = Vec::with_capacity(n);
        let mut candidates: Vec<Vec<Jet3>> = (0..n)
            .map(|a| {
                let ratio = &df[a] / &zeta_f;
                let t: Vec<Jet3> = (0..n)
                    .map(|k| {
                        let unit = Jet3::constant(n, 3, if k == a { 1.0 } else { 0.0 });
                        &unit - &(&ratio * &zeta[k])
                    })
                    .collect();
                let at = jet_dot(&alpha, &t);
                floor.push(
                    1e-8 * (1.0
                        + (ratio.value() * norm(&values(&zeta))).abs()
                        + (at.value() * norm(&values(&xi))).abs()),
                );
                (0..n).map(|k| &t[k] - &(&at * &xi[k])).collect()
            })
            .collect();
        let q = n - 2;
        let mut screen: Vec<Vec<Jet3>> = Vec::with_capacity(q);
        let mut used = vec![false; n];
        while screen.len() < q {
            let mut best: Option<(usize, f64)> = None;
            for (a, c) in candidates.iter().enumerate() {
                if used[a] {
                    continue;
                }
                let cv = values(c);
                let e2: f64 = cv.iter().map(|x| x * x).sum();
                if !(e2.sqrt() > floor[a]) {
                    continue;
                }
                let ratio = geo.inner(&cv, &cv) / e2;
                if best.is_none_or(|(_, r)| ratio > r) {
                    best = Some((a, ratio));
                }
            }
            let Some((a, _)) = best.filter(|&(_, r)| r > 1e-10) else {
                return Err(Error::ScreenBreakdown {
                    found: screen.len(),
                    needed: q,
                });
            };
            used[a] = true;
            let c = &candidates[a];
            let nn = geo.inner_jets(c, c);
            let v = nn.value();
            let inv_sqrt = nn.compose([
                1.0 / v.sqrt(),
                -0.5 * v.powf(-1.5),
                0.75 * v.powf(-2.5),
                -1.875 * v.powf(-3.5),
            ]);
            let e: Vec<Jet3> = c.iter().map(|x| x * &inv_sqrt).collect();
            for (b, cand) in candidates.iter_mut().enumerate() {
                if used[b] {
                    continue;
                }
                let proj = geo.inner_jets(cand, &e);
                for k in 0..n {
                    cand[k] -= &(&proj * &e[k]);
                }
            }
            screen.push(e);
        }

        let dirs: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
            .collect();
        let grad_of = |field: &[Jet3]| -> Vec<Vec<f64>> {
            dirs.iter()
                .map(|u| values(&geo.covariant_derivative(u, field)))
                .collect()
        };
        let d_xi = grad_of(&xi);
        let d_zeta = grad_of(&zeta);
        let d_null = grad_of(&null_rigging);
        let d_screen = screen.iter().map(|e| grad_of(e)).collect();
        Ok(RiggedFrame {
            point: point.to_vec(),
            df,
            zeta,
            alpha,
            zeta_norm,
            xi,
            null_rigging,
            screen,
            d_xi,
            d_zeta,
            d_null,
            d_screen,
            geo,
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn screen_dim(&self) -> usize {
        self.screen.len()
    }

    pub fn geometry(&self) -> &LeviCivita {
        &self.geo
    }

    pub fn xi(&self) -> Vec<f64> {
        values(&self.xi)
    }

    pub fn null_rigging(&self) -> Vec<f64> {
        values(&self.null_rigging)
    }

    pub fn zeta(&self) -> Vec<f64> {
        values(&self.zeta)
    }

    pub fn screen(&self) -> Vec<Vec<f64>> {
        self.screen.iter().map(|e| values(e)).collect()
    }

    /// `(ξ, e_1, …, e_q)`.
    pub fn frame(&self) -> Vec<Vec<f64>> {
        let mut f = vec![self.xi()];
        f.extend(self.screen());
        f
    }

    pub(crate) fn alpha_jets(&self) -> &[Jet3] {
        &self.alpha
    }

    pub(crate) fn frame_jets(&self) -> Vec<&[Jet3]> {
        let mut f: Vec<&[Jet3]> = vec![&self.xi];
        f.extend(self.screen.iter().map(Vec::as_slice));
        f
    }

    pub fn g(&self, u: &[f64], v: &[f64]) -> f64 {
        self.geo.inner(u, v)
    }

    /// `ω(u) = g(ζ, u)`.
    pub fn omega(&self, u: &[f64]) -> f64 {
        values(&self.alpha).iter().zip(u).map(|(a, b)| a * b).sum()
    }

    pub fn df(&self, u: &[f64]) -> f64 {
        values(&self.df).iter().zip(u).map(|(a, b)| a * b).sum()
    }

    pub fn zeta_norm(&self) -> f64 {
        self.zeta_norm.value()
    }

    /// `g(grad F, grad F)`.
    pub fn level_gradient_norm(&self) -> f64 {
        let n = self.dim();
        let ginv = self.geo.inverse_metric_jets();
        let df = values(&self.df);
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += ginv[i * n + j].value() * df[i] * df[j];
            }
        }
        s
    }

    /// `ĝ = g + α⊗α`, which restricts to `g̃` on `T_pL`.
    pub fn rigged_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.g(u, v) + self.omega(u) * self.omega(v)
    }

    /// `g̃(E_A, E_B)`.
    pub fn rigged_metric_in_frame(&self) -> DMatrix<f64> {
        let f = self.frame();
        let m = f.len();
        DMatrix::from_fn(m, m, |a, b| self.rigged_inner(&f[a], &f[b]))
    }

    /// Components of a tangent vector in `(ξ, e_1, …)`: `ω(u)`, `g(u, e_a)`.
    pub fn frame_components(&self, u: &[f64]) -> Vec<f64> {
        let mut c = vec![self.omega(u)];
        c.extend(self.screen().iter().map(|e| self.g(u, e)));
        c
    }

    pub fn check_tangent(&self, u: &[f64]) -> Result<()> {
        let r = self.df(u);
        let scale = norm(&values(&self.df)) * norm(u).max(1.0);
        if r.abs() > TANGENT_TOL * scale.max(1.0) {
            return Err(Error::NotTangent(r));
        }
        Ok(())
    }

    pub fn check_screen(&self, x: &[f64]) -> Result<()> {
        self.check_tangent(x)?;
        let r = self.omega(x).abs().max(self.g(x, &self.xi()).abs());
        if r > TANGENT_TOL * norm(x).max(1.0) {
            return Err(Error::NotScreen(r));
        }
        Ok(())
    }

    pub fn nabla_xi(&self, u: &[f64]) -> Vec<f64> {
        contract(u, &self.d_xi)
    }

    pub fn nabla_zeta(&self, u: &[f64]) -> Vec<f64> {
        contract(u, &self.d_zeta)
    }

    pub fn nabla_null_rigging(&self, u: &[f64]) -> Vec<f64> {
        contract(u, &self.d_null)
    }

    /// `∇_u Ṽ` for the extension `Ṽ = Σ c_A E_A` of `v` with constant frame
    /// coefficients.
    fn nabla_extension(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let c = self.frame_components(v);
        let mut out = contract(u, &self.d_xi)
            .iter()
            .map(|x| x * c[0])
            .collect::<Vec<_>>();
        for (a, d) in self.d_screen.iter().enumerate() {
            out = axpy(c[a + 1], &contract(u, d), &out);
        }
        out
    }

    /// `B(u,v) = −g(∇_u ξ, v)`.
    pub fn second_fundamental(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_tangent(u)?;
        self.check_tangent(v)?;
        Ok(-self.g(&self.nabla_xi(u), v))
    }

    /// `B(u,v) = g(∇_u Ṽ, ξ)`, the second route.
    pub fn second_fundamental_by_extension(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_tangent(u)?;
        self.check_tangent(v)?;
        Ok(self.g(&self.nabla_extension(u, v), &self.xi()))
    }

    /// `B(E_A, E_B)`.
    pub fn second_fundamental_matrix(&self) -> DMatrix<f64> {
        let f = self.frame();
        let m = f.len();
        DMatrix::from_fn(m, m, |a, b| -self.g(&self.nabla_xi(&f[a]), &f[b]))
    }

    /// `C(u,x) = g(∇_u X̃, N)` with `X̃ = Σ x^a e_a`.
    pub fn screen_fundamental(&self, u: &[f64], x: &[f64]) -> Result<f64> {
        self.check_tangent(u)?;
        self.check_screen(x)?;
        Ok(self.screen_fundamental_unchecked(u, x))
    }

    fn screen_fundamental_unchecked(&self, u: &[f64], x: &[f64]) -> f64 {
        let c = self.frame_components(x);
        let mut acc = vec![0.0; self.dim()];
        for (a, d) in self.d_screen.iter().enumerate() {
            acc = axpy(c[a + 1], &contract(u, d), &acc);
        }
        self.g(&acc, &self.null_rigging())
    }

    /// `τ(u) = g(∇_u ζ, ξ)`.
    pub fn tau(&self, u: &[f64]) -> Result<f64> {
        self.check_tangent(u)?;
        Ok(self.g(&self.nabla_zeta(u), &self.xi()))
    }

    /// `g(∇_u N, ξ)`, the second route to `τ`.
    pub fn tau_by_null_rigging(&self, u: &[f64]) -> Result<f64> {
        self.check_tangent(u)?;
        Ok(self.g(&self.nabla_null_rigging(u), &self.xi()))
    }

    /// `A(u) = τ(u) N − ∇_u N`.
    pub fn shape_operator(&self, u: &[f64]) -> Result<Vec<f64>> {
        let t = self.tau(u)?;
        let dn = self.nabla_null_rigging(u);
        Ok(axpy(
            -1.0,
            &dn,
            &self
                .null_rigging()
                .iter()
                .map(|x| t * x)
                .collect::<Vec<_>>(),
        ))
    }

    /// `A*(u) = −τ(u) ξ − ∇_u ξ`.
    pub fn screen_shape_operator(&self, u: &[f64]) -> Result<Vec<f64>> {
        let t = self.tau(u)?;
        let dx = self.nabla_xi(u);
        Ok(self.xi().iter().zip(&dx).map(|(x, d)| -t * x - d).collect())
    }

    /// `A` and `A*` on the frame. Column `B` holds the frame components of
    /// `A(E_B)` (resp. `A*(E_B)`) followed by the transverse component
    /// `g(·, ξ)`.
    pub fn shape_operator_matrices(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let f = self.frame();
        let m = f.len();
        let mut a = DMatrix::zeros(m + 1, m);
        let mut astar = DMatrix::zeros(m + 1, m);
        for (b, e) in f.iter().enumerate() {
            let av = self.shape_operator(e)?;
            let sv = self.screen_shape_operator(e)?;
            for (r, c) in self.frame_components(&av).into_iter().enumerate() {
                a[(r, b)] = c;
            }
            a[(m, b)] = self.g(&av, &self.xi());
            for (r, c) in self.frame_components(&sv).into_iter().enumerate() {
                astar[(r, b)] = c;
            }
            astar[(m, b)] = self.g(&sv, &self.xi());
        }
        Ok((a, astar))
    }

    /// `P(u) = u − ω(u) ξ`.
    pub fn screen_projection(&self, u: &[f64]) -> Vec<f64> {
        axpy(-self.omega(u), &self.xi(), u)
    }

    /// `C̄(u,v) = C(Pu,Pv) − ω(u)τ(Pv) − ω(v)τ(Pu) − ω(u)ω(v)τ(ξ)`.
    pub fn cbar(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_tangent(u)?;
        self.check_tangent(v)?;
        let (pu, pv) = (self.screen_projection(u), self.screen_projection(v));
        let (wu, wv) = (self.omega(u), self.omega(v));
        Ok(self.screen_fundamental_unchecked(&pu, &pv)
            - wu * self.tau(&pv)?
            - wv * self.tau(&pu)?
            - wu * wv * self.tau(&self.xi())?)
    }

    /// `C(u,x) + g(∇_u ζ, x) + ½ g(ζ,ζ) B(u,x)`.
    pub fn screen_form_residual(&self, u: &[f64], x: &[f64]) -> Result<f64> {
        Ok(self.screen_fundamental(u, x)?
            + self.g(&self.nabla_zeta(u), x)
            + 0.5 * self.zeta_norm() * self.second_fundamental(u, x)?)
    }

    /// Largest deviation among the algebraic frame identities for `ξ`:
    /// `g(ξ,ξ)`, `g(ξ,ζ) − 1`, `dF(ξ)`.
    pub fn xi_residual(&self) -> f64 {
        let xi = self.xi();
        [
            self.g(&xi, &xi),
            self.g(&xi, &self.zeta()) - 1.0,
            self.df(&xi),
        ]
        .iter()
        .fold(0.0, |a, b| a.max(b.abs()))
    }

    /// `g(N,N)`, `g(N,ξ) − 1`, `g(N,e_a)`.
    pub fn null_rigging_residual(&self) -> f64 {
        let nr = self.null_rigging();
        let mut r = self
            .g(&nr, &nr)
            .abs()
            .max((self.g(&nr, &self.xi()) - 1.0).abs());
        for e in self.screen() {
            r = r.max(self.g(&nr, &e).abs());
        }
        r
    }

    /// `ω(ξ) − 1`, `ω(e_a)`, and `g̃ − I` in the frame.
    pub fn rigged_metric_residual(&self) -> f64 {
        let mut r = (self.omega(&self.xi()) - 1.0).abs();
        for e in self.screen() {
            r = r.max(self.omega(&e).abs());
        }
        let gt = self.rigged_metric_in_frame();
        let id = DMatrix::<f64>::identity(gt.nrows(), gt.ncols());
        r.max((gt - id).amax())
    }

    /// `K(ζ, ξ)` with the standard normalization (denominator `−1` for
    /// `g(ξ,ξ) = 0`, `g(ζ,ξ) = 1`), and the unnormalized
    /// `g(R(ξ,ζ)ζ, ξ)`.
    pub fn rigging_plane_curvature(&self) -> Result<(f64, f64)> {
        let (z, x) = (self.zeta(), self.xi());
        Ok((
            self.geo.sectional(&z, &x)?,
            self.geo.curvature_form(&x, &z, &z, &x),
        ))
    }
}

fn jet_dot(a: &[Jet3], b: &[Jet3]) -> Jet3 {
    crate::jets::dot(a, b)
}

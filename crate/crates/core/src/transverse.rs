//! Geometry of `(L, g̃)` and of the screen: the induced graph chart, the
//! connections `∇*` and `∇^T`, and the transverse curvatures.
//!
//! Two independent routes are kept apart on purpose. `K̃` and `dω` come
//! from the graph chart alone; `K^T` comes from the `∇*` coefficients of the
//! ambient frame fields.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jets::Jet3;
use crate::rigging::{NullHypersurface, RiggedFrame, TOTALLY_GEODESIC_TOL};
use crate::spacetime::{bracket, values, LeviCivita, KILLING_TOL};

/// Graph parametrization of `L` near a point: the chart coordinates are the
/// ambient ones with the graph coordinate `G` removed, and `x_G = h(y)`
/// solves `F = 0`.
#[derive(Debug, Clone)]
pub struct InducedChart {
    graph: usize,
    induced: Vec<usize>,
    base: Vec<f64>,
    phi: Vec<Jet3>,
    metric: Vec<Jet3>,
    omega: Vec<Jet3>,
    root_residual: f64,
}

impl InducedChart {
    /// Chart data to `order` (3 gives curvature, 2 gives Christoffels) at the
    /// point of `L` reached from `point` along the graph coordinate.
    pub fn at(surface: &NullHypersurface, point: &[f64], order: u8) -> Result<Self> {
        let graph = surface.graph_coordinate();
        let [lo, hi] = surface.sampling_domain()[graph];
        let half = 0.5 * (hi - lo).max(1e-3);
        let base = surface.solve_graph(point, [point[graph] - half, point[graph] + half])?;
        Self::on_surface(surface, &base, order)
    }

    /// Like [`Self::at`] for a point already on `L` (no re-solve).
    pub fn on_surface(surface: &NullHypersurface, base: &[f64], order: u8) -> Result<Self> {
        let ambient = surface.ambient();
        let n = ambient.dim();
        let graph = surface.graph_coordinate();
        let m = n - 1;
        let induced: Vec<usize> = (0..n).filter(|&i| i != graph).collect();
        let (phi, root_residual) = graph_embedding(surface, base, &induced, order)?;
        let g = ambient.metric_on(&phi)?;
        let zeta = surface.rigging().jets(&ambient.reduce_inputs(&phi))?;
        let alpha: Vec<Jet3> = (0..n)
            .map(|j| {
                let mut acc = &g[j] * &zeta[0];
                for i in 1..n {
                    acc += &(&g[i * n + j] * &zeta[i]);
                }
                acc
            })
            .collect();
        let tangent: Vec<Vec<Jet3>> = (0..m)
            .map(|a| phi.iter().map(|c| c.derivative(a)).collect())
            .collect();
        let omega: Vec<Jet3> = tangent
            .iter()
            .map(|t| crate::jets::dot(&alpha, t))
            .collect();
        let metric = pullback(n, &g, &tangent, Some(&omega));
        let mut base = base.to_vec();
        base[graph] = phi[graph].value();
        Ok(InducedChart {
            graph,
            induced,
            base,
            phi,
            metric,
            omega,
            root_residual,
        })
    }

    pub fn dim(&self) -> usize {
        self.induced.len()
    }

    /// Ambient coordinates of the chart's base point.
    pub fn base_point(&self) -> &[f64] {
        &self.base
    }

    pub fn induced_coordinates(&self) -> Vec<f64> {
        self.induced.iter().map(|&i| self.base[i]).collect()
    }

    /// `|F|` at the base point after the polish.
    pub fn root_residual(&self) -> f64 {
        self.root_residual
    }

    /// Chart components of a tangent vector given in ambient components.
    pub fn to_induced(&self, u: &[f64]) -> Vec<f64> {
        self.induced.iter().map(|&i| u[i]).collect()
    }

    /// Ambient components of a chart vector: `(v, Σ ∂_a h v^a)`.
    pub fn to_ambient(&self, v: &[f64]) -> Vec<f64> {
        let h = &self.phi[self.graph];
        let mut out = vec![0.0; self.base.len()];
        for (a, &i) in self.induced.iter().enumerate() {
            out[i] = v[a];
        }
        out[self.graph] = (0..v.len()).map(|a| h.partial(&[a]) * v[a]).sum();
        out
    }

    /// Ambient components of `∂²φ(v, v)` (only the graph slot is nonzero).
    pub fn second_derivative(&self, v: &[f64]) -> Vec<f64> {
        let h = &self.phi[self.graph];
        let m = v.len();
        let mut out = vec![0.0; self.base.len()];
        let mut s = 0.0;
        for a in 0..m {
            for b in 0..m {
                s += h.partial(&[a, b]) * v[a] * v[b];
            }
        }
        out[self.graph] = s;
        out
    }

    pub fn metric_jets(&self) -> &[Jet3] {
        &self.metric
    }

    pub fn metric_matrix(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |a, b| self.metric[a * m + b].value())
    }

    pub fn inner(&self, v: &[f64], w: &[f64]) -> f64 {
        let m = self.dim();
        let mut s = 0.0;
        for a in 0..m {
            for b in 0..m {
                s += self.metric[a * m + b].value() * v[a] * w[b];
            }
        }
        s
    }

    /// Levi-Civita connection of `g̃` in the chart.
    pub fn geometry(&self) -> Result<LeviCivita> {
        LeviCivita::from_metric(self.dim(), self.metric.clone(), &self.induced_coordinates())
    }

    pub fn christoffel(&self) -> Result<Vec<f64>> {
        crate::spacetime::christoffel_values(self.dim(), &self.metric, &self.induced_coordinates())
    }

    /// `K̃` of the plane spanned by tangent vectors `x, y` (ambient
    /// components).
    pub fn rigged_curvature(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let geo = self.geometry()?;
        geo.sectional(&self.to_induced(x), &self.to_induced(y))
    }

    /// `dω(x,y) = x(ω(y)) − y(ω(x)) − ω([x,y])` through the chart
    /// components of `ω`.
    pub fn domega(&self, x: &[f64], y: &[f64]) -> f64 {
        let (xv, yv) = (self.to_induced(x), self.to_induced(y));
        let m = self.dim();
        let mut s = 0.0;
        for a in 0..m {
            for b in 0..m {
                let d = self.omega[b].partial(&[a]) - self.omega[a].partial(&[b]);
                s += d * xv[a] * yv[b];
            }
        }
        s
    }
}

/// `g(∂_a φ, ∂_b φ)` (plus `ω_a ω_b` when given) for tangent jets
/// `∂_a φ`, row-major.
pub(crate) fn pullback(
    n: usize,
    g: &[Jet3],
    tangent: &[Vec<Jet3>],
    omega: Option<&[Jet3]>,
) -> Vec<Jet3> {
    let m = tangent.len();
    let mut metric = Vec::with_capacity(m * m);
    for a in 0..m {
        let lowered: Vec<Jet3> = (0..n)
            .map(|j| {
                let mut acc = &tangent[a][0] * &g[j];
                for i in 1..n {
                    acc += &(&tangent[a][i] * &g[i * n + j]);
                }
                acc
            })
            .collect();
        for b in 0..m {
            let mut v = crate::jets::dot(&lowered, &tangent[b]);
            if let Some(w) = omega {
                v += &(&w[a] * &w[b]);
            }
            metric.push(v);
        }
    }
    metric
}

/// Jets of the embedding `y ↦ x` of the part of `L` where only the `free`
/// coordinates vary: free slots are chart variables, the graph coordinate
/// solves `F = 0`, and the rest stay at `base`. Returns the map and the
/// polished `|F|`.
pub(crate) fn graph_embedding(
    surface: &NullHypersurface,
    base: &[f64],
    free: &[usize],
    order: u8,
) -> Result<(Vec<Jet3>, f64)> {
    let ambient = surface.ambient();
    let n = ambient.dim();
    let graph = surface.graph_coordinate();
    let m = free.len();
    let slope = {
        let seeds = ambient.seeds(base, 1);
        surface.level_on(&seeds)?.partial(&[graph])
    };
    if slope == 0.0 || !slope.is_finite() {
        return Err(Error::RootSolve(format!(
            "graph coordinate `{}` is degenerate: dF/dx_G = {slope}",
            ambient.coordinates()[graph]
        )));
    }
    let assemble = |h: &Jet3| -> Vec<Jet3> {
        (0..n)
            .map(|i| {
                if i == graph {
                    h.clone()
                } else if let Some(a) = free.iter().position(|&f| f == i) {
                    Jet3::variable(m, order, a, base[i])
                } else {
                    Jet3::constant(m, order, base[i])
                }
            })
            .collect()
    };
    // Fixed-slope Newton: each sweep fixes one more order of h.
    let mut h = Jet3::constant(m, order, base[graph]);
    for _ in 0..=order {
        let f = surface.level_on(&assemble(&h))?;
        h = &h - &f.scale(1.0 / slope);
    }
    let phi = assemble(&h);
    let root_residual = surface.level_on(&phi)?.value().abs();
    Ok((phi, root_residual))
}

/// Frame fields of the rigging construction with the brackets and `ĝ`
/// pairings needed by the Koszul formula, plus `∇*` coefficient jets.
#[derive(Debug, Clone)]
pub struct TransverseGeometry {
    frame: RiggedFrame,
    /// `ĝ(E_A, E_B)` as jets.
    hat: Vec<Vec<Jet3>>,
    /// `[E_A, E_B]` at the base point.
    brackets: Vec<Vec<Vec<f64>>>,
    /// `w[A][j][k] = g(∇_{E_A} e_j, e_k)` as order-1 jets.
    w: Vec<Vec<Vec<Jet3>>>,
    /// `E_A(g(e_j, e_k))`.
    dg_screen: Vec<Vec<Vec<f64>>>,
}

impl TransverseGeometry {
    pub fn at(surface: &NullHypersurface, point: &[f64]) -> Result<Self> {
        Ok(Self::from_frame(surface.build_frame(point)?))
    }

    pub fn from_frame(frame: RiggedFrame) -> Self {
        let geo = frame.geometry();
        let fields: Vec<Vec<Jet3>> = frame
            .frame_jets()
            .into_iter()
            .map(<[Jet3]>::to_vec)
            .collect();
        let alpha = frame.alpha_jets();
        let m = fields.len();
        let q = m - 1;
        let alpha_of: Vec<Jet3> = fields.iter().map(|f| crate::jets::dot(alpha, f)).collect();
        let hat: Vec<Vec<Jet3>> = (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| geo.inner_jets(&fields[a], &fields[b]) + &alpha_of[a] * &alpha_of[b])
                    .collect()
            })
            .collect();
        let brackets: Vec<Vec<Vec<f64>>> = (0..m)
            .map(|a| {
                (0..m)
                    .map(|b| values(&bracket(&fields[a], &fields[b])))
                    .collect()
            })
            .collect();
        let w: Vec<Vec<Vec<Jet3>>> = (0..m)
            .map(|a| {
                (0..q)
                    .map(|j| {
                        let d = geo.nabla(&fields[a], &fields[j + 1]);
                        (0..q).map(|k| geo.inner_jets(&d, &fields[k + 1])).collect()
                    })
                    .collect()
            })
            .collect();
        let fv: Vec<Vec<f64>> = fields.iter().map(|f| values(f)).collect();
        let dg_screen = (0..m)
            .map(|a| {
                (0..q)
                    .map(|j| {
                        (0..q)
                            .map(|k| {
                                geo.inner_jets(&fields[j + 1], &fields[k + 1])
                                    .directional_value(&fv[a])
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        TransverseGeometry {
            frame,
            hat,
            brackets,
            w,
            dg_screen,
        }
    }

    pub fn frame(&self) -> &RiggedFrame {
        &self.frame
    }

    fn frame_len(&self) -> usize {
        self.hat.len()
    }

    fn screen_len(&self) -> usize {
        self.hat.len() - 1
    }

    /// `E_C(ĝ(E_A, E_B))`.
    fn d_hat(&self, c: usize, a: usize, b: usize) -> f64 {
        let ec = &self.frame.frame()[c];
        self.hat[a][b].directional_value(ec)
    }

    /// `ĝ(∇̃_{E_A} E_B, E_C)` by the Koszul formula.
    pub fn koszul(&self, a: usize, b: usize, c: usize) -> f64 {
        let f = self.frame.frame();
        let gh = |v: &[f64], e: usize| self.frame.rigged_inner(v, &f[e]);
        0.5 * (self.d_hat(a, b, c) + self.d_hat(b, a, c) - self.d_hat(c, a, b)
            + gh(&self.brackets[a][b], c)
            - gh(&self.brackets[a][c], b)
            - gh(&self.brackets[b][c], a))
    }

    /// `(L_ξ g̃)(E_A, E_B)`.
    pub fn lie_xi(&self, a: usize, b: usize) -> f64 {
        let f = self.frame.frame();
        self.d_hat(0, a, b)
            - self.frame.rigged_inner(&self.brackets[0][a], &f[b])
            - self.frame.rigged_inner(&f[a], &self.brackets[0][b])
    }

    /// `(L_ξ g̃)(x,y) + 2B(x,y)` for tangent `x, y`.
    pub fn flow_residual(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let b = self.frame.second_fundamental(x, y)?;
        let (cx, cy) = (
            self.frame.frame_components(x),
            self.frame.frame_components(y),
        );
        let m = self.frame_len();
        let mut lie = 0.0;
        for a in 0..m {
            for c in 0..m {
                lie += cx[a] * cy[c] * self.lie_xi(a, c);
            }
        }
        Ok(lie + 2.0 * b)
    }

    /// `max |(L_ξ g̃)(E_A,E_B)|` and `max |g̃(∇̃_{E_A} ξ, E_C)|`.
    pub fn killing_xi_residual_unchecked(&self) -> (f64, f64) {
        let m = self.frame_len();
        let mut lie = 0.0f64;
        let mut par = 0.0f64;
        for a in 0..m {
            for c in 0..m {
                lie = lie.max(self.lie_xi(a, c).abs());
                par = par.max(self.koszul(a, 0, c).abs());
            }
        }
        (lie, par)
    }

    /// As [`Self::killing_xi_residual_unchecked`], after checking that the
    /// rigging is closed and `B` vanishes at the point.
    pub fn killing_xi_residual(&self, surface: &NullHypersurface) -> Result<(f64, f64)> {
        self.require_closed(surface)?;
        self.require_totally_geodesic()?;
        Ok(self.killing_xi_residual_unchecked())
    }

    pub(crate) fn require_closed(&self, surface: &NullHypersurface) -> Result<()> {
        let d = surface
            .ambient()
            .closedness_residual(self.frame.point(), surface.rigging())?;
        let r = d.amax();
        if r >= KILLING_TOL {
            return Err(Error::Precondition {
                name: "closed rigging",
                detail: format!("max |dα| = {r:e}"),
            });
        }
        Ok(())
    }

    pub(crate) fn require_totally_geodesic(&self) -> Result<()> {
        let b = self.frame.second_fundamental_matrix().amax();
        if b >= TOTALLY_GEODESIC_TOL {
            return Err(Error::Precondition {
                name: "totally geodesic",
                detail: format!("max |B| = {b:e}"),
            });
        }
        Ok(())
    }

    /// `∇*` coefficients `g(∇*_{E_A} e_j, e_k)`, indexed `[A][j][k]`.
    pub fn screen_connection(&self) -> Vec<Vec<Vec<f64>>> {
        self.w
            .iter()
            .map(|row| {
                row.iter()
                    .map(|r| r.iter().map(Jet3::value).collect())
                    .collect()
            })
            .collect()
    }

    /// `∇^T` coefficients: `g([ξ, e_j], e_k)` in the `ξ` direction and
    /// `g̃(∇̃_{e_a} e_j, e_k)` in screen directions.
    pub fn transverse_connection_unchecked(&self) -> Vec<Vec<Vec<f64>>> {
        let q = self.screen_len();
        let f = self.frame.frame();
        (0..=q)
            .map(|a| {
                (0..q)
                    .map(|j| {
                        (0..q)
                            .map(|k| {
                                if a == 0 {
                                    self.frame.g(&self.brackets[0][j + 1], &f[k + 1])
                                } else {
                                    self.koszul(a, j + 1, k + 1)
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// `∇^T` coefficients and their largest difference from `∇*`.
    pub fn transverse_connection(&self) -> Result<(Vec<Vec<Vec<f64>>>, f64)> {
        self.require_totally_geodesic()?;
        let t = self.transverse_connection_unchecked();
        let s = self.screen_connection();
        let diff = t
            .iter()
            .flatten()
            .flatten()
            .zip(s.iter().flatten().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok((t, diff))
    }

    /// `max |E_A g(e_j,e_k) − g(∇*_{E_A} e_j, e_k) − g(e_j, ∇*_{E_A} e_k)|`.
    pub fn metric_compatibility_residual(&self) -> f64 {
        let w = self.screen_connection();
        let q = self.screen_len();
        let mut r = 0.0f64;
        for a in 0..self.frame_len() {
            for j in 0..q {
                for k in 0..q {
                    r = r.max((self.dg_screen[a][j][k] - w[a][j][k] - w[a][k][j]).abs());
                }
            }
        }
        r
    }

    /// `max |∇*_{e_a} e_b − ∇*_{e_b} e_a − P[e_a, e_b]|` in screen
    /// components.
    pub fn torsion_residual(&self) -> f64 {
        let w = self.screen_connection();
        let q = self.screen_len();
        let f = self.frame.frame();
        let mut r = 0.0f64;
        for a in 0..q {
            for b in 0..q {
                for k in 0..q {
                    let br = self.frame.g(&self.brackets[a + 1][b + 1], &f[k + 1]);
                    r = r.max((w[a + 1][b][k] - w[b + 1][a][k] - br).abs());
                }
            }
        }
        r
    }

    /// `g̃([e_a, e_b], ξ)` over screen pairs: the Frobenius obstruction to
    /// integrability of the screen.
    pub fn screen_integrability_residual(&self) -> f64 {
        let q = self.screen_len();
        let xi = self.frame.xi();
        let mut r = 0.0f64;
        for a in 0..q {
            for b in 0..q {
                r = r.max(
                    self.frame
                        .rigged_inner(&self.brackets[a + 1][b + 1], &xi)
                        .abs(),
                );
            }
        }
        r
    }

    /// `dω(x,y)` as `g̃(∇̃_x ξ, y) − g̃(∇̃_y ξ, x)`.
    pub fn domega_by_connection(&self, x: &[f64], y: &[f64]) -> f64 {
        let (cx, cy) = (
            self.frame.frame_components(x),
            self.frame.frame_components(y),
        );
        let m = self.frame_len();
        let mut s = 0.0;
        for a in 0..m {
            for b in 0..m {
                s += cx[a] * cy[b] * (self.koszul(a, 0, b) - self.koszul(b, 0, a));
            }
        }
        s
    }

    /// `g(R*(e_a, e_b) e_c, e_k)` from the `∇*` coefficients and their
    /// derivatives along the screen, including the frame-bracket term.
    pub fn curvature_tensor(&self) -> Vec<f64> {
        let q = self.screen_len();
        let f = self.frame.frame();
        let w = self.screen_connection();
        let dw =
            |dir: usize, a: usize, c: usize, k: usize| self.w[a][c][k].directional_value(&f[dir]);
        let alpha_br = |a: usize, b: usize| self.frame.omega(&self.brackets[a][b]);
        let mut r = vec![0.0; q * q * q * q];
        for a in 0..q {
            for b in 0..q {
                let (ea, eb) = (a + 1, b + 1);
                let beta0 = alpha_br(ea, eb);
                let beta: Vec<f64> = (0..q)
                    .map(|m| self.frame.g(&self.brackets[ea][eb], &f[m + 1]))
                    .collect();
                for c in 0..q {
                    for k in 0..q {
                        let mut v = dw(ea, eb, c, k) - dw(eb, ea, c, k);
                        for m in 0..q {
                            v += w[eb][c][m] * w[ea][m][k] - w[ea][c][m] * w[eb][m][k];
                            v -= beta[m] * w[m + 1][c][k];
                        }
                        v -= beta0 * w[0][c][k];
                        r[((a * q + b) * q + c) * q + k] = v;
                    }
                }
            }
        }
        r
    }

    fn screen_components(&self, x: &[f64]) -> Vec<f64> {
        self.frame
            .screen()
            .iter()
            .map(|e| self.frame.g(x, e))
            .collect()
    }

    /// `K^T(x,y) = g(R^T(x,y)y, x)` for `g̃`-orthonormal screen `x, y`.
    pub fn transverse_curvature_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let q = self.screen_len();
        let (cx, cy) = (self.screen_components(x), self.screen_components(y));
        let r = self.curvature_tensor();
        let mut s = 0.0;
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    for k in 0..q {
                        s += cx[a] * cy[b] * cy[c] * cx[k] * r[((a * q + b) * q + c) * q + k];
                    }
                }
            }
        }
        s
    }

    pub fn transverse_curvature(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.require_totally_geodesic()?;
        self.frame.check_screen(x)?;
        self.frame.check_screen(y)?;
        Ok(self.transverse_curvature_unchecked(x, y))
    }

    /// `Ric^T_ad = Σ_i g(R^T(e_a, e_i) e_i, e_d)`.
    pub fn transverse_ricci_matrix(&self) -> DMatrix<f64> {
        let q = self.screen_len();
        let r = self.curvature_tensor();
        DMatrix::from_fn(q, q, |a, d| {
            (0..q).map(|i| r[((a * q + i) * q + i) * q + d]).sum()
        })
    }

    /// `Ric(x,x) − 2 g(R(ξ,x)x, N)` for a screen vector `x`.
    pub fn ricci_bound_quantity(&self, x: &[f64]) -> f64 {
        let geo = self.frame.geometry();
        geo.ricci(x, x)
            - 2.0 * geo.curvature_form(&self.frame.xi(), x, x, &self.frame.null_rigging())
    }

    pub fn transverse_ricci(&self, surface: &NullHypersurface) -> Result<TransverseRicci> {
        self.require_totally_geodesic()?;
        let ric = self.transverse_ricci_matrix();
        // The screen frame is orthonormal, so raising an index changes nothing.
        let rho = ric.clone();
        let scalar_ricci = ric.trace();
        let scalar_rho = rho.trace();
        let comparison = match self.require_closed(surface) {
            Ok(()) => {
                let q = self.screen_len();
                let screen = self.frame.screen();
                let mut worst = 0.0f64;
                let mut probe = |c: &[f64]| {
                    let nrm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let x: Vec<f64> = (0..screen[0].len())
                        .map(|k| (0..q).map(|a| c[a] * screen[a][k]).sum::<f64>() / nrm)
                        .collect();
                    let cx: Vec<f64> = c.iter().map(|v| v / nrm).collect();
                    let lhs: f64 = (0..q)
                        .flat_map(|a| (0..q).map(move |b| (a, b)))
                        .map(|(a, b)| ric[(a, b)] * cx[a] * cx[b])
                        .sum();
                    worst = worst.max((lhs - self.ricci_bound_quantity(&x)).abs());
                };
                for a in 0..q {
                    let mut c = vec![0.0; q];
                    c[a] = 1.0;
                    probe(&c);
                    for b in a + 1..q {
                        c[b] = 1.0;
                        probe(&c);
                        c[b] = 0.0;
                    }
                }
                Some(worst)
            }
            Err(_) => None,
        };
        Ok(TransverseRicci {
            ricci: ric,
            rho,
            scalar: scalar_ricci,
            scalar_trace_residual: (scalar_ricci - scalar_rho).abs(),
            comparison_residual: comparison,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TransverseRicci {
    pub ricci: DMatrix<f64>,
    pub rho: DMatrix<f64>,
    pub scalar: f64,
    pub scalar_trace_residual: f64,
    /// `max |Ric^T(X,X) − (Ric(X,X) − 2g(R(ξ,X)X,N))|` over unit screen
    /// probes; `None` when the rigging is not closed.
    pub comparison_residual: Option<f64>,
}

/// Values of the three sides of `K^T = K̃ + ¾dω² = K` on one screen plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureIdentity {
    pub transverse: f64,
    pub rigged: f64,
    pub domega: f64,
    pub ambient: f64,
}

impl CurvatureIdentity {
    pub fn rigged_residual(&self) -> f64 {
        self.transverse - (self.rigged + 0.75 * self.domega * self.domega)
    }

    pub fn ambient_residual(&self) -> f64 {
        self.transverse - self.ambient
    }
}

/// All three curvature routes on the plane of `g̃`-orthonormal screen
/// vectors `x, y` at a point of a totally geodesic `L`.
pub fn curvat_identity_check(
    geometry: &TransverseGeometry,
    chart: &InducedChart,
    x: &[f64],
    y: &[f64],
) -> Result<CurvatureIdentity> {
    let transverse = geometry.transverse_curvature(x, y)?;
    Ok(CurvatureIdentity {
        transverse,
        rigged: chart.rigged_curvature(x, y)?,
        domega: chart.domega(x, y),
        ambient: geometry.frame().geometry().sectional(x, y)?,
    })
}

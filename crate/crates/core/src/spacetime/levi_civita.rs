use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::jets::Jet3;

/// Ratio of extreme singular values below which a metric matrix counts as
/// singular.
const SINGULAR_RATIO: f64 = 1e-12;

pub(crate) fn value_matrix(n: usize, m: &[Jet3]) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| m[i * n + j].value())
}

fn checked_inverse(a: &DMatrix<f64>, point: &[f64]) -> Result<DMatrix<f64>> {
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(max.is_finite() && min > SINGULAR_RATIO * max) {
        return Err(Error::SingularMetric {
            point: point.to_vec(),
        });
    }
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularMetric {
            point: point.to_vec(),
        })
}

fn mat_mul(n: usize, a: &[Jet3], b: &[Jet3]) -> Vec<Jet3> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = &a[i * n] * &b[j];
            for k in 1..n {
                acc += &(&a[i * n + k] * &b[k * n + j]);
            }
            out.push(acc);
        }
    }
    out
}

/// Inverse of a matrix of jets, by Newton iteration `X ← X(2I − GX)` from
/// the inverse of the value matrix. Each sweep doubles the number of
/// correct orders.
pub fn invert_jet_matrix(n: usize, g: &[Jet3], point: &[f64]) -> Result<Vec<Jet3>> {
    let nvars = g[0].nvars();
    let order = g.iter().map(Jet3::order).min().unwrap_or(0);
    let inv0 = checked_inverse(&value_matrix(n, g), point)?;
    let mut x: Vec<Jet3> = (0..n * n)
        .map(|k| Jet3::constant(nvars, order, inv0[(k / n, k % n)]))
        .collect();
    for _ in 0..3 {
        let gx = mat_mul(n, g, &x);
        let two_minus: Vec<Jet3> = gx
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let d = if k / n == k % n { 2.0 } else { 0.0 };
                (-e).add_scalar(d)
            })
            .collect();
        x = mat_mul(n, &x, &two_minus);
    }
    Ok(x)
}

/// Christoffel symbols `Γ^k_ij` (index `(k*n + i)*n + j`) at the base point
/// from first-order metric jets. Used on the hot path of the geodesic
/// right-hand side.
pub fn christoffel_values(n: usize, g: &[Jet3], point: &[f64]) -> Result<Vec<f64>> {
    let ginv = checked_inverse(&value_matrix(n, g), point)?;
    let dg = |i: usize, j: usize, l: usize| g[i * n + j].partial(&[l]);
    let mut lowered = vec![0.0; n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * (dg(j, l, i) + dg(i, l, j) - dg(i, j, l));
                lowered[(l * n + i) * n + j] = v;
                lowered[(l * n + j) * n + i] = v;
            }
        }
    }
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                gamma[(k * n + i) * n + j] = (0..n)
                    .map(|l| ginv[(k, l)] * lowered[(l * n + i) * n + j])
                    .sum();
            }
        }
    }
    Ok(gamma)
}

/// Levi-Civita connection of a metric given as jets in some chart, with
/// curvature at the base point.
///
/// Riemann storage: `R(∂_i, ∂_j)∂_k = Σ_l riemann[l][k][i][j] ∂_l` with
/// `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`.
#[derive(Debug, Clone)]
pub struct LeviCivita {
    n: usize,
    g: Vec<Jet3>,
    ginv: Vec<Jet3>,
    gamma: Vec<Jet3>,
    riemann: Option<Vec<f64>>,
}

impl LeviCivita {
    /// `g` is row-major `n×n`; its jets must have `n` variables and order at
    /// least 1. Curvature is available when the order is at least 2.
    pub fn from_metric(n: usize, g: Vec<Jet3>, point: &[f64]) -> Result<Self> {
        assert_eq!(g.len(), n * n);
        assert_eq!(
            g[0].nvars(),
            n,
            "metric jets must be taken in the chart variables"
        );
        let ginv = invert_jet_matrix(n, &g, point)?;
        let dg: Vec<Vec<Jet3>> = (0..n)
            .map(|l| g.iter().map(|e| e.derivative(l)).collect())
            .collect();
        let d = |i: usize, j: usize, l: usize| &dg[l][i * n + j];
        let mut lowered = Vec::with_capacity(n * n * n);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    lowered.push((d(j, l, i) + d(i, l, j) - d(i, j, l)).scale(0.5));
                }
            }
        }
        let mut gamma = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = &ginv[k * n] * &lowered[i * n + j];
                    for l in 1..n {
                        acc += &(&ginv[k * n + l] * &lowered[(l * n + i) * n + j]);
                    }
                    gamma.push(acc);
                }
            }
        }
        let mut lc = LeviCivita {
            n,
            g,
            ginv,
            gamma,
            riemann: None,
        };
        if lc.gamma[0].order() >= 1 {
            lc.riemann = Some(lc.compute_riemann());
        }
        Ok(lc)
    }

    fn compute_riemann(&self) -> Vec<f64> {
        let n = self.n;
        let gv = |k: usize, i: usize, j: usize| self.gamma[(k * n + i) * n + j].value();
        let dgam =
            |k: usize, i: usize, j: usize, v: usize| self.gamma[(k * n + i) * n + j].partial(&[v]);
        let mut r = vec![0.0; n * n * n * n];
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut v = dgam(l, j, k, i) - dgam(l, i, k, j);
                        for m in 0..n {
                            v += gv(l, i, m) * gv(m, j, k) - gv(l, j, m) * gv(m, i, k);
                        }
                        r[((l * n + k) * n + i) * n + j] = v;
                    }
                }
            }
        }
        r
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn metric_jets(&self) -> &[Jet3] {
        &self.g
    }

    pub fn inverse_metric_jets(&self) -> &[Jet3] {
        &self.ginv
    }

    pub fn metric_matrix(&self) -> DMatrix<f64> {
        value_matrix(self.n, &self.g)
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.g[i * n + j].value() * u[i] * v[j];
            }
        }
        s
    }

    /// `g(u, ·)` as a covector.
    pub fn lower(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.g[i * n + j].value() * u[i]).sum())
            .collect()
    }

    /// `Γ^k_ij` as a jet.
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> &Jet3 {
        &self.gamma[(k * self.n + i) * self.n + j]
    }

    pub fn christoffel_values(&self) -> Vec<f64> {
        self.gamma.iter().map(Jet3::value).collect()
    }

    pub fn riemann(&self) -> &[f64] {
        self.riemann
            .as_deref()
            .expect("curvature needs metric jets of order 2 or more")
    }

    /// `R(x, y) z`.
    pub fn curvature_vector(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let r = self.riemann();
        let mut out = vec![0.0; n];
        for (l, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in 0..n {
                if z[k] == 0.0 {
                    continue;
                }
                for i in 0..n {
                    if x[i] == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        s += r[((l * n + k) * n + i) * n + j] * x[i] * y[j] * z[k];
                    }
                }
            }
            *o = s;
        }
        out
    }

    /// `g(R(x, y) z, w)`.
    pub fn curvature_form(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        self.inner(&self.curvature_vector(x, y, z), w)
    }

    /// `Ric_jk` with `Ric(X, Y) = tr(Z ↦ R(Z, X) Y)`.
    pub fn ricci_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let r = self.riemann();
        DMatrix::from_fn(n, n, |j, k| {
            (0..n).map(|i| r[((i * n + k) * n + i) * n + j]).sum()
        })
    }

    pub fn ricci(&self, x: &[f64], y: &[f64]) -> f64 {
        let ric = self.ricci_matrix();
        let n = self.n;
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                s += ric[(j, k)] * x[j] * y[k];
            }
        }
        s
    }

    pub fn sectional(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let den = self.inner(u, u) * self.inner(v, v) - self.inner(u, v).powi(2);
        if den.abs() < 1e-10 {
            return Err(Error::DegeneratePlane(den));
        }
        Ok(self.curvature_form(u, v, v, u) / den)
    }

    /// `∇_u Y` for a constant direction `u` and a vector field `Y` given as
    /// jets.
    pub fn covariant_derivative(&self, u: &[f64], y: &[Jet3]) -> Vec<Jet3> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut acc = y[k].directional(u);
                for i in 0..n {
                    if u[i] == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        acc += &(self.gamma(k, i, j) * &y[j]).scale(u[i]);
                    }
                }
                acc
            })
            .collect()
    }

    /// `∇_X Y` for vector fields given as jets.
    pub fn nabla(&self, x: &[Jet3], y: &[Jet3]) -> Vec<Jet3> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut acc = &x[0] * &y[k].derivative(0);
                for i in 1..n {
                    acc += &(&x[i] * &y[k].derivative(i));
                }
                for i in 0..n {
                    for j in 0..n {
                        acc += &(&(self.gamma(k, i, j) * &x[i]) * &y[j]);
                    }
                }
                acc
            })
            .collect()
    }

    /// `g(X, Y)` for fields given as jets.
    pub fn inner_jets(&self, x: &[Jet3], y: &[Jet3]) -> Jet3 {
        let n = self.n;
        let mut acc: Option<Jet3> = None;
        for i in 0..n {
            let gy = {
                let mut s = &self.g[i * n] * &y[0];
                for j in 1..n {
                    s += &(&self.g[i * n + j] * &y[j]);
                }
                s
            };
            let term = &x[i] * &gy;
            acc = Some(match acc {
                None => term,
                Some(mut a) => {
                    a += &term;
                    a
                }
            });
        }
        acc.expect("dimension is positive")
    }
}

/// Lie bracket `[X, Y]^k = X^i ∂_i Y^k − Y^i ∂_i X^k` of fields given as jets.
pub fn bracket(x: &[Jet3], y: &[Jet3]) -> Vec<Jet3> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut acc = &x[0] * &y[k].derivative(0) - &y[0] * &x[k].derivative(0);
            for i in 1..n {
                acc += &(&x[i] * &y[k].derivative(i));
                acc -= &(&y[i] * &x[k].derivative(i));
            }
            acc
        })
        .collect()
}

/// Values of a field of jets at the base point.
pub fn values(v: &[Jet3]) -> Vec<f64> {
    v.iter().map(Jet3::value).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar_metric(r: f64) -> LeviCivita {
        // dr² + r² dθ²
        let rj = Jet3::variable(2, 3, 0, r);
        let g = vec![
            Jet3::constant(2, 3, 1.0),
            Jet3::constant(2, 3, 0.0),
            Jet3::constant(2, 3, 0.0),
            &rj * &rj,
        ];
        LeviCivita::from_metric(2, g, &[r, 0.0]).unwrap()
    }

    #[test]
    fn polar_christoffels_match_hand_values() {
        let lc = polar_metric(2.0);
        assert!((lc.gamma(0, 1, 1).value() + 2.0).abs() < 1e-14);
        assert!((lc.gamma(1, 0, 1).value() - 0.5).abs() < 1e-14);
        assert!((lc.gamma(1, 1, 0).value() - 0.5).abs() < 1e-14);
        assert!(lc.gamma(0, 0, 0).value().abs() < 1e-14);
    }

    #[test]
    fn flat_plane_in_polar_coordinates_has_no_curvature() {
        let lc = polar_metric(1.3);
        assert!(lc.riemann().iter().all(|r| r.abs() < 1e-12));
        let fast = christoffel_values(2, lc.metric_jets(), &[1.3, 0.0]).unwrap();
        for (a, b) in fast.iter().zip(lc.christoffel_values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn round_sphere_has_unit_curvature() {
        // dθ² + sin²θ dφ²
        let th = Jet3::variable(2, 3, 0, 0.9);
        let s = th.compose([0.9f64.sin(), 0.9f64.cos(), -0.9f64.sin(), -0.9f64.cos()]);
        let g = vec![
            Jet3::constant(2, 3, 1.0),
            Jet3::constant(2, 3, 0.0),
            Jet3::constant(2, 3, 0.0),
            &s * &s,
        ];
        let lc = LeviCivita::from_metric(2, g, &[0.9, 0.0]).unwrap();
        let k = lc.sectional(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
        let ric = lc.ricci_matrix();
        assert!((ric[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jet_inverse_matches_series() {
        let x = Jet3::variable(1, 3, 0, 0.0);
        let g = vec![x.add_scalar(1.0)];
        let inv = invert_jet_matrix(1, &g, &[0.0]).unwrap();
        let expect = [1.0, -1.0, 1.0, -1.0];
        for (k, e) in expect.iter().enumerate() {
            assert!((inv[0].coeff(&vec![0; k]) - e).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_metric_is_rejected() {
        let g = vec![Jet3::constant(1, 3, 0.0)];
        assert!(matches!(
            LeviCivita::from_metric(1, g, &[0.0]),
            Err(Error::SingularMetric { .. })
        ));
    }
}

//! Multivariate truncated Taylor arithmetic to total order 3.
//!
//! A [`Jet3`] holds the Taylor coefficients `c_α` of a scalar function of
//! `n` variables around a base point, for every multi-index `α` with
//! `|α| ≤ 3`:
//!
//! ```text
//! f(p + h) ≈ Σ_α c_α h^α
//! ```
//!
//! Coefficients are stored densely, one slot per monomial (graded order:
//! the constant, then `h_i`, then `h_i h_j` with `i ≤ j`, then
//! `h_i h_j h_k` with `i ≤ j ≤ k`), so the mixed-partial symmetry is a
//! property of the storage rather than something that has to be enforced.
//!
//! Jets also carry a *truncation order* `≤ 3`. Taking a partial derivative
//! lowers the order by one, and binary operations truncate to the smaller
//! order of their operands. This lets Christoffel symbols (order 2) and
//! curvature (order 0) be computed from order-3 metric data with the same
//! arithmetic and without ever inventing coefficients that were not known.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use thiserror::Error;

/// Highest supported truncation order.
pub const MAX_ORDER: u8 = 3;
/// Highest supported number of variables.
pub const MAX_VARS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet dimension mismatch: {left} vs {right} variables")]
    DimensionMismatch { left: usize, right: usize },
    #[error("division by a jet with zero value")]
    DivisionByZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Monomial {
    vars: [u8; 3],
    degree: u8,
}

impl Monomial {
    fn var_slice(&self) -> &[u8] {
        &self.vars[..self.degree as usize]
    }

    /// Product of `α!` over the multiplicities, i.e. the factor relating the
    /// Taylor coefficient to the partial derivative.
    fn factorial_weight(&self) -> f64 {
        let v = self.var_slice();
        match v.len() {
            0 | 1 => 1.0,
            2 => {
                if v[0] == v[1] {
                    2.0
                } else {
                    1.0
                }
            }
            _ => {
                if v[0] == v[2] {
                    6.0
                } else if v[0] == v[1] || v[1] == v[2] {
                    2.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// Monomial tables for a fixed variable count.
struct Basis {
    nvars: usize,
    monomials: Vec<Monomial>,
    /// `len_for_order[d]` = number of monomials of degree `≤ d`.
    len_for_order: [usize; 4],
    idx2: Vec<u16>,
    idx3: Vec<u16>,
    /// `(a, b, target)` with `deg a + deg b = deg target ≤ 3`, sorted by
    /// target degree.
    products: Vec<(u16, u16, u16)>,
    /// `products_end[d]` = number of product entries with target degree `≤ d`.
    products_end: [usize; 4],
    /// Per variable: `(source, destination, multiplicity)` for `∂/∂x_i`.
    derivs: Vec<Vec<(u16, u16, f64)>>,
}

impl Basis {
    fn new(nvars: usize) -> Self {
        let n = nvars;
        let mut monomials = vec![Monomial {
            vars: [0; 3],
            degree: 0,
        }];
        let mut len_for_order = [1usize; 4];
        for i in 0..n {
            monomials.push(Monomial {
                vars: [i as u8, 0, 0],
                degree: 1,
            });
        }
        len_for_order[1] = monomials.len();
        let mut idx2 = vec![0u16; n * n];
        for i in 0..n {
            for j in i..n {
                let k = monomials.len() as u16;
                idx2[i * n + j] = k;
                idx2[j * n + i] = k;
                monomials.push(Monomial {
                    vars: [i as u8, j as u8, 0],
                    degree: 2,
                });
            }
        }
        len_for_order[2] = monomials.len();
        let mut idx3 = vec![0u16; n * n * n];
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let m = monomials.len() as u16;
                    for (a, b, c) in [
                        (i, j, k),
                        (i, k, j),
                        (j, i, k),
                        (j, k, i),
                        (k, i, j),
                        (k, j, i),
                    ] {
                        idx3[(a * n + b) * n + c] = m;
                    }
                    monomials.push(Monomial {
                        vars: [i as u8, j as u8, k as u8],
                        degree: 3,
                    });
                }
            }
        }
        len_for_order[3] = monomials.len();

        let mut basis = Basis {
            nvars,
            monomials,
            len_for_order,
            idx2,
            idx3,
            products: Vec::new(),
            products_end: [0; 4],
            derivs: vec![Vec::new(); n],
        };

        let mut products = Vec::new();
        let mut products_end = [0usize; 4];
        for target_degree in 0..=3u8 {
            for (a, ma) in basis.monomials.iter().enumerate() {
                for (b, mb) in basis.monomials.iter().enumerate() {
                    if ma.degree + mb.degree != target_degree {
                        continue;
                    }
                    let mut vars: Vec<u8> = ma.var_slice().to_vec();
                    vars.extend_from_slice(mb.var_slice());
                    let t = basis.index_of(&vars);
                    products.push((a as u16, b as u16, t as u16));
                }
            }
            products_end[target_degree as usize] = products.len();
        }
        basis.products = products;
        basis.products_end = products_end;

        let mut derivs = vec![Vec::new(); n];
        for (src, m) in basis.monomials.iter().enumerate() {
            let v = m.var_slice();
            for (i, d) in derivs.iter_mut().enumerate() {
                let mult = v.iter().filter(|&&x| x as usize == i).count();
                if mult == 0 {
                    continue;
                }
                let mut rest: Vec<u8> = v.to_vec();
                let pos = rest.iter().position(|&x| x as usize == i).unwrap();
                rest.remove(pos);
                let dst = basis.index_of(&rest);
                d.push((src as u16, dst as u16, mult as f64));
            }
        }
        basis.derivs = derivs;
        basis
    }

    fn index_of(&self, vars: &[u8]) -> usize {
        let n = self.nvars;
        match vars.len() {
            0 => 0,
            1 => 1 + vars[0] as usize,
            2 => self.idx2[vars[0] as usize * n + vars[1] as usize] as usize,
            3 => {
                self.idx3[(vars[0] as usize * n + vars[1] as usize) * n + vars[2] as usize] as usize
            }
            _ => unreachable!("degree above 3"),
        }
    }

    fn len(&self) -> usize {
        self.len_for_order[3]
    }
}

fn basis(nvars: usize) -> &'static Basis {
    static TABLES: [OnceLock<Basis>; MAX_VARS + 1] = [const { OnceLock::new() }; MAX_VARS + 1];
    assert!(
        nvars <= MAX_VARS,
        "jets support at most {MAX_VARS} variables"
    );
    TABLES[nvars].get_or_init(|| Basis::new(nvars))
}

/// Number of Taylor coefficients of a jet of total order 3 in `n` variables,
/// `C(n + 3, 3)`.
pub fn coefficient_count(nvars: usize) -> usize {
    basis(nvars).len()
}

/// Truncated Taylor expansion of a scalar to total order `≤ 3`.
#[derive(Clone, PartialEq)]
pub struct Jet3 {
    nvars: u8,
    order: u8,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet3")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .field("coeffs", &&self.coeffs[..self.active_len()])
            .finish()
    }
}

impl Jet3 {
    pub fn constant(nvars: usize, order: u8, value: f64) -> Self {
        assert!(order <= MAX_ORDER);
        let mut coeffs = vec![0.0; basis(nvars).len()];
        coeffs[0] = value;
        Jet3 {
            nvars: nvars as u8,
            order,
            coeffs,
        }
    }

    /// The jet of the coordinate function `x_var` at a point where it has
    /// value `value`.
    pub fn variable(nvars: usize, order: u8, var: usize, value: f64) -> Self {
        assert!(var < nvars);
        let mut j = Jet3::constant(nvars, order, value);
        if order >= 1 {
            j.coeffs[1 + var] = 1.0;
        }
        j
    }

    /// Builds a jet from Taylor coefficients in graded monomial order.
    /// Missing trailing coefficients are zero; coefficients beyond `order`
    /// are discarded.
    pub fn from_coefficients(nvars: usize, order: u8, coefficients: &[f64]) -> Self {
        let mut j = Jet3::constant(nvars, order, 0.0);
        let keep = j.active_len().min(coefficients.len());
        j.coeffs[..keep].copy_from_slice(&coefficients[..keep]);
        j
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// All stored coefficients (graded order, length `C(n+3,3)`).
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    fn basis(&self) -> &'static Basis {
        basis(self.nvars as usize)
    }

    fn active_len(&self) -> usize {
        self.basis().len_for_order[self.order as usize]
    }

    /// Taylor coefficient of the monomial `Π h_vars[i]`.
    pub fn coeff(&self, vars: &[usize]) -> f64 {
        if vars.len() > self.order as usize {
            return 0.0;
        }
        let v: Vec<u8> = vars.iter().map(|&i| i as u8).collect();
        self.coeffs[self.basis().index_of(&v)]
    }

    /// Partial derivative `∂^{|vars|} f / ∂x_vars[0] ...` at the base point.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        if vars.len() > self.order as usize {
            return 0.0;
        }
        let b = self.basis();
        let v: Vec<u8> = vars.iter().map(|&i| i as u8).collect();
        let idx = b.index_of(&v);
        self.coeffs[idx] * b.monomials[idx].factorial_weight()
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.nvars()).map(|i| self.partial(&[i])).collect()
    }

    /// Drops coefficients above `order`.
    pub fn truncate(&self, order: u8) -> Jet3 {
        let order = order.min(self.order);
        let mut out = self.clone();
        let keep = self.basis().len_for_order[order as usize];
        for c in &mut out.coeffs[keep..] {
            *c = 0.0;
        }
        out.order = order;
        out
    }

    fn check_dims(&self, other: &Jet3) -> Result<(), JetError> {
        if self.nvars != other.nvars {
            Err(JetError::DimensionMismatch {
                left: self.nvars(),
                right: other.nvars(),
            })
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &Jet3) -> Result<Jet3, JetError> {
        self.check_dims(other)?;
        let order = self.order.min(other.order);
        let len = self.basis().len_for_order[order as usize];
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for i in 0..len {
            coeffs[i] = self.coeffs[i] + other.coeffs[i];
        }
        Ok(Jet3 {
            nvars: self.nvars,
            order,
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Jet3) -> Result<Jet3, JetError> {
        self.check_dims(other)?;
        let order = self.order.min(other.order);
        let len = self.basis().len_for_order[order as usize];
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for i in 0..len {
            coeffs[i] = self.coeffs[i] - other.coeffs[i];
        }
        Ok(Jet3 {
            nvars: self.nvars,
            order,
            coeffs,
        })
    }

    /// Truncated product.
    pub fn try_mul(&self, other: &Jet3) -> Result<Jet3, JetError> {
        self.check_dims(other)?;
        let b = self.basis();
        let order = self.order.min(other.order);
        let mut coeffs = vec![0.0; self.coeffs.len()];
        // The constant term is written first so the value is exactly a0*b0.
        for &(x, y, t) in &b.products[..b.products_end[order as usize]] {
            let (x, y, t) = (x as usize, y as usize, t as usize);
            let ax = self.coeffs[x];
            let by = other.coeffs[y];
            if ax != 0.0 && by != 0.0 {
                coeffs[t] += ax * by;
            }
        }
        if self.coeffs[0] == 0.0 || other.coeffs[0] == 0.0 {
            coeffs[0] = self.coeffs[0] * other.coeffs[0];
        }
        Ok(Jet3 {
            nvars: self.nvars,
            order,
            coeffs,
        })
    }

    fn quotient_unchecked(&self, other: &Jet3) -> Jet3 {
        let b = self.basis();
        let order = self.order.min(other.order);
        let b0 = other.coeffs[0];
        let mut q = vec![0.0; self.coeffs.len()];
        q[0] = self.coeffs[0] / b0;
        let mut acc = vec![0.0; self.coeffs.len()];
        // Products are sorted by target degree, and every entry with a
        // non-constant divisor factor only reads quotient coefficients of
        // strictly lower degree, so one ordered sweep per degree suffices.
        for degree in 1..=order as usize {
            let start = b.products_end[degree - 1];
            let end = b.products_end[degree];
            for &(x, y, t) in &b.products[start..end] {
                let (x, y, t) = (x as usize, y as usize, t as usize);
                if x == 0 {
                    continue;
                }
                acc[t] += other.coeffs[x] * q[y];
            }
            for t in b.len_for_order[degree - 1]..b.len_for_order[degree] {
                q[t] = (self.coeffs[t] - acc[t]) / b0;
            }
        }
        Jet3 {
            nvars: self.nvars,
            order,
            coeffs: q,
        }
    }

    /// Truncated quotient; fails when the divisor's value is zero.
    pub fn try_div(&self, other: &Jet3) -> Result<Jet3, JetError> {
        self.check_dims(other)?;
        if other.coeffs[0] == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        Ok(self.quotient_unchecked(other))
    }

    pub fn scale(&self, s: f64) -> Jet3 {
        let len = self.active_len();
        let mut out = self.clone();
        for c in &mut out.coeffs[..len] {
            *c *= s;
        }
        out
    }

    pub fn add_scalar(&self, s: f64) -> Jet3 {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Composes a univariate function with this jet (Faà di Bruno through
    /// order 3). `rule` holds `f, f′, f″, f‴` evaluated at `self.value()`.
    pub fn compose(&self, rule: [f64; 4]) -> Jet3 {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut out = Jet3::constant(self.nvars(), self.order, rule[0]);
        if self.order == 0 {
            return out;
        }
        if rule[1] != 0.0 {
            out += &h.scale(rule[1]);
        }
        if self.order >= 2 {
            let h2 = &h * &h;
            if rule[2] != 0.0 {
                out += &h2.scale(rule[2] / 2.0);
            }
            if self.order >= 3 && rule[3] != 0.0 {
                let h3 = &h2 * &h;
                out += &h3.scale(rule[3] / 6.0);
            }
        }
        out.coeffs[0] = rule[0];
        out
    }

    /// `self^k` for integer `k`.
    pub fn powi(&self, k: i32) -> Result<Jet3, JetError> {
        let x = self.value();
        if k < 0 && x == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        Ok(self.compose(power_rule_int(x, k)))
    }

    /// `∂/∂x_var`; the result has order one lower.
    pub fn derivative(&self, var: usize) -> Jet3 {
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        assert!(var < self.nvars());
        let b = self.basis();
        let order = self.order - 1;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        let limit = b.len_for_order[self.order as usize];
        for &(src, dst, mult) in &b.derivs[var] {
            let src = src as usize;
            if src >= limit {
                continue;
            }
            coeffs[dst as usize] += mult * self.coeffs[src];
        }
        Jet3 {
            nvars: self.nvars,
            order,
            coeffs,
        }
    }

    /// Directional derivative `Σ v_i ∂_i` with constant coefficients.
    pub fn directional(&self, v: &[f64]) -> Jet3 {
        assert_eq!(v.len(), self.nvars());
        assert!(self.order > 0, "cannot differentiate an order-0 jet");
        let b = self.basis();
        let order = self.order - 1;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        let limit = b.len_for_order[self.order as usize];
        for (var, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for &(src, dst, mult) in &b.derivs[var] {
                let src = src as usize;
                if src >= limit {
                    continue;
                }
                coeffs[dst as usize] += vi * mult * self.coeffs[src];
            }
        }
        Jet3 {
            nvars: self.nvars,
            order,
            coeffs,
        }
    }

    /// Value of the directional derivative at the base point.
    pub fn directional_value(&self, v: &[f64]) -> f64 {
        if self.order == 0 {
            return 0.0;
        }
        v.iter()
            .enumerate()
            .map(|(i, &vi)| vi * self.coeffs[1 + i])
            .sum()
    }

    /// Largest absolute difference between active coefficients.
    pub fn max_abs_diff(&self, other: &Jet3) -> f64 {
        let order = self.order.min(other.order);
        let len = self.basis().len_for_order[order as usize];
        (0..len)
            .map(|i| (self.coeffs[i] - other.coeffs[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// `x^k, k x^{k-1}, ...` with coefficients that vanish identically kept at
/// exactly zero (avoids `0 * inf`).
pub(crate) fn power_rule_int(x: f64, k: i32) -> [f64; 4] {
    let kf = k as f64;
    let c = [1.0, kf, kf * (kf - 1.0), kf * (kf - 1.0) * (kf - 2.0)];
    let mut r = [0.0; 4];
    for (d, rd) in r.iter_mut().enumerate() {
        if c[d] != 0.0 {
            *rd = c[d] * x.powi(k - d as i32);
        }
    }
    r
}

/// Rule for `x^(p/q)` with `x > 0`.
pub(crate) fn power_rule_rational(x: f64, exponent: f64) -> [f64; 4] {
    let e = exponent;
    let c = [1.0, e, e * (e - 1.0), e * (e - 1.0) * (e - 2.0)];
    let mut r = [0.0; 4];
    for (d, rd) in r.iter_mut().enumerate() {
        if c[d] != 0.0 {
            *rd = c[d] * x.powf(e - d as f64);
        }
    }
    r
}

impl AddAssign<&Jet3> for Jet3 {
    fn add_assign(&mut self, rhs: &Jet3) {
        assert_eq!(self.nvars, rhs.nvars, "jet dimension mismatch");
        self.order = self.order.min(rhs.order);
        let len = self.active_len();
        for i in 0..len {
            self.coeffs[i] += rhs.coeffs[i];
        }
        for c in &mut self.coeffs[len..] {
            *c = 0.0;
        }
    }
}

impl SubAssign<&Jet3> for Jet3 {
    fn sub_assign(&mut self, rhs: &Jet3) {
        assert_eq!(self.nvars, rhs.nvars, "jet dimension mismatch");
        self.order = self.order.min(rhs.order);
        let len = self.active_len();
        for i in 0..len {
            self.coeffs[i] -= rhs.coeffs[i];
        }
        for c in &mut self.coeffs[len..] {
            *c = 0.0;
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&Jet3> for &Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: &Jet3) -> Jet3 {
                self.$checked(rhs).expect("jet dimension mismatch")
            }
        }
        impl $trait<Jet3> for Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: Jet3) -> Jet3 {
                (&self).$checked(&rhs).expect("jet dimension mismatch")
            }
        }
        impl $trait<&Jet3> for Jet3 {
            type Output = Jet3;
            fn $method(self, rhs: &Jet3) -> Jet3 {
                (&self).$checked(rhs).expect("jet dimension mismatch")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Div<&Jet3> for &Jet3 {
    type Output = Jet3;
    /// Follows `f64` semantics for a zero divisor; use [`Jet3::try_div`] to
    /// get an error instead.
    fn div(self, rhs: &Jet3) -> Jet3 {
        self.check_dims(rhs).expect("jet dimension mismatch");
        self.quotient_unchecked(rhs)
    }
}

impl Div<Jet3> for Jet3 {
    type Output = Jet3;
    fn div(self, rhs: Jet3) -> Jet3 {
        &self / &rhs
    }
}

impl Mul<f64> for &Jet3 {
    type Output = Jet3;
    fn mul(self, rhs: f64) -> Jet3 {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet3 {
    type Output = Jet3;
    fn mul(self, rhs: f64) -> Jet3 {
        self.scale(rhs)
    }
}

impl Neg for &Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        let len = self.active_len();
        let mut out = self.clone();
        for c in &mut out.coeffs[..len] {
            *c = -*c;
        }
        out
    }
}

impl Neg for Jet3 {
    type Output = Jet3;
    fn neg(self) -> Jet3 {
        -&self
    }
}

/// Sum of products `Σ a_i b_i` of jets.
pub fn dot(a: &[Jet3], b: &[Jet3]) -> Jet3 {
    assert_eq!(a.len(), b.len());
    assert!(!a.is_empty());
    let mut acc = &a[0] * &b[0];
    for (x, y) in a.iter().zip(b).skip(1) {
        acc += &(x * y);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_count_matches_binomial() {
        for n in 1..=6 {
            let expected = (n + 1) * (n + 2) * (n + 3) / 6;
            assert_eq!(coefficient_count(n), expected);
        }
    }

    #[test]
    fn product_of_two_variables() {
        let x = Jet3::variable(2, 3, 0, 1.0);
        let y = Jet3::variable(2, 3, 1, 1.0);
        let p = &x * &y;
        assert_eq!(p.value(), 1.0);
        assert_eq!(p.partial(&[0, 1]), 1.0);
        assert_eq!(p.partial(&[1, 0]), 1.0);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(p.partial(&[i, j, k]), 0.0);
                }
            }
        }
    }

    #[test]
    fn geometric_series_from_division() {
        let one = Jet3::constant(1, 3, 1.0);
        let x = Jet3::variable(1, 3, 0, 0.0);
        let q = one.try_div(&(&one + &x)).unwrap();
        assert_eq!(q.coeff(&[]), 1.0);
        assert_eq!(q.coeff(&[0]), -1.0);
        assert_eq!(q.coeff(&[0, 0]), 1.0);
        assert_eq!(q.coeff(&[0, 0, 0]), -1.0);
    }

    #[test]
    fn division_by_zero_value_is_an_error() {
        let x = Jet3::variable(1, 3, 0, 0.0);
        assert_eq!(x.try_div(&x), Err(JetError::DivisionByZero));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = Jet3::constant(2, 3, 1.0);
        let b = Jet3::constant(3, 3, 1.0);
        assert!(matches!(
            a.try_mul(&b),
            Err(JetError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn exp_of_constant_is_constant() {
        let c = Jet3::constant(3, 3, 0.7);
        let e = c.compose([0.7f64.exp(); 4]);
        assert_eq!(e.value(), 0.7f64.exp());
        assert!(e.coefficients()[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_series_third_coefficient() {
        let x = Jet3::variable(1, 3, 0, 0.0);
        let s = x.compose([0.0, 1.0, 0.0, -1.0]);
        assert!((s.coeff(&[0, 0, 0]) + 1.0 / 6.0).abs() < 1e-15);
    }

    /// Series oracle: log(1+x+x²) by term-wise expansion of log(1+u) with
    /// u = x + x², collecting powers of x by hand-rolled polynomial algebra.
    #[test]
    fn log_composition_matches_series() {
        fn polymul(a: &[f64], b: &[f64]) -> Vec<f64> {
            let mut out = vec![0.0; 4];
            for i in 0..4 {
                for j in 0..4 - i {
                    out[i + j] += a[i] * b[j];
                }
            }
            out
        }
        let u = [0.0, 1.0, 1.0, 0.0];
        let u2 = polymul(&u, &u);
        let u3 = polymul(&u2, &u);
        let series: Vec<f64> = (0..4).map(|k| u[k] - u2[k] / 2.0 + u3[k] / 3.0).collect();

        let x = Jet3::variable(1, 3, 0, 0.0);
        let a = (&x + &(&x * &x)).add_scalar(1.0);
        let v = a.value();
        let l = a.compose([v.ln(), 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)]);
        for k in 0..4 {
            let idx = vec![0; k];
            assert!((l.coeff(&idx) - series[k]).abs() < 1e-15, "order {k}");
        }
    }

    #[test]
    fn derivative_lowers_order() {
        let x = Jet3::variable(2, 3, 0, 2.0);
        let y = Jet3::variable(2, 3, 1, 3.0);
        // f = x^2 y
        let f = &(&x * &x) * &y;
        let fx = f.derivative(0);
        assert_eq!(fx.order(), 2);
        assert_eq!(fx.value(), 12.0);
        assert_eq!(fx.partial(&[0]), 6.0);
        assert_eq!(fx.partial(&[1]), 4.0);
        assert_eq!(fx.partial(&[0, 1]), 2.0);
        let fxx = fx.derivative(0);
        assert_eq!(fxx.value(), 6.0);
        assert_eq!(fxx.partial(&[1]), 2.0);
    }

    #[test]
    fn truncation_follows_lowest_order() {
        let a = Jet3::variable(2, 3, 0, 1.0);
        let b = Jet3::variable(2, 1, 1, 1.0);
        assert_eq!((&a * &b).order(), 1);
        assert_eq!((&a + &b).order(), 1);
    }

    #[test]
    fn integer_power_of_polynomial_is_exact() {
        let x = Jet3::variable(1, 3, 0, 3.0);
        let c = x.powi(3).unwrap();
        assert_eq!(c.value(), 27.0);
        assert_eq!(c.partial(&[0]), 27.0);
        assert_eq!(c.partial(&[0, 0]), 18.0);
        assert_eq!(c.partial(&[0, 0, 0]), 6.0);
    }
}

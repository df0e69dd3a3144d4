use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{BinOp, Expr};
use crate::jets::{power_rule_int, power_rule_rational, Jet3, MAX_ORDER};

/// Order-3 derivative rule for a univariate function: given `x` and the
/// jet order being evaluated, returns `f(x), f′(x), f″(x), f‴(x)` or a
/// domain complaint.
pub type RuleFn = fn(x: f64, order: u8) -> Result<[f64; 4], &'static str>;

#[derive(Clone, Copy)]
pub struct FunctionRule {
    pub name: &'static str,
    pub rule: RuleFn,
}

impl fmt::Debug for FunctionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FunctionRule({})", self.name)
    }
}

fn sin_rule(x: f64, _: u8) -> Result<[f64; 4], &'static str> {
    let (s, c) = x.sin_cos();
    Ok([x.sin(), c, -s, -c])
}

fn cos_rule(x: f64, _: u8) -> Result<[f64; 4], &'static str> {
    let (s, c) = x.sin_cos();
    Ok([x.cos(), -s, -c, s])
}

fn exp_rule(x: f64, _: u8) -> Result<[f64; 4], &'static str> {
    let e = x.exp();
    Ok([e; 4])
}

fn log_rule(x: f64, _: u8) -> Result<[f64; 4], &'static str> {
    if x <= 0.0 {
        return Err("log of a non-positive value");
    }
    Ok([x.ln(), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)])
}

fn sqrt_rule(x: f64, order: u8) -> Result<[f64; 4], &'static str> {
    if x < 0.0 {
        return Err("sqrt of a negative value");
    }
    let s = x.sqrt();
    if order == 0 {
        return Ok([s, 0.0, 0.0, 0.0]);
    }
    if x == 0.0 {
        return Err("sqrt is not differentiable at zero");
    }
    Ok([s, 0.5 / s, -0.25 / (s * x), 0.375 / (s * x * x)])
}

fn tanh_rule(x: f64, _: u8) -> Result<[f64; 4], &'static str> {
    let t = x.tanh();
    let d = 1.0 - t * t;
    Ok([t, d, -2.0 * t * d, (6.0 * t * t - 2.0) * d])
}

/// Functions callable from expressions, keyed by name.
#[derive(Debug, Clone)]
pub struct FunctionRegistry {
    rules: BTreeMap<String, FunctionRule>,
}

impl Default for FunctionRegistry {
    fn default() -> Self {
        let mut r = FunctionRegistry {
            rules: BTreeMap::new(),
        };
        for rule in [
            FunctionRule {
                name: "sin",
                rule: sin_rule,
            },
            FunctionRule {
                name: "cos",
                rule: cos_rule,
            },
            FunctionRule {
                name: "exp",
                rule: exp_rule,
            },
            FunctionRule {
                name: "log",
                rule: log_rule,
            },
            FunctionRule {
                name: "sqrt",
                rule: sqrt_rule,
            },
            FunctionRule {
                name: "tanh",
                rule: tanh_rule,
            },
        ] {
            r.register(rule);
        }
        r
    }
}

impl FunctionRegistry {
    pub fn register(&mut self, rule: FunctionRule) {
        self.rules.insert(rule.name.to_string(), rule);
    }

    pub fn get(&self, name: &str) -> Option<FunctionRule> {
        self.rules.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindError {
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
}

/// Evaluation failed inside the domain of a subexpression.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{reason} in `{subexpression}`")]
pub struct DomainError {
    pub subexpression: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>, String),
    PowInt(Box<Node>, i32, String),
    PowRational(Box<Node>, f64, String),
    Call(FunctionRule, Box<Node>, String),
}

/// An expression with identifiers resolved to coordinate slots and function
/// names resolved to rules. Evaluation is pure, so one value can be shared
/// across threads.
#[derive(Debug, Clone)]
pub struct BoundExpr {
    root: Node,
    source: Expr,
}

impl BoundExpr {
    pub fn bind(
        expr: &Expr,
        coordinates: &[String],
        registry: &FunctionRegistry,
    ) -> Result<Self, BindError> {
        fn go(e: &Expr, coords: &[String], reg: &FunctionRegistry) -> Result<Node, BindError> {
            Ok(match e {
                Expr::Number { value, .. } => Node::Const(*value),
                Expr::Var(name) => Node::Var(
                    coords
                        .iter()
                        .position(|c| c == name)
                        .ok_or_else(|| BindError::UnknownIdentifier(name.clone()))?,
                ),
                Expr::Neg(a) => Node::Neg(Box::new(go(a, coords, reg)?)),
                Expr::Binary(op, a, b) => {
                    let (a, b) = (Box::new(go(a, coords, reg)?), Box::new(go(b, coords, reg)?));
                    match op {
                        BinOp::Add => Node::Add(a, b),
                        BinOp::Sub => Node::Sub(a, b),
                        BinOp::Mul => Node::Mul(a, b),
                        BinOp::Div => Node::Div(a, b, e.to_string()),
                    }
                }
                Expr::Pow(a, exp) => {
                    let base = Box::new(go(a, coords, reg)?);
                    if exp.is_integer() {
                        Node::PowInt(base, exp.numerator as i32, e.to_string())
                    } else {
                        Node::PowRational(base, exp.as_f64(), e.to_string())
                    }
                }
                Expr::Call(name, a) => {
                    let rule = reg
                        .get(name)
                        .ok_or_else(|| BindError::UnknownFunction(name.clone()))?;
                    Node::Call(rule, Box::new(go(a, coords, reg)?), e.to_string())
                }
            })
        }
        Ok(BoundExpr {
            root: go(expr, coordinates, registry)?,
            source: expr.clone(),
        })
    }

    pub fn source(&self) -> &Expr {
        &self.source
    }

    /// Plain floating-point evaluation.
    pub fn eval(&self, point: &[f64]) -> Result<f64, DomainError> {
        fn go(n: &Node, p: &[f64]) -> Result<f64, DomainError> {
            Ok(match n {
                Node::Const(c) => *c,
                Node::Var(i) => p[*i],
                Node::Neg(a) => -go(a, p)?,
                Node::Add(a, b) => go(a, p)? + go(b, p)?,
                Node::Sub(a, b) => go(a, p)? - go(b, p)?,
                Node::Mul(a, b) => go(a, p)? * go(b, p)?,
                Node::Div(a, b, text) => {
                    let (x, y) = (go(a, p)?, go(b, p)?);
                    if y == 0.0 {
                        return Err(domain(text, "division by zero"));
                    }
                    x / y
                }
                Node::PowInt(a, k, text) => {
                    let x = go(a, p)?;
                    if *k < 0 && x == 0.0 {
                        return Err(domain(text, "negative power of zero"));
                    }
                    x.powi(*k)
                }
                Node::PowRational(a, e, text) => {
                    let x = go(a, p)?;
                    rational_power_check(x, *e, 0, text)?;
                    x.powf(*e)
                }
                Node::Call(rule, a, text) => {
                    let x = go(a, p)?;
                    (rule.rule)(x, 0).map_err(|r| domain(text, r))?[0]
                }
            })
        }
        go(&self.root, point)
    }

    /// Evaluates with each coordinate replaced by a jet. Passing the seeds
    /// `Jet3::variable(n, 3, i, p_i)` yields the order-3 Taylor expansion at
    /// `p`; passing composite jets evaluates the composition.
    pub fn eval_jet(&self, inputs: &[Jet3]) -> Result<Jet3, DomainError> {
        assert!(
            !inputs.is_empty(),
            "jet evaluation needs at least one input"
        );
        let nvars = inputs[0].nvars();
        assert!(
            inputs.iter().all(|j| j.nvars() == nvars),
            "inconsistent jet seeds"
        );
        fn go(n: &Node, x: &[Jet3], nvars: usize) -> Result<Jet3, DomainError> {
            Ok(match n {
                Node::Const(c) => Jet3::constant(nvars, MAX_ORDER, *c),
                Node::Var(i) => x[*i].clone(),
                Node::Neg(a) => -go(a, x, nvars)?,
                Node::Add(a, b) => go(a, x, nvars)? + go(b, x, nvars)?,
                Node::Sub(a, b) => go(a, x, nvars)? - go(b, x, nvars)?,
                Node::Mul(a, b) => go(a, x, nvars)? * go(b, x, nvars)?,
                Node::Div(a, b, text) => {
                    let (p, q) = (go(a, x, nvars)?, go(b, x, nvars)?);
                    p.try_div(&q)
                        .map_err(|_| domain(text, "division by zero"))?
                }
                Node::PowInt(a, k, text) => {
                    let base = go(a, x, nvars)?;
                    if *k < 0 && base.value() == 0.0 {
                        return Err(domain(text, "negative power of zero"));
                    }
                    base.compose(power_rule_int(base.value(), *k))
                }
                Node::PowRational(a, e, text) => {
                    let base = go(a, x, nvars)?;
                    let v = base.value();
                    rational_power_check(v, *e, base.order(), text)?;
                    if v == 0.0 {
                        Jet3::constant(nvars, base.order(), v.powf(*e))
                    } else {
                        base.compose(power_rule_rational(v, *e))
                    }
                }
                Node::Call(rule, a, text) => {
                    let arg = go(a, x, nvars)?;
                    let r = (rule.rule)(arg.value(), arg.order()).map_err(|r| domain(text, r))?;
                    arg.compose(r)
                }
            })
        }
        go(&self.root, inputs, nvars)
    }
}

fn domain(text: &str, reason: &str) -> DomainError {
    DomainError {
        subexpression: text.to_string(),
        reason: reason.to_string(),
    }
}

fn rational_power_check(x: f64, e: f64, order: u8, text: &str) -> Result<(), DomainError> {
    if x < 0.0 {
        return Err(domain(text, "fractional power of a negative value"));
    }
    if x == 0.0 && (e < 0.0 || order > 0) {
        return Err(domain(text, "fractional power is singular at zero"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;
    use proptest::prelude::*;

    fn bound(src: &str, coords: &[&str]) -> BoundExpr {
        let coords: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        BoundExpr::bind(&parse(src).unwrap(), &coords, &FunctionRegistry::default()).unwrap()
    }

    fn seeds(p: &[f64]) -> Vec<Jet3> {
        (0..p.len())
            .map(|i| Jet3::variable(p.len(), 3, i, p[i]))
            .collect()
    }

    #[test]
    fn product_rule_at_point() {
        let e = bound("x*y", &["x", "y"]);
        let j = e.eval_jet(&seeds(&[2.0, 3.0])).unwrap();
        assert_eq!(j.value(), 6.0);
        assert_eq!(j.gradient(), vec![3.0, 2.0]);
        assert_eq!(j.partial(&[0, 1]), 1.0);
    }

    #[test]
    fn exp_taylor_coefficients_are_one_over_factorial_times_derivative() {
        let e = bound("exp(x)", &["x"]);
        let j = e.eval_jet(&seeds(&[0.0])).unwrap();
        for k in 0..4 {
            assert_eq!(j.partial(&vec![0; k]), 1.0);
        }
    }

    /// Richardson-extrapolated central differences of the analytic first
    /// derivative `2x cos(x²)`.
    #[test]
    fn third_derivative_of_sin_x_squared_against_finite_differences() {
        let x0 = 0.7;
        let d1 = |x: f64| 2.0 * x * (x * x).cos();
        let second_diff = |h: f64| (d1(x0 + h) - 2.0 * d1(x0) + d1(x0 - h)) / (h * h);
        let h = 1e-2;
        let oracle = (4.0 * second_diff(h / 2.0) - second_diff(h)) / 3.0;
        let j = bound("sin(x^2)", &["x"]).eval_jet(&seeds(&[x0])).unwrap();
        let d3 = j.partial(&[0, 0, 0]);
        assert!(((d3 - oracle) / oracle).abs() < 1e-6, "{d3} vs {oracle}");
    }

    #[test]
    fn unknown_identifier_is_reported_at_bind_time() {
        let err = BoundExpr::bind(
            &parse("x + w").unwrap(),
            &["x".to_string()],
            &FunctionRegistry::default(),
        )
        .unwrap_err();
        assert_eq!(err, BindError::UnknownIdentifier("w".into()));
        let err = BoundExpr::bind(
            &parse("abs(x)").unwrap(),
            &["x".to_string()],
            &FunctionRegistry::default(),
        )
        .unwrap_err();
        assert_eq!(err, BindError::UnknownFunction("abs".into()));
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let e = bound("1 + log(x - 1)", &["x"]);
        let err = e.eval(&[0.5]).unwrap_err();
        assert_eq!(err.subexpression, "log(x - 1)");
        let err = bound("sqrt(x)", &["x"]).eval(&[-1.0]).unwrap_err();
        assert_eq!(err.subexpression, "sqrt(x)");
        let err = bound("x / (y - 1)", &["x", "y"])
            .eval_jet(&seeds(&[1.0, 1.0]))
            .unwrap_err();
        assert_eq!(err.subexpression, "x / (y - 1)");
    }

    #[test]
    fn cubic_polynomial_derivatives_are_exact() {
        let e = bound("3*x^3 - 2*x*y^2 + 5*y - 7", &["x", "y"]);
        let j = e.eval_jet(&seeds(&[2.0, -1.0])).unwrap();
        assert_eq!(j.value(), 24.0 - 4.0 - 5.0 - 7.0);
        assert_eq!(j.partial(&[0]), 36.0 - 2.0);
        assert_eq!(j.partial(&[1]), 8.0 + 5.0);
        assert_eq!(j.partial(&[0, 0]), 36.0);
        assert_eq!(j.partial(&[0, 1]), 4.0);
        assert_eq!(j.partial(&[1, 1]), -8.0);
        assert_eq!(j.partial(&[0, 0, 0]), 18.0);
        assert_eq!(j.partial(&[0, 1, 1]), -4.0);
        assert_eq!(j.partial(&[1, 1, 1]), 0.0);
    }

    proptest! {
        #[test]
        fn zero_seed_evaluation_matches_plain_bit_for_bit(
            x in 0.1f64..3.0, y in -2.0f64..2.0,
            pick in 0usize..6,
        ) {
            let sources = [
                "sin(x*y) + x^3/(1 + y^2)",
                "sqrt(x)*exp(-y) - log(x + 2)",
                "tanh(x - y)^2 * cos(x)",
                "x^(1/2) - x^(-3/2)*y",
                "-(x - 1)^2/(x + y^2 + 1)",
                "3.25e-1*x*x*x - 2*y",
            ];
            let e = bound(sources[pick], &["x", "y"]);
            let plain = e.eval(&[x, y]).unwrap();
            let zero = [Jet3::constant(2, 3, x), Jet3::constant(2, 3, y)];
            let jet = e.eval_jet(&zero).unwrap();
            prop_assert_eq!(plain.to_bits(), jet.value().to_bits());
            let full = e.eval_jet(&seeds(&[x, y])).unwrap();
            prop_assert_eq!(plain.to_bits(), full.value().to_bits());
        }
    }
}

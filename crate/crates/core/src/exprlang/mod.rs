//! Scalar expression language for metric components, level functions and
//! rigging fields.
//!
//! Grammar (whitespace insignificant, no implicit multiplication):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" power)?
//! atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//! ```
//!
//! Exponents must be integer or rational literals (`x^2`, `x^(1/2)`,
//! `x^(-3)`), which keeps the jet evaluation rule for powers closed-form.

mod eval;
mod parser;

use std::fmt;

pub use eval::{BindError, BoundExpr, DomainError, FunctionRegistry, FunctionRule, RuleFn};
pub use parser::{parse, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

/// Integer or rational exponent `numerator / denominator`, `denominator > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exponent {
    pub numerator: i64,
    pub denominator: i64,
}

impl Exponent {
    pub fn is_integer(&self) -> bool {
        self.denominator == 1
    }

    pub fn as_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.numerator < 0, self.denominator == 1) {
            (false, true) => write!(f, "{}", self.numerator),
            (true, true) => write!(f, "({})", self.numerator),
            (_, false) => write!(f, "({}/{})", self.numerator, self.denominator),
        }
    }
}

/// Parsed expression tree. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Decimal literal; `text` is the source spelling, kept for printing.
    Number {
        value: f64,
        text: String,
    },
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Exponent),
    Call(String, Box<Expr>),
}

impl Expr {
    /// Identifiers used as variables, in first-appearance order.
    pub fn variables(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Number { .. } => {}
                Expr::Var(name) => {
                    if !out.contains(name) {
                        out.push(name.clone());
                    }
                }
                Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => walk(a, out),
                Expr::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    // Binding strength used by the printer: sums 1, products 2, unary
    // minus 3, powers 4, atoms 5.
    fn strength(&self) -> u8 {
        match self {
            Expr::Binary(op, _, _) => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Pow(_, _) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrapped(e: &Expr, f: &mut fmt::Formatter<'_>, paren: bool) -> fmt::Result {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Number { text, .. } => f.write_str(text),
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(a) => {
                f.write_str("-")?;
                wrapped(a, f, a.strength() < 3)
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                wrapped(a, f, a.strength() < p)?;
                write!(f, " {} ", op.symbol())?;
                // Left-associative: an equal-precedence right operand needs
                // parentheses.
                wrapped(b, f, b.strength() <= p)
            }
            Expr::Pow(a, e) => {
                wrapped(a, f, a.strength() < 5)?;
                write!(f, "^{e}")
            }
            Expr::Call(name, a) => write!(f, "{name}({a})"),
        }
    }
}

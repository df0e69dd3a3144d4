use std::fmt;

use thiserror::Error;

use super::{BinOp, Exponent, Expr};

/// Syntax error. `offset` is the byte offset just after the last token that
/// was accepted, i.e. where the unparseable input begins (including any
/// whitespace in front of the offending token).
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<&'static str>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at byte {}: expected {}, found {}",
            self.offset,
            self.expected.join(" or "),
            self.found
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64, String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(_, t) => format!("number `{t}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    end: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut last_end = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => {
                i += 1;
                Tok::Plus
            }
            b'-' => {
                i += 1;
                Tok::Minus
            }
            b'*' => {
                i += 1;
                Tok::Star
            }
            b'/' => {
                i += 1;
                Tok::Slash
            }
            b'^' => {
                i += 1;
                Tok::Caret
            }
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: last_end,
                    expected: vec!["number"],
                    found: format!("`{text}`"),
                })?;
                Tok::Number(value, text.to_string())
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Tok::Ident(src[start..i].to_string())
            }
            _ => {
                let ch = src[start..].chars().next().unwrap();
                return Err(ParseError {
                    offset: last_end,
                    expected: vec!["number", "identifier", "operator", "`(`", "`)`"],
                    found: format!("character `{ch}`"),
                });
            }
        };
        out.push(Token { tok, end: i });
        last_end = i;
    }
    out.push(Token {
        tok: Tok::End,
        end: src.len(),
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// End offset of the last consumed token.
    last_end: usize,
}

const ATOM_START: &[&str] = &["number", "identifier", "`(`"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        self.last_end = t.end;
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&'static str]) -> ParseError {
        ParseError {
            offset: self.last_end,
            expected: expected.to_vec(),
            found: self.peek().describe(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.factor()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let exponent_offset = self.last_end;
        let exponent = self.power()?;
        match rational_literal(&exponent) {
            Some(e) => Ok(Expr::Pow(Box::new(base), e)),
            None => Err(ParseError {
                offset: exponent_offset,
                expected: vec!["integer exponent", "rational exponent such as `(1/2)`"],
                found: format!("`{exponent}`"),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Number(value, text) => {
                self.bump();
                Ok(Expr::Number { value, text })
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Expr::Call(name, Box::new(arg)))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            _ => Err(self.error(ATOM_START)),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&["`)`", "operator"]))
        }
    }
}

fn integer_literal(e: &Expr) -> Option<i64> {
    match e {
        Expr::Number { value, text } => {
            if text.bytes().all(|b| b.is_ascii_digit()) && value.abs() < 1e15 {
                Some(*value as i64)
            } else {
                None
            }
        }
        Expr::Neg(inner) => integer_literal(inner).map(|v| -v),
        _ => None,
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn rational_literal(e: &Expr) -> Option<Exponent> {
    let (num, den) = match e {
        Expr::Binary(BinOp::Div, a, b) => (integer_literal(a)?, integer_literal(b)?),
        Expr::Neg(inner) => {
            let r = rational_literal(inner)?;
            (-r.numerator, r.denominator)
        }
        _ => (integer_literal(e)?, 1),
    };
    if den == 0 {
        return None;
    }
    let g = gcd(num, den).max(1);
    let sign = if den < 0 { -1 } else { 1 };
    Some(Exponent {
        numerator: sign * num / g,
        denominator: sign * den / g,
    })
}

/// Parses an expression.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let tokens = lex(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        last_end: 0,
    };
    if *p.peek() == Tok::End {
        return Err(p.error(ATOM_START));
    }
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(s: &str) -> Box<Expr> {
        Box::new(Expr::Var(s.into()))
    }

    fn num(v: f64, t: &str) -> Box<Expr> {
        Box::new(Expr::Number {
            value: v,
            text: t.into(),
        })
    }

    #[test]
    fn power_binds_tighter_than_addition() {
        let e = parse("x^2 + y").unwrap();
        assert_eq!(
            e,
            Expr::Binary(
                BinOp::Add,
                Box::new(Expr::Pow(
                    var("x"),
                    Exponent {
                        numerator: 2,
                        denominator: 1
                    }
                )),
                var("y")
            )
        );
    }

    #[test]
    fn unary_minus_applies_after_power() {
        let e = parse("-x^2").unwrap();
        assert_eq!(
            e,
            Expr::Neg(Box::new(Expr::Pow(
                var("x"),
                Exponent {
                    numerator: 2,
                    denominator: 1
                }
            )))
        );
    }

    #[test]
    fn space_inside_identifier_is_rejected_at_offset_3() {
        let err = parse("2*d u").unwrap_err();
        assert_eq!(err.offset, 3);
        assert!(err.expected.contains(&"operator"));
    }

    #[test]
    fn left_associative_subtraction() {
        let e = parse("a - b - c").unwrap();
        assert_eq!(
            e,
            Expr::Binary(
                BinOp::Sub,
                Box::new(Expr::Binary(BinOp::Sub, var("a"), var("b"))),
                var("c")
            )
        );
    }

    #[test]
    fn whitespace_is_insignificant() {
        assert_eq!(parse("  x*( y+1 ) ").unwrap(), parse("x*(y+1)").unwrap());
    }

    #[test]
    fn rational_and_negative_exponents() {
        assert_eq!(
            parse("x^(1/2)").unwrap(),
            Expr::Pow(
                var("x"),
                Exponent {
                    numerator: 1,
                    denominator: 2
                }
            )
        );
        assert_eq!(
            parse("x^(-2/4)").unwrap(),
            Expr::Pow(
                var("x"),
                Exponent {
                    numerator: -1,
                    denominator: 2
                }
            )
        );
        assert_eq!(
            parse("x^(-3)").unwrap(),
            Expr::Pow(
                var("x"),
                Exponent {
                    numerator: -3,
                    denominator: 1
                }
            )
        );
    }

    #[test]
    fn non_literal_exponent_is_rejected() {
        assert!(parse("x^y").is_err());
        assert!(parse("x^2.5").is_err());
        assert!(parse("x^2^3").is_err());
        assert!(parse("x^(1/0)").is_err());
    }

    #[test]
    fn numbers_with_fraction_and_exponent() {
        assert_eq!(*num(1.5e-3, "1.5e-3"), parse("1.5e-3").unwrap());
        assert_eq!(*num(2.0, "2"), parse("2").unwrap());
    }

    #[test]
    fn function_application() {
        assert_eq!(parse("sin(x)").unwrap(), Expr::Call("sin".into(), var("x")));
    }

    #[test]
    fn structural_errors() {
        assert_eq!(parse("").unwrap_err().offset, 0);
        assert_eq!(parse("(x").unwrap_err().offset, 2);
        assert_eq!(parse("x +").unwrap_err().offset, 3);
        assert_eq!(parse("x $ y").unwrap_err().offset, 1);
        assert_eq!(parse("2 x").unwrap_err().offset, 1);
    }
}

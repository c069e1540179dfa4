//! Parser and evaluator for the surface formula language.
//!
//! Formulas are functions of the chart parameters `u` and `v`, built from
//! float literals, `+ - * /`, `^` with a constant integer exponent, unary
//! minus, and the functions `sin`, `cos`, `exp`, `sqrt`. Precedence from
//! tightest to loosest: `^`, unary minus, `* /`, `+ -`; binary operators of
//! equal precedence associate to the left. Parsing builds the raw tree with
//! no simplification or constant folding, and every node remembers its byte
//! offset in the source so that domain errors can point at the subexpression
//! that failed.

use crate::jet::{Jet2, Smooth};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    U,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone)]
pub enum Node {
    Const(f64),
    Var(Var),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    /// Integer power with a literal exponent.
    Pow(Box<Expr>, i32),
}

/// A parsed formula node annotated with its byte offset in the source text.
#[derive(Debug, Clone)]
pub struct Expr {
    pub node: Node,
    pub offset: usize,
}

/// Structural equality; source offsets are ignored.
impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (&self.node, &other.node) {
            (Node::Const(a), Node::Const(b)) => a == b,
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Unary(oa, a), Node::Unary(ob, b)) => oa == ob && a == b,
            (Node::Binary(oa, la, ra), Node::Binary(ob, lb, rb)) => {
                oa == ob && la == lb && ra == rb
            }
            (Node::Pow(a, na), Node::Pow(b, nb)) => na == nb && a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} at byte {offset}")]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EvalErrorKind {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a negative value")]
    SqrtOfNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at byte {offset}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    /// Byte offset of the subexpression that failed.
    pub offset: usize,
}

/// Parse a formula in the variables `u`, `v`.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> ParseError {
        ParseError { message: message.to_string(), offset: self.pos }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    let offset = lhs.offset;
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr {
                        node: Node::Binary(BinaryOp::Add, Box::new(lhs), Box::new(rhs)),
                        offset,
                    };
                }
                Some(b'-') => {
                    let offset = lhs.offset;
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr {
                        node: Node::Binary(BinaryOp::Sub, Box::new(lhs), Box::new(rhs)),
                        offset,
                    };
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    let offset = lhs.offset;
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Expr {
                        node: Node::Binary(BinaryOp::Mul, Box::new(lhs), Box::new(rhs)),
                        offset,
                    };
                }
                Some(b'/') => {
                    let offset = lhs.offset;
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Expr {
                        node: Node::Binary(BinaryOp::Div, Box::new(lhs), Box::new(rhs)),
                        offset,
                    };
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            let offset = self.pos;
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr { node: Node::Unary(UnaryOp::Neg, Box::new(inner)), offset });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.atom()?;
        while self.peek() == Some(b'^') {
            let offset = base.offset;
            self.pos += 1;
            let exponent = self.integer_exponent()?;
            base = Expr { node: Node::Pow(Box::new(base), exponent), offset };
        }
        Ok(base)
    }

    fn integer_exponent(&mut self) -> Result<i32, ParseError> {
        self.skip_ws();
        let negative = if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected integer exponent"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let n: i32 = digits
            .parse()
            .map_err(|_| ParseError { message: "exponent out of range".into(), offset: start })?;
        Ok(if negative { -n } else { n })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.err("expected operand, found end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected closing parenthesis"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.err("expected operand")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // Not an exponent suffix after all (e.g. "2*exp(u)" split oddly).
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = text
            .parse()
            .map_err(|_| ParseError { message: format!("invalid number `{text}`"), offset: start })?;
        Ok(Expr { node: Node::Const(v), offset: start })
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match name {
            "u" => Ok(Expr { node: Node::Var(Var::U), offset: start }),
            "v" => Ok(Expr { node: Node::Var(Var::V), offset: start }),
            "sin" | "cos" | "exp" | "sqrt" => {
                let op = match name {
                    "sin" => UnaryOp::Sin,
                    "cos" => UnaryOp::Cos,
                    "exp" => UnaryOp::Exp,
                    _ => UnaryOp::Sqrt,
                };
                if self.peek() != Some(b'(') {
                    return Err(self.err("expected `(` after function name"));
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected closing parenthesis"));
                }
                self.pos += 1;
                Ok(Expr { node: Node::Unary(op, Box::new(arg)), offset: start })
            }
            _ => Err(ParseError {
                message: format!("unknown identifier `{name}`"),
                offset: start,
            }),
        }
    }
}

impl Expr {
    /// Evaluate over any [`Smooth`] scalar; `eval_jet2` is the common entry point.
    pub fn eval<T: Smooth>(&self, u: T, v: T) -> Result<T, EvalError> {
        match &self.node {
            Node::Const(c) => Ok(T::c(*c)),
            Node::Var(Var::U) => Ok(u),
            Node::Var(Var::V) => Ok(v),
            Node::Unary(op, inner) => {
                let x = inner.eval(u, v)?;
                Ok(match op {
                    UnaryOp::Neg => -x,
                    UnaryOp::Sin => x.sin(),
                    UnaryOp::Cos => x.cos(),
                    UnaryOp::Exp => x.exp(),
                    UnaryOp::Sqrt => {
                        if x.value() < 0.0 {
                            return Err(EvalError {
                                kind: EvalErrorKind::SqrtOfNegative,
                                offset: inner.offset,
                            });
                        }
                        x.sqrt()
                    }
                })
            }
            Node::Binary(op, lhs, rhs) => {
                let a = lhs.eval(u, v)?;
                let b = rhs.eval(u, v)?;
                Ok(match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b.value() == 0.0 {
                            return Err(EvalError {
                                kind: EvalErrorKind::DivisionByZero,
                                offset: rhs.offset,
                            });
                        }
                        a / b
                    }
                })
            }
            Node::Pow(base, n) => {
                let b = base.eval(u, v)?;
                if *n < 0 && b.value() == 0.0 {
                    return Err(EvalError {
                        kind: EvalErrorKind::DivisionByZero,
                        offset: base.offset,
                    });
                }
                Ok(b.powi(*n))
            }
        }
    }

    /// Value, gradient and Hessian in `(u, v)` at a point.
    pub fn eval_jet2(&self, u: f64, v: f64) -> Result<Jet2, EvalError> {
        self.eval(Jet2::variable(0, u), Jet2::variable(1, v))
    }

    fn precedence(&self) -> u8 {
        match &self.node {
            Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Node::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            Node::Unary(UnaryOp::Neg, _) => 3,
            Node::Pow(..) => 4,
            _ => 5,
        }
    }
}

/// Prints a formula that parses back to a structurally identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(Var::U) => write!(f, "u"),
            Node::Var(Var::V) => write!(f, "v"),
            Node::Unary(UnaryOp::Neg, inner) => {
                if inner.precedence() < 3 {
                    write!(f, "-({inner})")
                } else {
                    write!(f, "-{inner}")
                }
            }
            Node::Unary(op, inner) => {
                let name = match op {
                    UnaryOp::Sin => "sin",
                    UnaryOp::Cos => "cos",
                    UnaryOp::Exp => "exp",
                    UnaryOp::Sqrt => "sqrt",
                    UnaryOp::Neg => unreachable!(),
                };
                write!(f, "{name}({inner})")
            }
            Node::Binary(op, lhs, rhs) => {
                let (sym, prec) = match op {
                    BinaryOp::Add => ("+", 1),
                    BinaryOp::Sub => ("-", 1),
                    BinaryOp::Mul => ("*", 2),
                    BinaryOp::Div => ("/", 2),
                };
                if lhs.precedence() < prec {
                    write!(f, "({lhs})")?;
                } else {
                    write!(f, "{lhs}")?;
                }
                write!(f, " {sym} ")?;
                // Right operands need parens at equal precedence to keep
                // left associativity on reparse.
                if rhs.precedence() <= prec {
                    write!(f, "({rhs})")
                } else {
                    write!(f, "{rhs}")
                }
            }
            Node::Pow(base, n) => {
                if matches!(
                    base.node,
                    Node::Const(_) | Node::Var(_) | Node::Unary(UnaryOp::Sin, _)
                        | Node::Unary(UnaryOp::Cos, _)
                        | Node::Unary(UnaryOp::Exp, _)
                        | Node::Unary(UnaryOp::Sqrt, _)
                ) {
                    write!(f, "{base}^{n}")
                } else {
                    write!(f, "({base})^{n}")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_groups_multiplication_first() {
        let e = parse("u + v*v").unwrap();
        let expected = Expr {
            node: Node::Binary(
                BinaryOp::Add,
                Box::new(Expr { node: Node::Var(Var::U), offset: 0 }),
                Box::new(Expr {
                    node: Node::Binary(
                        BinaryOp::Mul,
                        Box::new(Expr { node: Node::Var(Var::V), offset: 0 }),
                        Box::new(Expr { node: Node::Var(Var::V), offset: 0 }),
                    ),
                    offset: 0,
                }),
            ),
            offset: 0,
        };
        assert_eq!(e, expected);
    }

    #[test]
    fn function_application_evaluates() {
        let e = parse("cos(u)*sin(v)").unwrap();
        let j = e.eval_jet2(0.0, 0.0).unwrap();
        assert_eq!(j.v, 0.0);
        assert_eq!(j.d[1], 1.0);
    }

    #[test]
    fn trailing_operator_reports_offset() {
        let err = parse("u + ").unwrap_err();
        assert_eq!(err.offset, 4);
    }

    #[test]
    fn unknown_identifier_reports_offset() {
        let err = parse("u + tan(v)").unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(err.message.contains("tan"));
    }

    #[test]
    fn square_jet_example() {
        let e = parse("u^2").unwrap();
        let j = e.eval_jet2(3.0, 0.0).unwrap();
        assert_eq!(j.v, 9.0);
        assert_eq!(j.d[0], 6.0);
        assert_eq!(j.h[0][0], 2.0);
    }

    #[test]
    fn product_jet_example() {
        let e = parse("u*v").unwrap();
        let j = e.eval_jet2(0.3, -0.7).unwrap();
        assert_eq!(j.h[0][1], 1.0);
        assert_eq!(j.h[0][0], 0.0);
        assert_eq!(j.h[1][1], 0.0);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse("-u^2").unwrap();
        let j = e.eval_jet2(2.0, 0.0).unwrap();
        assert_eq!(j.v, -4.0);
    }

    #[test]
    fn division_by_zero_points_at_denominator() {
        let e = parse("u / (v - v)").unwrap();
        let err = e.eval_jet2(1.0, 2.0).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::DivisionByZero);
        assert_eq!(err.offset, 5);
    }

    #[test]
    fn sqrt_of_negative_points_at_argument() {
        let e = parse("sqrt(u - 2)").unwrap();
        let err = e.eval_jet2(1.0, 0.0).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::SqrtOfNegative);
        assert_eq!(err.offset, 5);
    }

    #[test]
    fn negative_exponent_parses() {
        let e = parse("(1 + u^2)^-1").unwrap();
        let j = e.eval_jet2(1.0, 0.0).unwrap();
        assert_eq!(j.v, 0.5);
    }

    #[test]
    fn print_parse_roundtrip_samples() {
        for src in [
            "u + v*v",
            "-u^2 - v^-3",
            "u - v - 1.5",
            "u / v / 2",
            "(u + v)^2 * sin(u - v)",
            "sqrt(1 + u^2) - exp(-v)",
            "u - (v - 1)",
            "2e-3 * u",
        ] {
            let e = parse(src).unwrap();
            let printed = e.to_string();
            let back = parse(&printed).unwrap();
            assert_eq!(e, back, "roundtrip failed for `{src}` -> `{printed}`");
        }
    }
}

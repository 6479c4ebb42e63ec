//! Metric component expressions: parsing, printing and forward-mode
//! evaluation.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! sum     := product (("+" | "-") product)*
//! product := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := atom ("^" unary)?
//! atom    := number | coordinate | "pi" | func "(" sum ")" | "(" sum ")"
//! func    := sin | cos | tan | exp | log | ln | sqrt | abs
//! ```
//!
//! `^` binds tighter than unary minus (`-x^2 == -(x^2)`) and is
//! right-associative; the other binary operators are left-associative.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dual::{Dual, Real, MAX_DIM};
use crate::error::{EvalError, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Coord(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression over a fixed list of coordinate names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    coords: Arc<[String]>,
}

/// Value and gradient of an expression at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualValue {
    pub value: f64,
    pub partials: Vec<f64>,
}

/// Parses `text` into an expression whose free symbols are `coords`.
pub fn parse_expr(text: &str, coords: &[String]) -> Result<Expr, ParseError> {
    let coords: Arc<[String]> = coords.to_vec().into();
    let mut p = Parser {
        src: text,
        pos: 0,
        coords: &coords,
    };
    p.skip_ws();
    if p.pos >= text.len() {
        return Err(ParseError::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let root = p.sum()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(Expr { root, coords })
}

/// Value and exact gradient of `e` at `x` (forward mode).
pub fn eval_dual(e: &Expr, x: &[f64]) -> Result<DualValue, EvalError> {
    if x.len() > MAX_DIM {
        return Err(EvalError::Dimension {
            expected: MAX_DIM,
            got: x.len(),
        });
    }
    let seeded: Vec<Dual<f64>> = x.iter().enumerate().map(|(i, &xi)| Dual::variable(xi, i)).collect();
    let d = e.eval(&seeded)?;
    Ok(DualValue {
        value: d.re,
        partials: d.eps[..x.len()].to_vec(),
    })
}

impl Expr {
    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    /// Constant value if the expression has no coordinate dependence.
    pub fn as_constant(&self) -> Option<f64> {
        const_value(&self.root)
    }

    pub fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.eval(x)
    }

    /// Evaluates over any [`Real`] scalar; domain errors are reported on the
    /// value part.
    pub fn eval<T: Real>(&self, x: &[T]) -> Result<T, EvalError> {
        if x.len() < self.coords.len() {
            return Err(EvalError::Dimension {
                expected: self.coords.len(),
                got: x.len(),
            });
        }
        let v = eval_node(&self.root, x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

fn const_value(n: &Node) -> Option<f64> {
    match n {
        Node::Const(c) => Some(*c),
        Node::Coord(_) => None,
        _ => {
            let v = eval_node::<f64>(n, &[]).ok()?;
            v.is_finite().then_some(v)
        }
    }
}

fn eval_node<T: Real>(n: &Node, x: &[T]) -> Result<T, EvalError> {
    Ok(match n {
        Node::Const(c) => T::cst(*c),
        Node::Coord(i) => *x.get(*i).ok_or(EvalError::Dimension {
            expected: i + 1,
            got: x.len(),
        })?,
        Node::Neg(a) => -eval_node(a, x)?,
        Node::Bin(op, a, b) => {
            if let (BinOp::Pow, Node::Const(c)) = (op, b.as_ref()) {
                return pow_const(eval_node(a, x)?, *c);
            }
            let a = eval_node(a, x)?;
            let b = eval_node(b, x)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b.re() == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    a / b
                }
                BinOp::Pow => {
                    if a.re() <= 0.0 {
                        return Err(EvalError::PowDomain);
                    }
                    (b * a.ln()).exp()
                }
            }
        }
        Node::Call(f, a) => {
            let a = eval_node(a, x)?;
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tan => {
                    if a.re().cos().abs() < 1e-300 {
                        return Err(EvalError::TanPole);
                    }
                    a.tan()
                }
                Func::Exp => a.exp(),
                Func::Log => {
                    if a.re() <= 0.0 {
                        return Err(EvalError::LogNonPositive);
                    }
                    a.ln()
                }
                Func::Sqrt => {
                    if a.re() < 0.0 {
                        return Err(EvalError::SqrtNegative);
                    }
                    a.sqrt()
                }
                Func::Abs => a.abs(),
            }
        }
    })
}

fn pow_const<T: Real>(base: T, c: f64) -> Result<T, EvalError> {
    if c.fract() == 0.0 && c.abs() <= 1024.0 {
        if c < 0.0 && base.re() == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        return Ok(base.powi(c as i32));
    }
    if base.re() <= 0.0 {
        return Err(EvalError::PowDomain);
    }
    Ok((base.ln().scale(c)).exp())
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    coords: &'a [String],
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat(b'+') {
                BinOp::Add
            } else if self.eat(b'-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.product()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                BinOp::Mul
            } else if self.eat(b'/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            let exponent = match const_value(&exponent) {
                Some(c) => Node::Const(c),
                None => exponent,
            };
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                if let Some(i) = self.coords.iter().position(|c| c == name) {
                    return Ok(Node::Coord(i));
                }
                if let Some(f) = Func::from_name(name) {
                    if !self.eat(b'(') {
                        return Err(self.syntax("expected `(` after function name"));
                    }
                    let arg = self.sum()?;
                    if !self.eat(b')') {
                        return Err(self.syntax("expected `)`"));
                    }
                    return Ok(Node::Call(f, Box::new(arg)));
                }
                if name == "pi" {
                    return Ok(Node::Const(std::f64::consts::PI));
                }
                Err(ParseError::UnknownSymbol {
                    name: name.to_string(),
                    offset: start,
                })
            }
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let mut k = self.pos + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                self.pos = k;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(Node::Const)
            .map_err(|_| ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, &self.coords, f)
    }
}

fn write_node(n: &Node, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match n {
        Node::Const(c) => {
            if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                write!(f, "(-{:?})", -c)
            } else {
                write!(f, "{c:?}")
            }
        }
        Node::Coord(i) => f.write_str(&names[*i]),
        Node::Neg(a) => {
            f.write_str("(-")?;
            write_node(a, names, f)?;
            f.write_str(")")
        }
        Node::Bin(op, a, b) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                BinOp::Pow => "^",
            };
            f.write_str("(")?;
            write_node(a, names, f)?;
            f.write_str(sym)?;
            write_node(b, names, f)?;
            f.write_str(")")
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(a, names, f)?;
            f.write_str(")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Vec<String> {
        vec!["x1".into(), "x2".into()]
    }

    #[test]
    fn precedence() {
        let e = parse_expr("1+2*3", &xy()).unwrap();
        assert_eq!(e.eval_f64(&[0.0, 0.0]).unwrap(), 7.0);
        let e = parse_expr("-x1^2", &xy()).unwrap();
        assert_eq!(e.eval_f64(&[3.0, 0.0]).unwrap(), -9.0);
        let e = parse_expr("2^3^2", &xy()).unwrap();
        assert_eq!(e.eval_f64(&[0.0, 0.0]).unwrap(), 512.0);
        let e = parse_expr("8/4/2", &xy()).unwrap();
        assert_eq!(e.eval_f64(&[0.0, 0.0]).unwrap(), 1.0);
        let e = parse_expr("2*-3", &xy()).unwrap();
        assert_eq!(e.eval_f64(&[0.0, 0.0]).unwrap(), -6.0);
        let e = parse_expr("2^-1", &xy()).unwrap();
        assert_eq!(e.eval_f64(&[0.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn identity_and_substitution() {
        let e = parse_expr("x1", &xy()).unwrap();
        assert_eq!(e.eval_f64(&[5.0, 2.0]).unwrap(), 5.0);
        let e = parse_expr("4/(1+x1^2+x2^2)^2", &xy()).unwrap();
        assert_eq!(e.eval_f64(&[0.0, 0.0]).unwrap(), 4.0);
    }

    #[test]
    fn dual_examples() {
        let e = parse_expr("x1*x2", &xy()).unwrap();
        let d = eval_dual(&e, &[3.0, 4.0]).unwrap();
        assert_eq!(d.value, 12.0);
        assert_eq!(d.partials, vec![4.0, 3.0]);

        let e = parse_expr("sin(x1)", &xy()).unwrap();
        let d = eval_dual(&e, &[0.0, 0.0]).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(d.partials, vec![1.0, 0.0]);

        // d/dx1 of 4/(1+r^2)^2 = -16 x1/(1+r^2)^3 = -2 at (1,0)
        let e = parse_expr("4/(1+x1^2+x2^2)^2", &xy()).unwrap();
        let d = eval_dual(&e, &[1.0, 0.0]).unwrap();
        assert!((d.value - 1.0).abs() < 1e-15);
        assert!((d.partials[0] + 2.0).abs() < 1e-14);
        assert_eq!(d.partials[1], 0.0);
        let h = 1e-6;
        let fd = (e.eval_f64(&[1.0 + h, 0.0]).unwrap() - e.eval_f64(&[1.0 - h, 0.0]).unwrap()) / (2.0 * h);
        assert!((fd + 2.0).abs() < 1e-8);
    }

    #[test]
    fn constants_have_zero_partials() {
        let e = parse_expr("3.5*pi", &xy()).unwrap();
        let d = eval_dual(&e, &[1.0, 2.0]).unwrap();
        assert_eq!(d.partials, vec![0.0, 0.0]);
        let e = parse_expr("x2", &xy()).unwrap();
        let d = eval_dual(&e, &[1.0, 2.0]).unwrap();
        assert_eq!(d.partials, vec![0.0, 1.0]);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match parse_expr("1 + * 2", &xy()) {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        match parse_expr("x1 + y", &xy()) {
            Err(ParseError::UnknownSymbol { name, offset }) => {
                assert_eq!(name, "y");
                assert_eq!(offset, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_expr("", &xy()).is_err());
        assert!(parse_expr("(x1", &xy()).is_err());
        assert!(parse_expr("sin x1", &xy()).is_err());
        assert!(parse_expr("x1 x2", &xy()).is_err());
    }

    #[test]
    fn domain_errors_are_reported() {
        let c = xy();
        let at = |s: &str, x: &[f64]| parse_expr(s, &c).unwrap().eval_f64(x);
        assert_eq!(at("1/x1", &[0.0, 0.0]), Err(EvalError::DivisionByZero));
        assert_eq!(at("log(x1)", &[0.0, 0.0]), Err(EvalError::LogNonPositive));
        assert_eq!(at("sqrt(x1)", &[-1.0, 0.0]), Err(EvalError::SqrtNegative));
        assert_eq!(at("x1^0.5", &[-1.0, 0.0]), Err(EvalError::PowDomain));
        assert_eq!(at("exp(x1)", &[1e6, 0.0]), Err(EvalError::NonFinite));
        let e = parse_expr("sqrt(x1)", &c).unwrap();
        assert!(eval_dual(&e, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn display_reparses() {
        let c = xy();
        for s in ["-x1^2 + 3*x2", "4/(1+x1^2+x2^2)^2", "exp(-0.5*x1)*cos(x2) - 1e-3"] {
            let e = parse_expr(s, &c).unwrap();
            let again = parse_expr(&e.to_string(), &c).unwrap();
            for p in [[0.3, -0.7], [1.1, 0.2]] {
                assert_eq!(e.eval_f64(&p).unwrap(), again.eval_f64(&p).unwrap());
            }
        }
    }
}

//! Scalar coefficient and data functions of one variable.
//!
//! Coefficients are written as small arithmetic expressions (`"1/t"`,
//! `"-3 - tanh(x^2*(1-x))"`) and parsed into an immutable [`Expression`] tree.
//! Evaluation never returns NaN or infinity: anything outside a function's
//! domain is reported as an [`EvalError`]. Singular points must be kept away
//! by the subdomain schedule, never evaluated.
//!
//! The nonlinear part of the Dirichlet family, `u -> psi(u)`, is restricted to
//! the [`MonotoneScalarFn`] catalog so that monotonicity and linear growth are
//! known properties rather than claims.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` takes 1 argument, got {got} (byte {offset})")]
    Arity { name: String, got: usize, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at {at}")]
    DivisionByZero { at: f64 },
    #[error("log of non-positive value {arg} at {at}")]
    LogDomain { arg: f64, at: f64 },
    #[error("sqrt of negative value {arg} at {at}")]
    SqrtDomain { arg: f64, at: f64 },
    #[error("non-finite result at {at}")]
    NonFinite { at: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tanh,
    Arctan,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            "arctan" => Func::Arctan,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Arctan => "arctan",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression in a single named variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    var: String,
    root: Node,
}

impl Expression {
    pub fn parse(text: &str, var: &str) -> Result<Expression, ParseError> {
        parse(text, var)
    }

    /// The constant function `value`.
    pub fn constant(value: f64, var: &str) -> Expression {
        Expression {
            var: var.to_string(),
            root: Node::Num(value),
        }
    }

    pub fn from_node(root: Node, var: &str) -> Expression {
        Expression {
            var: var.to_string(),
            root,
        }
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn eval(&self, point: f64) -> Result<f64, EvalError> {
        let v = eval_node(&self.root, point)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { at: point })
        }
    }

    /// Fourth-order central difference of the expression at `point`.
    pub fn derivative(&self, point: f64) -> Result<f64, EvalError> {
        let h = 1e-3 * point.abs().max(1e-2);
        let f = |k: f64| self.eval(point + k * h);
        Ok((f(-2.0)? - 8.0 * f(-1.0)? + 8.0 * f(1.0)? - f(2.0)?) / (12.0 * h))
    }
}

fn eval_node(node: &Node, t: f64) -> Result<f64, EvalError> {
    let v = match node {
        Node::Num(c) => *c,
        Node::Var => t,
        Node::Neg(e) => -eval_node(e, t)?,
        Node::Bin(op, l, r) => {
            let a = eval_node(l, t)?;
            let b = eval_node(r, t)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero { at: t });
                    }
                    a / b
                }
                BinOp::Pow => {
                    if a == 0.0 && b < 0.0 {
                        return Err(EvalError::DivisionByZero { at: t });
                    }
                    a.powf(b)
                }
            }
        }
        Node::Call(f, arg) => {
            let x = eval_node(arg, t)?;
            match f {
                Func::Exp => x.exp(),
                Func::Log => {
                    if x <= 0.0 {
                        return Err(EvalError::LogDomain { arg: x, at: t });
                    }
                    x.ln()
                }
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tanh => x.tanh(),
                Func::Arctan => x.atan(),
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(EvalError::SqrtDomain { arg: x, at: t });
                    }
                    x.sqrt()
                }
                Func::Abs => x.abs(),
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite { at: t })
    }
}

/// Prints fully parenthesised so the output re-parses to the same tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, &self.var, f)
    }
}

fn write_node(node: &Node, var: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Num(c) => {
            if *c < 0.0 {
                write!(f, "(-{:e})", -c)
            } else {
                write!(f, "{:e}", c)
            }
        }
        Node::Var => f.write_str(var),
        Node::Neg(e) => {
            f.write_str("(-")?;
            write_node(e, var, f)?;
            f.write_str(")")
        }
        Node::Bin(op, l, r) => {
            f.write_str("(")?;
            write_node(l, var, f)?;
            write!(f, " {} ", op.symbol())?;
            write_node(r, var, f)?;
            f.write_str(")")
        }
        Node::Call(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_node(arg, var, f)?;
            f.write_str(")")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
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
            let lit = &text[start..i];
            let v: f64 = lit.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{lit}`"),
            })?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push((tok, start));
        i += c.len_utf8();
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    var: &'a str,
}

/// Parses `text` with the usual precedence: `^` binds tightest and is
/// right-associative, then unary minus, then `* /`, then `+ -`.
pub fn parse(text: &str, var: &str) -> Result<Expression, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        end: text.len(),
        var,
    };
    let root = p.expr()?;
    if let Some((_, off)) = p.toks.get(p.pos) {
        return Err(ParseError::Syntax {
            offset: *off,
            message: "unexpected trailing input".into(),
        });
    }
    Ok(Expression {
        var: var.to_string(),
        root,
    })
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(ParseError::Syntax {
                offset: self.offset(),
                message: "expected `)`".into(),
            }),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            // exponent may itself carry a sign: 2^-1
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let offset = self.offset();
        let Some((tok, _)) = self.toks.get(self.pos).cloned() else {
            return Err(ParseError::Syntax {
                offset,
                message: "unexpected end of input".into(),
            });
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_close()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(Tok::LParen) = self.peek() {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(ParseError::UnknownIdentifier { name, offset });
                    };
                    self.pos += 1;
                    let mut args = Vec::new();
                    if !matches!(self.peek(), Some(Tok::RParen)) {
                        args.push(self.expr()?);
                        while let Some(Tok::Comma) = self.peek() {
                            self.pos += 1;
                            args.push(self.expr()?);
                        }
                    }
                    self.expect_close()?;
                    if args.len() != 1 {
                        return Err(ParseError::Arity {
                            name,
                            got: args.len(),
                            offset,
                        });
                    }
                    let arg = args.pop().unwrap();
                    Ok(Node::Call(func, Box::new(arg)))
                } else if name == self.var {
                    Ok(Node::Var)
                } else if name == "pi" {
                    Ok(Node::Num(std::f64::consts::PI))
                } else if Func::from_name(&name).is_some() {
                    Err(ParseError::Arity { name, got: 0, offset })
                } else {
                    Err(ParseError::UnknownIdentifier { name, offset })
                }
            }
            other => Err(ParseError::Syntax {
                offset,
                message: format!("unexpected token {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonotoneKind {
    Identity,
    Tanh,
    Arctan,
}

/// `psi(u) = scale * base(u)` with `base` one of identity, tanh, arctan.
///
/// Every base is increasing with derivative at most 1, so `scale` is the
/// linear growth constant: `|psi(u)| <= |psi(0)| + scale*|u|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotoneScalarFn {
    pub kind: MonotoneKind,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("monotone function scale must be finite and >= 0, got {0}")]
pub struct NegativeScale(pub f64);

impl MonotoneScalarFn {
    pub fn new(kind: MonotoneKind, scale: f64) -> Result<Self, NegativeScale> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(NegativeScale(scale));
        }
        Ok(MonotoneScalarFn { kind, scale })
    }

    pub fn identity() -> Self {
        MonotoneScalarFn {
            kind: MonotoneKind::Identity,
            scale: 1.0,
        }
    }

    pub fn tanh() -> Self {
        MonotoneScalarFn {
            kind: MonotoneKind::Tanh,
            scale: 1.0,
        }
    }

    pub fn arctan() -> Self {
        MonotoneScalarFn {
            kind: MonotoneKind::Arctan,
            scale: 1.0,
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.scale
            * match self.kind {
                MonotoneKind::Identity => u,
                MonotoneKind::Tanh => u.tanh(),
                MonotoneKind::Arctan => u.atan(),
            }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        self.scale
            * match self.kind {
                MonotoneKind::Identity => 1.0,
                MonotoneKind::Tanh => {
                    let c = u.cosh();
                    if c.is_finite() {
                        1.0 / (c * c)
                    } else {
                        0.0
                    }
                }
                MonotoneKind::Arctan => 1.0 / (1.0 + u * u),
            }
    }

    /// Growth constant `c2`.
    pub fn growth(&self) -> f64 {
        self.scale
    }
}

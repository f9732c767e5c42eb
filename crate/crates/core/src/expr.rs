//! Arithmetic expressions in one real variable `x`.
//!
//! The grammar, from loosest to tightest binding:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' ['-'] integer)?
//! atom    := number | 'x' | 'pi' | func '(' sum (',' sum)* ')' | '(' sum ')'
//! ```
//!
//! Functions: `sin cos exp tanh abs` (one argument) and `min max` (two).
//! Evaluation never returns NaN or infinities: division by zero and
//! overflow are reported as [`EvalError`]s.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Abs,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// Syntax tree node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Vec<Node>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token {0:?}")]
    UnexpectedToken(String),
    #[error("invalid number literal {0:?}")]
    InvalidNumber(String),
    #[error("unknown identifier {0:?}")]
    UnknownIdentifier(String),
    #[error("{func} takes {expected} argument(s), got {found}")]
    Arity {
        func: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("exponent must be an integer literal")]
    NonIntegerExponent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("floating-point overflow")]
    Overflow,
    #[error("non-finite argument")]
    NonFiniteInput,
}

/// A parsed expression in the variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
}

impl Expression {
    pub fn parse(src: &str) -> Result<Expression, ParseError> {
        let tokens = lex(src)?;
        if tokens.is_empty() {
            return Err(ParseError {
                kind: ParseErrorKind::Empty,
                offset: 0,
            });
        }
        let mut p = Parser {
            tokens,
            pos: 0,
            end: src.len(),
        };
        let root = p.sum()?;
        if let Some(tok) = p.peek() {
            return Err(ParseError {
                kind: ParseErrorKind::UnexpectedToken(tok.tok.describe()),
                offset: tok.offset,
            });
        }
        Ok(Expression { root })
    }

    pub fn from_node(root: Node) -> Expression {
        Expression { root }
    }

    pub fn constant(c: f64) -> Expression {
        Expression { root: Node::Num(c) }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// `Some(c)` when the tree does not reference `x`.
    pub fn as_constant(&self) -> Option<f64> {
        if mentions_var(&self.root) {
            None
        } else {
            self.eval(0.0).ok()
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        if !x.is_finite() {
            return Err(EvalError::NonFiniteInput);
        }
        eval_node(&self.root, x)
    }

    /// Value and derivative with respect to `x`, by forward-mode dual arithmetic.
    pub fn eval_with_derivative(&self, x: f64) -> Result<(f64, f64), EvalError> {
        if !x.is_finite() {
            return Err(EvalError::NonFiniteInput);
        }
        eval_dual(&self.root, x)
    }
}

impl core::str::FromStr for Expression {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

fn mentions_var(node: &Node) -> bool {
    match node {
        Node::Num(_) => false,
        Node::Var => true,
        Node::Neg(a) | Node::Pow(a, _) => mentions_var(a),
        Node::Bin(_, a, b) => mentions_var(a) || mentions_var(b),
        Node::Call(_, args) => args.iter().any(mentions_var),
    }
}

fn checked(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Overflow)
    }
}

fn eval_node(node: &Node, x: f64) -> Result<f64, EvalError> {
    let v = match node {
        Node::Num(c) => *c,
        Node::Var => x,
        Node::Neg(a) => -eval_node(a, x)?,
        Node::Bin(op, a, b) => {
            let a = eval_node(a, x)?;
            let b = eval_node(b, x)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    a / b
                }
            }
        }
        Node::Pow(a, e) => {
            let a = eval_node(a, x)?;
            if a == 0.0 && *e < 0 {
                return Err(EvalError::DivisionByZero);
            }
            math::powi(a, *e)
        }
        Node::Call(f, args) => {
            let a = eval_node(&args[0], x)?;
            match f {
                Func::Sin => math::sin(a),
                Func::Cos => math::cos(a),
                Func::Exp => math::exp(a),
                Func::Tanh => math::tanh(a),
                Func::Abs => a.abs(),
                Func::Min => a.min(eval_node(&args[1], x)?),
                Func::Max => a.max(eval_node(&args[1], x)?),
            }
        }
    };
    checked(v)
}

fn eval_dual(node: &Node, x: f64) -> Result<(f64, f64), EvalError> {
    let (v, d) = match node {
        Node::Num(c) => (*c, 0.0),
        Node::Var => (x, 1.0),
        Node::Neg(a) => {
            let (v, d) = eval_dual(a, x)?;
            (-v, -d)
        }
        Node::Bin(op, a, b) => {
            let (av, ad) = eval_dual(a, x)?;
            let (bv, bd) = eval_dual(b, x)?;
            match op {
                BinOp::Add => (av + bv, ad + bd),
                BinOp::Sub => (av - bv, ad - bd),
                BinOp::Mul => (av * bv, ad * bv + av * bd),
                BinOp::Div => {
                    if bv == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    (av / bv, (ad * bv - av * bd) / (bv * bv))
                }
            }
        }
        Node::Pow(a, e) => {
            let (av, ad) = eval_dual(a, x)?;
            if av == 0.0 && *e < 1 {
                if *e == 0 {
                    (1.0, 0.0)
                } else {
                    return Err(EvalError::DivisionByZero);
                }
            } else {
                let k = *e;
                (math::powi(av, k), f64::from(k) * math::powi(av, k - 1) * ad)
            }
        }
        Node::Call(f, args) => {
            let (av, ad) = eval_dual(&args[0], x)?;
            match f {
                Func::Sin => (math::sin(av), math::cos(av) * ad),
                Func::Cos => (math::cos(av), -math::sin(av) * ad),
                Func::Exp => {
                    let e = math::exp(av);
                    (e, e * ad)
                }
                Func::Tanh => {
                    let t = math::tanh(av);
                    (t, (1.0 - t * t) * ad)
                }
                Func::Abs => {
                    let s = if av > 0.0 {
                        1.0
                    } else if av < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    (av.abs(), s * ad)
                }
                Func::Min | Func::Max => {
                    let (bv, bd) = eval_dual(&args[1], x)?;
                    let take_a = if *f == Func::Min { av <= bv } else { av >= bv };
                    if take_a {
                        (av, ad)
                    } else {
                        (bv, bd)
                    }
                }
            }
        }
    };
    Ok((checked(v)?, checked(d)?))
}

// ---------------------------------------------------------------- lexing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => v.to_string(),
            Tok::Ident(s) => s.clone(),
            Tok::Op(c) => c.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            let start = i;
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
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError {
                kind: ParseErrorKind::InvalidNumber(text.to_string()),
                offset: start,
            })?;
            out.push(Spanned {
                tok: Tok::Num(v),
                offset: start,
            });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(src[start..i].to_string()),
                offset: start,
            });
        } else if b"+-*/^(),".contains(&c) {
            out.push(Spanned {
                tok: Tok::Op(c as char),
                offset: i,
            });
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ParseError {
                kind: ParseErrorKind::UnexpectedChar(ch),
                offset: i,
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- parsing

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self, c: char) -> bool {
        matches!(self.peek(), Some(Spanned { tok: Tok::Op(o), .. }) if *o == c)
    }

    fn next(&mut self) -> Result<Spanned, ParseError> {
        let t = self.tokens.get(self.pos).cloned().ok_or(ParseError {
            kind: ParseErrorKind::UnexpectedEnd,
            offset: self.end,
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn expect_op(&mut self, c: char) -> Result<(), ParseError> {
        let t = self.next()?;
        match t.tok {
            Tok::Op(o) if o == c => Ok(()),
            other => Err(ParseError {
                kind: ParseErrorKind::UnexpectedToken(other.describe()),
                offset: t.offset,
            }),
        }
    }

    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.peek_op('+') {
                BinOp::Add
            } else if self.peek_op('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.peek_op('*') {
                BinOp::Mul
            } else if self.peek_op('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek_op('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if !self.peek_op('^') {
            return Ok(base);
        }
        self.pos += 1;
        let negative = if self.peek_op('-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let t = self.next()?;
        let exponent = match t.tok {
            Tok::Num(v) if v == math::floor(v) && v.abs() <= f64::from(i32::MAX) => v as i32,
            _ => {
                return Err(ParseError {
                    kind: ParseErrorKind::NonIntegerExponent,
                    offset: t.offset,
                })
            }
        };
        Ok(Node::Pow(
            Box::new(base),
            if negative { -exponent } else { exponent },
        ))
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let t = self.next()?;
        match t.tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Op('(') => {
                let inner = self.sum()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Node::Var),
                "pi" => Ok(Node::Num(math::PI)),
                _ => {
                    let func = Func::from_name(&name).ok_or(ParseError {
                        kind: ParseErrorKind::UnknownIdentifier(name.clone()),
                        offset: t.offset,
                    })?;
                    self.expect_op('(')?;
                    let mut args = Vec::new();
                    if !self.peek_op(')') {
                        args.push(self.sum()?);
                        while self.peek_op(',') {
                            self.pos += 1;
                            args.push(self.sum()?);
                        }
                    }
                    self.expect_op(')')?;
                    if args.len() != func.arity() {
                        return Err(ParseError {
                            kind: ParseErrorKind::Arity {
                                func: func.name(),
                                expected: func.arity(),
                                found: args.len(),
                            },
                            offset: t.offset,
                        });
                    }
                    Ok(Node::Call(func, args))
                }
            },
            other => Err(ParseError {
                kind: ParseErrorKind::UnexpectedToken(other.describe()),
                offset: t.offset,
            }),
        }
    }
}

// ---------------------------------------------------------------- printing

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Node::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Node::Neg(_) => 3,
        Node::Num(v) if v.is_sign_negative() => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, node: &Node, min_prec: u8) -> fmt::Result {
    if precedence(node) < min_prec {
        write!(f, "(")?;
        write_node(f, node)?;
        write!(f, ")")
    } else {
        write_node(f, node)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node) -> fmt::Result {
    match node {
        Node::Num(v) => {
            if v.is_sign_negative() {
                write!(f, "-{}", -v)
            } else {
                write!(f, "{v}")
            }
        }
        Node::Var => write!(f, "x"),
        Node::Neg(a) => {
            write!(f, "-")?;
            write_child(f, a, 3)
        }
        Node::Bin(op, a, b) => {
            let (sym, p) = match op {
                BinOp::Add => ('+', 1),
                BinOp::Sub => ('-', 1),
                BinOp::Mul => ('*', 2),
                BinOp::Div => ('/', 2),
            };
            write_child(f, a, p)?;
            write!(f, " {sym} ")?;
            write_child(f, b, p + 1)
        }
        Node::Pow(a, e) => {
            write_child(f, a, 5)?;
            write!(f, "^{e}")
        }
        Node::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write_node(f, a)?;
            }
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root)
    }
}

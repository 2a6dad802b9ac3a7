//! Arithmetic expressions for the potential `q(x)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          // right associative
//! atom    := number | 'x' | func '(' sum ')' | '(' sum ')'
//! func    := sin | cos | exp | sinh | cosh
//! ```
//!
//! Exponents must evaluate to integers.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },

    #[error("evaluation error at x = {x}: {message}")]
    Eval { x: f64, message: String },
}

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
    Exp,
    Sinh,
    Cosh,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "sinh" => Some(Func::Sinh),
            "cosh" => Some(Func::Cosh),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    X,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, x: f64) -> Result<f64, ExprError> {
        let v = match self {
            Node::Num(v) => *v,
            Node::X => x,
            Node::Neg(e) => -e.eval(x)?,
            Node::Call(f, e) => f.apply(e.eval(x)?),
            Node::Bin(op, l, r) => {
                let l = l.eval(x)?;
                let r = r.eval(x)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Pow => {
                        if r.fract() != 0.0 || r.abs() > i32::MAX as f64 {
                            return Err(ExprError::Eval {
                                x,
                                message: format!("non-integer exponent {r}"),
                            });
                        }
                        l.powi(r as i32)
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Eval {
                x,
                message: "non-finite result".to_string(),
            })
        }
    }

    fn depends_on_x(&self) -> bool {
        match self {
            Node::Num(_) => false,
            Node::X => true,
            Node::Neg(e) | Node::Call(_, e) => e.depends_on_x(),
            Node::Bin(_, l, r) => l.depends_on_x() || r.depends_on_x(),
        }
    }
}

impl fmt::Display for Node {
    // Fully parenthesized, so printing and re-parsing gives back the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
                write!(f, "(-{:?})", -v)
            }
            Node::Num(v) => write!(f, "{v:?}"),
            Node::X => write!(f, "x"),
            Node::Neg(e) => write!(f, "(-{e})"),
            Node::Call(func, e) => write!(f, "{}({e})", func.name()),
            Node::Bin(op, l, r) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({l} {sym} {r})")
            }
        }
    }
}

/// A parsed potential. Immutable once built; cloning copies the tree.
/// Equality compares trees, not source text.
#[derive(Debug, Clone)]
pub struct PotentialExpr {
    source: String,
    root: Node,
    constant: Option<f64>,
}

impl PotentialExpr {
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        let root = Parser::new(text).parse()?;
        Ok(Self::from_node(text.to_string(), root))
    }

    pub fn constant(value: f64) -> Self {
        Self::from_node(format!("{value:?}"), Node::Num(value))
    }

    fn from_node(source: String, root: Node) -> Self {
        let constant = if root.depends_on_x() { None } else { root.eval(0.0).ok() };
        Self { source, root, constant }
    }

    /// The expression `-(self)`.
    pub fn negated(&self) -> Self {
        let root = Node::Neg(Box::new(self.root.clone()));
        Self::from_node(format!("-({})", self.source), root)
    }

    pub fn eval(&self, x: f64) -> Result<f64, ExprError> {
        match self.constant {
            Some(c) => Ok(c),
            None => self.root.eval(x),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tree(&self) -> &Node {
        &self.root
    }

    /// Value when the expression does not depend on `x`.
    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }
}

impl PartialEq for PotentialExpr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl fmt::Display for PotentialExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

impl Serialize for PotentialExpr {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for PotentialExpr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        PotentialExpr::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
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

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    tok: Tok,
    tok_at: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            text,
            pos: 0,
            tok: Tok::End,
            tok_at: 0,
        }
    }

    fn parse(mut self) -> Result<Node, ExprError> {
        self.advance()?;
        if self.tok == Tok::End {
            return Err(self.error("empty expression"));
        }
        let node = self.sum()?;
        if self.tok != Tok::End {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(node)
    }

    fn error(&self, message: &str) -> ExprError {
        ExprError::Parse {
            offset: self.tok_at,
            message: message.to_string(),
        }
    }

    fn advance(&mut self) -> Result<(), ExprError> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_at = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            self.tok = Tok::End;
            return Ok(());
        };
        self.tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => return self.number(),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                    self.pos += 1;
                }
                self.tok = Tok::Ident(self.text[start..self.pos].to_string());
                return Ok(());
            }
            _ => {
                let ch = self.text[self.pos..].chars().next().unwrap_or('?');
                return Err(self.error(&format!("unexpected character '{ch}'")));
            }
        };
        self.pos += 1;
        Ok(())
    }

    fn number(&mut self) -> Result<(), ExprError> {
        let bytes = self.text.as_bytes();
        let start = self.pos;
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - s
        };
        let mut p = self.pos;
        let mut n = digits(&mut p);
        if p < bytes.len() && bytes[p] == b'.' {
            p += 1;
            n += digits(&mut p);
        }
        if n == 0 {
            return Err(self.error("malformed number"));
        }
        if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
            let mut q = p + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) > 0 {
                p = q;
            }
        }
        let value: f64 = self.text[start..p]
            .parse()
            .map_err(|_| self.error("malformed number"))?;
        if !value.is_finite() {
            return Err(self.error("number out of range"));
        }
        self.pos = p;
        self.tok = Tok::Num(value);
        Ok(())
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if self.tok == tok {
            self.advance()
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn sum(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.product()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.tok == Tok::Minus {
            self.advance()?;
            let inner = self.unary()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.tok == Tok::Caret {
            self.advance()?;
            let exponent = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.advance()?;
                Ok(Node::Num(v))
            }
            Tok::LParen => {
                self.advance()?;
                let inner = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let at = self.tok_at;
                if name == "x" {
                    self.advance()?;
                    return Ok(Node::X);
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(ExprError::UnknownIdentifier { offset: at, name });
                };
                self.advance()?;
                self.expect(Tok::LParen, "'(' after function name")?;
                let arg = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(Node::Call(func, Box::new(arg)))
            }
            Tok::End => Err(self.error("unexpected end of input")),
            _ => Err(self.error("expected a number, 'x', a function or '('")),
        }
    }
}

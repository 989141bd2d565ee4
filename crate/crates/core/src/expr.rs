//! Text expressions for level sets and integrands.
//!
//! Grammar (standard precedence, `^` right-associative and binding tighter
//! than unary minus, so `-x^2 == -(x^2)`):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Variables are `x`, `y` and (in 3-D) `z`; constants `pi` and `e`; functions
//! `sin cos tan exp log sqrt abs tanh`. Evaluation carries the value and all
//! first partials through the tree at once (forward mode).

use std::fmt;

use thiserror::Error;

use crate::field::ScalarField;
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("variable `{variable}` not available in dimension {dim}")]
    Dimension { variable: String, dim: usize },
    #[error("point has {got} coordinates, expression expects {expected}")]
    PointDimension { expected: usize, got: usize },
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
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "tanh" => Func::Tanh,
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
            Func::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// A parsed expression in `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    dim: usize,
}

/// Value and gradient of an expression at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DualValue {
    pub value: f64,
    pub partials: Vec<f64>,
    /// Set when an operation left its real domain (log/sqrt of a negative,
    /// fractional power of a negative base); the value is then NaN.
    pub domain_error: bool,
}

const VARS: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
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
            let lit = &text[start..i];
            let v: f64 = lit.parse().map_err(|_| ExprError::Syntax {
                position: start,
                message: format!("bad number `{lit}`"),
            })?;
            if !v.is_finite() {
                return Err(ExprError::Syntax {
                    position: start,
                    message: format!("number `{lit}` overflows"),
                });
            }
            out.push((start, Token::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Token::Ident(text[start..i].to_string())));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Token::Op(c),
                '(' => Token::LParen,
                ')' => Token::RParen,
                _ => {
                    return Err(ExprError::Syntax {
                        position: i,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            };
            out.push((i, tok));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [(usize, Token)],
    pos: usize,
    end: usize,
    dim: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            position: self.offset(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek() {
            let op = if *op == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek() {
            let op = if *op == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                if let Some(Token::LParen) = self.peek() {
                    let func = Func::from_name(&name)
                        .ok_or_else(|| ExprError::UnknownIdentifier(name.clone()))?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    _ => match VARS.iter().position(|v| *v == name) {
                        Some(k) if k < self.dim => Ok(Node::Var(k)),
                        Some(_) => Err(ExprError::Dimension {
                            variable: name,
                            dim: self.dim,
                        }),
                        None => Err(ExprError::UnknownIdentifier(name)),
                    },
                }
            }
            Some(tok) => self.error(format!("unexpected token {tok:?}")),
            None => self.error("unexpected end of input"),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        match self.peek() {
            Some(Token::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.error("expected `)`"),
        }
    }
}

/// Forward-mode value with up to three partials.
#[derive(Debug, Clone, Copy)]
struct Dual {
    v: f64,
    d: [f64; 3],
}

impl Dual {
    fn constant(v: f64) -> Self {
        Dual { v, d: [0.0; 3] }
    }

    fn is_constant(&self) -> bool {
        self.d.iter().all(|&x| x == 0.0)
    }

    /// Chain rule for a unary function with value `v` and derivative `dv`.
    fn chain(&self, v: f64, dv: f64) -> Self {
        Dual {
            v,
            d: self.d.map(|x| dv * x),
        }
    }
}

impl Expression {
    pub fn parse(text: &str, dim: usize) -> Result<Self, ExprError> {
        if !(dim == 2 || dim == 3) {
            return Err(ExprError::Dimension {
                variable: String::new(),
                dim,
            });
        }
        if text.trim().is_empty() {
            return Err(ExprError::Syntax {
                position: 0,
                message: "empty expression".into(),
            });
        }
        let tokens = tokenize(text)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            end: text.len(),
            dim,
        };
        let root = parser.expr()?;
        if parser.pos != tokens.len() {
            return parser.error("trailing input");
        }
        Ok(Expression { root, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Value only.
    pub fn eval(&self, p: &[f64]) -> Result<f64, ExprError> {
        self.check_dim(p)?;
        Ok(eval_value(&self.root, p))
    }

    pub fn eval_with_gradient(&self, p: &[f64]) -> Result<DualValue, ExprError> {
        self.check_dim(p)?;
        let mut flag = false;
        let r = eval_dual(&self.root, p, &mut flag);
        Ok(DualValue {
            value: r.v,
            partials: r.d[..self.dim].to_vec(),
            domain_error: flag || r.v.is_nan(),
        })
    }

    fn check_dim(&self, p: &[f64]) -> Result<(), ExprError> {
        if p.len() != self.dim {
            return Err(ExprError::PointDimension {
                expected: self.dim,
                got: p.len(),
            });
        }
        Ok(())
    }
}

fn eval_value(node: &Node, p: &[f64]) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::Var(k) => p[*k],
        Node::Neg(a) => -eval_value(a, p),
        Node::Binary(op, a, b) => {
            let a = eval_value(a, p);
            match (op, &**b) {
                (BinOp::Pow, Node::Num(n)) if is_small_integer(*n) => a.powi(*n as i32),
                _ => {
                    let b = eval_value(b, p);
                    match op {
                        BinOp::Add => a + b,
                        BinOp::Sub => a - b,
                        BinOp::Mul => a * b,
                        BinOp::Div => a / b,
                        BinOp::Pow => power_value(a, b),
                    }
                }
            }
        }
        Node::Call(f, a) => {
            let x = eval_value(a, p);
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Tan => x.tan(),
                Func::Exp => x.exp(),
                Func::Log => x.ln(),
                Func::Sqrt => x.sqrt(),
                Func::Abs => x.abs(),
                Func::Tanh => x.tanh(),
            }
        }
    }
}

fn is_small_integer(n: f64) -> bool {
    n.fract() == 0.0 && n.abs() <= i32::MAX as f64
}

fn power_value(a: f64, b: f64) -> f64 {
    if is_small_integer(b) {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn eval_dual(node: &Node, p: &[f64], flag: &mut bool) -> Dual {
    match node {
        Node::Num(v) => Dual::constant(*v),
        Node::Var(k) => {
            let mut d = [0.0; 3];
            d[*k] = 1.0;
            Dual { v: p[*k], d }
        }
        Node::Neg(a) => {
            let a = eval_dual(a, p, flag);
            a.chain(-a.v, -1.0)
        }
        Node::Binary(op, a, b) => {
            let a = eval_dual(a, p, flag);
            let b = eval_dual(b, p, flag);
            let mut d = [0.0; 3];
            let v = match op {
                BinOp::Add => {
                    for k in 0..3 {
                        d[k] = a.d[k] + b.d[k];
                    }
                    a.v + b.v
                }
                BinOp::Sub => {
                    for k in 0..3 {
                        d[k] = a.d[k] - b.d[k];
                    }
                    a.v - b.v
                }
                BinOp::Mul => {
                    for k in 0..3 {
                        d[k] = a.d[k] * b.v + a.v * b.d[k];
                    }
                    a.v * b.v
                }
                BinOp::Div => {
                    let inv = 1.0 / b.v;
                    let q = a.v * inv;
                    for k in 0..3 {
                        d[k] = (a.d[k] - q * b.d[k]) * inv;
                    }
                    q
                }
                BinOp::Pow => return power_dual(a, b, flag),
            };
            Dual { v, d }
        }
        Node::Call(f, a) => {
            let a = eval_dual(a, p, flag);
            let x = a.v;
            match f {
                Func::Sin => a.chain(x.sin(), x.cos()),
                Func::Cos => a.chain(x.cos(), -x.sin()),
                Func::Tan => {
                    let t = x.tan();
                    a.chain(t, 1.0 + t * t)
                }
                Func::Exp => {
                    let e = x.exp();
                    a.chain(e, e)
                }
                Func::Log => {
                    if x < 0.0 {
                        *flag = true;
                    }
                    a.chain(x.ln(), 1.0 / x)
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        *flag = true;
                    }
                    let s = x.sqrt();
                    a.chain(s, 0.5 / s)
                }
                Func::Abs => {
                    let slope = if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    a.chain(x.abs(), slope)
                }
                Func::Tanh => {
                    let t = x.tanh();
                    a.chain(t, 1.0 - t * t)
                }
            }
        }
    }
}

fn power_dual(a: Dual, b: Dual, flag: &mut bool) -> Dual {
    if b.is_constant() {
        if is_small_integer(b.v) {
            let n = b.v as i32;
            let v = a.v.powi(n);
            let slope = if n == 0 { 0.0 } else { f64::from(n) * a.v.powi(n - 1) };
            return a.chain(v, slope);
        }
        if a.v < 0.0 {
            *flag = true;
            return Dual {
                v: f64::NAN,
                d: [f64::NAN; 3],
            };
        }
        let v = a.v.powf(b.v);
        return a.chain(v, b.v * a.v.powf(b.v - 1.0));
    }
    if a.v < 0.0 {
        *flag = true;
    }
    // d(a^b) = a^b (b' ln a + b a'/a)
    let v = a.v.powf(b.v);
    let ln_a = a.v.ln();
    let mut d = [0.0; 3];
    for k in 0..3 {
        let from_base = if a.d[k] == 0.0 { 0.0 } else { b.v * a.d[k] / a.v };
        d[k] = v * (b.d[k] * ln_a + from_base);
    }
    Dual { v, d }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v:?}"),
            Node::Var(k) => f.write_str(VARS[*k]),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                    BinOp::Pow => '^',
                };
                write!(f, "({a}{sym}{b})")
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl<const D: usize> ScalarField<D> for Expression {
    fn value(&self, p: &Point<D>) -> f64 {
        debug_assert_eq!(D, self.dim);
        eval_value(&self.root, &p.0)
    }

    fn value_and_gradient(&self, p: &Point<D>) -> (f64, Point<D>) {
        debug_assert_eq!(D, self.dim);
        let mut flag = false;
        let r = eval_dual(&self.root, &p.0, &mut flag);
        let mut g = [0.0; D];
        g.copy_from_slice(&r.d[..D]);
        let v = if flag { f64::NAN } else { r.v };
        (v, Point(g))
    }
}

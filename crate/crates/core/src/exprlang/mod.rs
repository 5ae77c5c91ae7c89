//! Scalar-field expressions: parsing, exact evaluation and forward-mode
//! differentiation.
//!
//! Variables are `x1 .. xn` (1-based) and `r`, the Euclidean norm of the
//! evaluation point. Functions: `exp`, `log` (alias `ln`), `abs`, `sqrt`,
//! `max(a, b)`, `min(a, b)`. Named constants: `pi`, `e`. See [`parser`] for
//! the grammar.
//!
//! `abs`, `max` and `min` are evaluated exactly. Their derivatives at a kink
//! take the right-hand branch (`abs'(0) = 1`, ties in `max`/`min` follow the
//! first argument); [`Expr::kink_distance`] reports how close a point is to
//! such a locus so callers can refuse to trust derivatives there.

mod dual;
mod logabs;
pub mod parser;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub use dual::Dual;
pub use logabs::LogAbs;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable '{name}' at offset {offset} exceeds dimension {dim}")]
    VariableOutOfRange { name: String, dim: usize, offset: usize },
    #[error("'{name}' at offset {offset} takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("dimension must be positive")]
    ZeroDimension,
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::VariableOutOfRange { offset, .. }
            | ParseError::Arity { offset, .. } => Some(*offset),
            ParseError::ZeroDimension => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("domain error in {node}: {reason}")]
    Domain { node: String, reason: String },
    #[error("point has dimension {found}, expression expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Abs,
    Sqrt,
    Max,
    Min,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Max => "max",
            Func::Min => "min",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Max | Func::Min => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Zero-based coordinate index.
    Var(usize),
    /// Euclidean norm of the point.
    Radius,
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "(-{:?})", -c)
                } else {
                    write!(f, "{c:?}")
                }
            }
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Radius => f.write_str("r"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A parsed expression over `dim` coordinates. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    dim: usize,
}

/// Parses `text` as an expression over `dim` coordinates.
pub fn parse(text: &str, dim: usize) -> Result<Expr, ParseError> {
    Expr::parse(text, dim)
}

impl Expr {
    pub fn parse(text: &str, dim: usize) -> Result<Self, ParseError> {
        if dim == 0 {
            return Err(ParseError::ZeroDimension);
        }
        let root = parser::parse_node(text, dim)?;
        Ok(Self { root, dim })
    }

    pub fn constant(c: f64, dim: usize) -> Self {
        Self {
            root: Node::Const(c),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    fn check_dim(&self, len: usize) -> Result<(), EvalError> {
        if len == self.dim {
            Ok(())
        } else {
            Err(EvalError::DimensionMismatch {
                expected: self.dim,
                found: len,
            })
        }
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.check_dim(point.len())?;
        eval_node(&self.root, point)
    }

    /// Value and exact directional derivative along `dir`.
    pub fn directional_derivative(&self, point: &[f64], dir: &[f64]) -> Result<(f64, f64), EvalError> {
        self.check_dim(point.len())?;
        self.check_dim(dir.len())?;
        let seeded: Vec<Dual> = point.iter().zip(dir).map(|(&x, &d)| Dual::new(x, d)).collect();
        let out = eval_node(&self.root, &seeded)?;
        Ok((out.value, out.deriv))
    }

    /// Exact gradient, one dual pass per coordinate.
    pub fn gradient(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.check_dim(point.len())?;
        let mut dir = vec![0.0; self.dim];
        let mut grad = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            dir[i] = 1.0;
            grad.push(self.directional_derivative(point, &dir)?.1);
            dir[i] = 0.0;
        }
        Ok(grad)
    }

    /// Row-major Hessian from central differences of the exact gradient,
    /// step `1e-4·(1 + |point|)`. Not symmetrized.
    pub fn hessian_fd(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.check_dim(point.len())?;
        let n = self.dim;
        let h = 1e-4 * (1.0 + norm(point));
        let mut out = vec![0.0; n * n];
        let mut shifted = point.to_vec();
        for i in 0..n {
            shifted[i] = point[i] + h;
            let plus = self.gradient(&shifted)?;
            shifted[i] = point[i] - h;
            let minus = self.gradient(&shifted)?;
            shifted[i] = point[i];
            for j in 0..n {
                out[i * n + j] = (plus[j] - minus[j]) / (2.0 * h);
            }
        }
        Ok(out)
    }

    /// Smallest distance-like gap to a nondifferentiable locus: `|arg|` for
    /// every `abs`, `|a - b|` for every `max`/`min`, and `|x|` wherever `r`
    /// appears. `f64::INFINITY` when the expression has no kinks.
    pub fn kink_distance(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.check_dim(point.len())?;
        let mut best = f64::INFINITY;
        kink_walk(&self.root, point, &mut best)?;
        Ok(best)
    }

    /// Sign and natural log of `|value|`, evaluated without forming the
    /// value itself so that `exp(0.5*r)` at `r = 1e12` stays representable.
    pub fn evaluate_log_abs(&self, point: &[f64]) -> Result<LogAbs, EvalError> {
        self.check_dim(point.len())?;
        logabs::eval(&self.root, point)
    }

    /// Applies `f` to the root, keeping the dimension.
    pub fn map_root(self, f: impl FnOnce(Node) -> Node) -> Self {
        Self {
            root: f(self.root),
            dim: self.dim,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Arithmetic shared by the plain and dual evaluators.
trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn lift(c: f64) -> Self;
    fn val(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn max(self, o: Self) -> Self;
    fn min(self, o: Self) -> Self;
    fn powf(self, k: f64) -> Self;
    fn pow(self, o: Self) -> Self;
    fn is_const(self) -> bool;
    fn norm(xs: &[Self]) -> Self;
}

impl Scalar for f64 {
    fn lift(c: f64) -> Self {
        c
    }
    fn val(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn max(self, o: Self) -> Self {
        if self >= o {
            self
        } else {
            o
        }
    }
    fn min(self, o: Self) -> Self {
        if self <= o {
            self
        } else {
            o
        }
    }
    fn powf(self, k: f64) -> Self {
        f64::powf(self, k)
    }
    fn pow(self, o: Self) -> Self {
        f64::powf(self, o)
    }
    fn is_const(self) -> bool {
        true
    }
    fn norm(xs: &[Self]) -> Self {
        norm(xs)
    }
}

impl Scalar for Dual {
    fn lift(c: f64) -> Self {
        Dual::constant(c)
    }
    fn val(self) -> f64 {
        self.value
    }
    fn exp(self) -> Self {
        Dual::exp(self)
    }
    fn ln(self) -> Self {
        Dual::ln(self)
    }
    fn sqrt(self) -> Self {
        Dual::sqrt(self)
    }
    fn abs(self) -> Self {
        Dual::abs(self)
    }
    fn max(self, o: Self) -> Self {
        Dual::max(self, o)
    }
    fn min(self, o: Self) -> Self {
        Dual::min(self, o)
    }
    fn powf(self, k: f64) -> Self {
        Dual::powf(self, k)
    }
    fn pow(self, o: Self) -> Self {
        Dual::pow(self, o)
    }
    fn is_const(self) -> bool {
        self.deriv == 0.0
    }
    fn norm(xs: &[Self]) -> Self {
        let r = xs.iter().map(|x| x.value * x.value).sum::<f64>().sqrt();
        if r > 0.0 {
            let dot: f64 = xs.iter().map(|x| x.value * x.deriv).sum();
            Dual::new(r, dot / r)
        } else {
            // one-sided derivative of |x| at the origin along the seed
            let d = xs.iter().map(|x| x.deriv * x.deriv).sum::<f64>().sqrt();
            Dual::new(0.0, d)
        }
    }
}

fn domain(node: &Node, reason: impl Into<String>) -> EvalError {
    EvalError::Domain {
        node: node.to_string(),
        reason: reason.into(),
    }
}

fn eval_node<T: Scalar>(node: &Node, point: &[T]) -> Result<T, EvalError> {
    match node {
        Node::Const(c) => Ok(T::lift(*c)),
        Node::Var(i) => Ok(point[*i]),
        Node::Radius => Ok(T::norm(point)),
        Node::Neg(a) => Ok(-eval_node(a, point)?),
        Node::Binary(op, a, b) => {
            let x = eval_node(a, point)?;
            let y = eval_node(b, point)?;
            match op {
                BinOp::Add => Ok(x + y),
                BinOp::Sub => Ok(x - y),
                BinOp::Mul => Ok(x * y),
                BinOp::Div => {
                    if y.val() == 0.0 {
                        Err(domain(node, "division by zero"))
                    } else {
                        Ok(x / y)
                    }
                }
                BinOp::Pow => {
                    let (base, k) = (x.val(), y.val());
                    if y.is_const() {
                        if base < 0.0 && k.fract() != 0.0 {
                            return Err(domain(
                                node,
                                format!("negative base {base} with non-integer exponent {k}"),
                            ));
                        }
                        if base == 0.0 && k < 0.0 {
                            return Err(domain(node, "zero base with negative exponent"));
                        }
                        Ok(x.powf(k))
                    } else if base > 0.0 {
                        Ok(x.pow(y))
                    } else {
                        Err(domain(
                            node,
                            format!("variable exponent needs a positive base, got {base}"),
                        ))
                    }
                }
            }
        }
        Node::Call(func, args) => {
            let a = eval_node(&args[0], point)?;
            match func {
                Func::Exp => Ok(a.exp()),
                Func::Log => {
                    if a.val() <= 0.0 {
                        Err(domain(node, format!("log of nonpositive value {}", a.val())))
                    } else {
                        Ok(a.ln())
                    }
                }
                Func::Sqrt => {
                    if a.val() < 0.0 {
                        Err(domain(node, format!("sqrt of negative value {}", a.val())))
                    } else {
                        Ok(a.sqrt())
                    }
                }
                Func::Abs => Ok(a.abs()),
                Func::Max => Ok(a.max(eval_node(&args[1], point)?)),
                Func::Min => Ok(a.min(eval_node(&args[1], point)?)),
            }
        }
    }
}

fn kink_walk(node: &Node, point: &[f64], best: &mut f64) -> Result<(), EvalError> {
    match node {
        Node::Const(_) | Node::Var(_) => {}
        Node::Radius => *best = best.min(norm(point)),
        Node::Neg(a) => kink_walk(a, point, best)?,
        Node::Binary(_, a, b) => {
            kink_walk(a, point, best)?;
            kink_walk(b, point, best)?;
        }
        Node::Call(func, args) => {
            for a in args {
                kink_walk(a, point, best)?;
            }
            match func {
                Func::Abs => *best = best.min(eval_node(&args[0], point)?.abs()),
                Func::Max | Func::Min => {
                    let gap = eval_node(&args[0], point)? - eval_node(&args[1], point)?;
                    *best = best.min(gap.abs());
                }
                _ => {}
            }
        }
    }
    Ok(())
}

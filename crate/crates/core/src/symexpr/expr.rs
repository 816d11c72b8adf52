use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Scalar expression over state variables `x1..xn`.
///
/// Variable indices are 1-based. `Add` and `Mul` are n-ary so that the
/// canonical form produced by [`simplify`](super::simplify) can keep sums
/// and products flattened.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn zero() -> Self {
        Expr::Const(0.0)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        Expr::Add(vec![a, b])
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        Expr::Mul(vec![a, b])
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, k: u32) -> Self {
        Expr::Pow(Box::new(a), k)
    }

    pub fn neg(a: Expr) -> Self {
        Expr::Neg(Box::new(a))
    }

    /// Number of nodes in the tree.
    pub fn node_count(&self) -> usize {
        1 + match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Pow(a, _) => {
                a.node_count()
            }
            Expr::Sub(a, b) | Expr::Div(a, b) => a.node_count() + b.node_count(),
            Expr::Add(xs) | Expr::Mul(xs) => xs.iter().map(Expr::node_count).sum(),
        }
    }

    /// Largest variable index referenced, 0 if none.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => *i,
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Pow(a, _) => {
                a.max_var()
            }
            Expr::Sub(a, b) | Expr::Div(a, b) => a.max_var().max(b.max_var()),
            Expr::Add(xs) | Expr::Mul(xs) => xs.iter().map(Expr::max_var).max().unwrap_or(0),
        }
    }

    /// Evaluates at `x` (`x[0]` is `x1`). Division by an exact zero is an error
    /// carrying the offending subexpression.
    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *x.get(i - 1).ok_or(EvalError::MissingVariable {
                index: *i,
                len: x.len(),
            })?,
            Expr::Neg(a) => -a.eval(x)?,
            Expr::Sin(a) => a.eval(x)?.sin(),
            Expr::Cos(a) => a.eval(x)?.cos(),
            Expr::Exp(a) => a.eval(x)?.exp(),
            Expr::Add(xs) => {
                let mut acc = 0.0;
                for e in xs {
                    acc += e.eval(x)?;
                }
                acc
            }
            Expr::Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Expr::Mul(xs) => {
                let mut acc = 1.0;
                for e in xs {
                    acc *= e.eval(x)?;
                }
                acc
            }
            Expr::Div(a, b) => {
                let den = b.eval(x)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero {
                        subexpr: self.to_string(),
                    });
                }
                a.eval(x)? / den
            }
            Expr::Pow(a, k) => powi(a.eval(x)?, *k),
        })
    }

    fn rank(&self) -> u8 {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(_) => 1,
            Expr::Neg(_) => 2,
            Expr::Sin(_) => 3,
            Expr::Cos(_) => 4,
            Expr::Exp(_) => 5,
            Expr::Add(_) => 6,
            Expr::Sub(..) => 7,
            Expr::Mul(_) => 8,
            Expr::Div(..) => 9,
            Expr::Pow(..) => 10,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(_) | Expr::Sub(..) => 1,
            Expr::Mul(_) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if *c < 0.0 => 3,
            _ => 5,
        }
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::Const(c)
    }
}

pub(crate) fn powi(base: f64, k: u32) -> f64 {
    if k <= i32::MAX as u32 {
        base.powi(k as i32)
    } else {
        base.powf(k as f64)
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        use Expr::*;
        match (self, other) {
            (Const(a), Const(b)) => a.total_cmp(b),
            (Var(a), Var(b)) => a.cmp(b),
            (Neg(a), Neg(b)) | (Sin(a), Sin(b)) | (Cos(a), Cos(b)) | (Exp(a), Exp(b)) => a.cmp(b),
            (Add(a), Add(b)) | (Mul(a), Mul(b)) => a.cmp(b),
            (Sub(a1, a2), Sub(b1, b2)) | (Div(a1, a2), Div(b1, b2)) => {
                a1.cmp(b1).then_with(|| a2.cmp(b2))
            }
            (Pow(a, i), Pow(b, j)) => a.cmp(b).then(i.cmp(j)),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Expr {}

impl std::hash::Hash for Expr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Expr::Const(c) => c.to_bits().hash(state),
            Expr::Var(i) => i.hash(state),
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.hash(state),
            Expr::Pow(a, k) => {
                a.hash(state);
                k.hash(state);
            }
            Expr::Sub(a, b) | Expr::Div(a, b) => {
                a.hash(state);
                b.hash(state);
            }
            Expr::Add(xs) | Expr::Mul(xs) => xs.hash(state),
        }
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    // `{:?}` is the shortest representation that parses back to the same bits.
    if c < 0.0 {
        write!(f, "(-{:?})", -c)
    } else {
        write!(f, "{c:?}")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write_const(f, *c),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 4)
            }
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Add(xs) => {
                if xs.is_empty() {
                    return write!(f, "0.0");
                }
                for (k, e) in xs.iter().enumerate() {
                    if k > 0 {
                        write!(f, " + ")?;
                    }
                    write_child(f, e, if k == 0 { 1 } else { 2 })?;
                }
                Ok(())
            }
            Expr::Sub(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " - ")?;
                write_child(f, b, 2)
            }
            Expr::Mul(xs) => {
                if xs.is_empty() {
                    return write!(f, "1.0");
                }
                for (k, e) in xs.iter().enumerate() {
                    if k > 0 {
                        write!(f, "*")?;
                    }
                    write_child(f, e, if k == 0 { 2 } else { 3 })?;
                }
                Ok(())
            }
            Expr::Div(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "/")?;
                write_child(f, b, 3)
            }
            Expr::Pow(a, k) => {
                write_child(f, a, 5)?;
                write!(f, "^{k}")
            }
        }
    }
}

/// A scalar function on R^n.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScalarField {
    dim: usize,
    body: Expr,
}

impl ScalarField {
    /// Wraps `body`, checking that it only references `x1..x{dim}`.
    pub fn new(dim: usize, body: Expr) -> Result<Self, super::ParseError> {
        let max = body.max_var();
        if dim == 0 || max > dim {
            return Err(super::ParseError {
                position: 0,
                kind: super::ParseErrorKind::UnknownVariable(max),
            });
        }
        Ok(Self { dim, body })
    }

    pub(crate) fn new_unchecked(dim: usize, body: Expr) -> Self {
        debug_assert!(body.max_var() <= dim);
        Self { dim, body }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new_unchecked(dim, Expr::Const(c))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    pub fn into_body(self) -> Expr {
        self.body
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        if x.len() != self.dim {
            return Err(EvalError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        self.body.eval(x)
    }

    pub fn node_count(&self) -> usize {
        self.body.node_count()
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.body.fmt(f)
    }
}

//! Scalar expressions over state variables `x1..xn`: parsing, evaluation,
//! symbolic partial derivatives and canonical simplification.

mod compile;
mod expr;
mod parse;
mod simplify;

use thiserror::Error;

pub use compile::CompiledExpr;
pub use expr::{Expr, ScalarField};
pub use parse::{parse, parse_expr};
pub use simplify::simplify;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at byte {position}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character '{0}'")]
    Unexpected(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expected '{0}', found {1:?}")]
    Expected(char, Option<char>),
    #[error("expected a number")]
    ExpectedNumber,
    #[error("unknown variable x{0}")]
    UnknownVariable(usize),
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("exponent {0} is not a non-negative integer")]
    NonIntegerExponent(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero in `{subexpr}`")]
    DivisionByZero { subexpr: String },
    #[error("point has {got} coordinates, field expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable x{index} is out of range for a point of length {len}")]
    MissingVariable { index: usize, len: usize },
}

/// Raw symbolic derivative with respect to `x{i}`, before simplification.
fn derive(e: &Expr, i: usize) -> Expr {
    match e {
        Expr::Const(_) => Expr::zero(),
        Expr::Var(j) => Expr::Const(if *j == i { 1.0 } else { 0.0 }),
        Expr::Neg(a) => Expr::neg(derive(a, i)),
        Expr::Sin(a) => Expr::mul(Expr::Cos(a.clone()), derive(a, i)),
        Expr::Cos(a) => Expr::neg(Expr::mul(Expr::Sin(a.clone()), derive(a, i))),
        Expr::Exp(a) => Expr::mul(e.clone(), derive(a, i)),
        Expr::Add(xs) => Expr::Add(xs.iter().map(|x| derive(x, i)).collect()),
        Expr::Sub(a, b) => Expr::sub(derive(a, i), derive(b, i)),
        Expr::Mul(xs) => Expr::Add(
            (0..xs.len())
                .map(|k| {
                    let mut factors = xs.clone();
                    factors[k] = derive(&xs[k], i);
                    Expr::Mul(factors)
                })
                .collect(),
        ),
        Expr::Div(a, b) => Expr::div(
            Expr::sub(
                Expr::mul(derive(a, i), (**b).clone()),
                Expr::mul((**a).clone(), derive(b, i)),
            ),
            Expr::pow((**b).clone(), 2),
        ),
        Expr::Pow(_, 0) => Expr::zero(),
        Expr::Pow(a, k) => Expr::Mul(vec![
            Expr::Const(*k as f64),
            Expr::pow((**a).clone(), k - 1),
            derive(a, i),
        ]),
    }
}

/// Canonically simplified partial derivative of `e` with respect to `x{i}`.
pub fn partial_expr(e: &Expr, i: usize) -> Expr {
    simplify(&derive(e, i))
}

/// Symbolic partial derivative `∂field/∂x{i}`; `None` when `i` is outside `1..=n`.
pub fn partial(field: &ScalarField, i: usize) -> Option<ScalarField> {
    if i == 0 || i > field.dim() {
        return None;
    }
    Some(ScalarField::new_unchecked(
        field.dim(),
        partial_expr(field.body(), i),
    ))
}

/// Gradient as a vector of simplified partials.
pub fn gradient(field: &ScalarField) -> Vec<ScalarField> {
    (1..=field.dim())
        .filter_map(|i| partial(field, i))
        .collect()
}

impl ScalarField {
    pub fn simplified(&self) -> ScalarField {
        ScalarField::new_unchecked(self.dim(), simplify(self.body()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v3() -> ScalarField {
        parse("0.5*x1^2 + 0.25*x2^4 + 0.5*x3^2", 3).unwrap()
    }

    #[test]
    fn partial_of_quartic_term() {
        let d = partial(&v3(), 2).unwrap();
        assert_eq!(*d.body(), Expr::pow(Expr::Var(2), 3));
    }

    #[test]
    fn partial_of_constant_is_zero() {
        let c = parse("4.5", 3).unwrap();
        assert!(partial(&c, 1).unwrap().body().is_zero());
    }

    #[test]
    fn power_rule() {
        let d = partial(&parse("x1*x3^3", 3).unwrap(), 3).unwrap();
        assert_eq!(*d.body(), simplify(&parse_expr("3*x1*x3^2", 3).unwrap()));
    }

    #[test]
    fn partial_index_bounds() {
        assert!(partial(&v3(), 0).is_none());
        assert!(partial(&v3(), 4).is_none());
    }

    #[test]
    fn quotient_and_chain_rules() {
        let f = parse("sin(x1*x2)/(1 + x2^2)", 2).unwrap();
        let d = partial(&f, 2).unwrap();
        let x = [0.7, -0.3];
        let expected = (0.7 * (0.7f64 * -0.3).cos() * (1.0 + 0.09)
            - (0.7f64 * -0.3).sin() * 2.0 * -0.3)
            / (1.09f64 * 1.09);
        assert!((d.eval(&x).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn evaluate_at_sample_points() {
        assert_eq!(v3().eval(&[1.0, 1.0, 0.0]).unwrap(), 0.75);
        assert_eq!(v3().eval(&[0.0; 3]).unwrap(), 0.0);
        assert!(matches!(
            v3().eval(&[1.0]),
            Err(EvalError::DimensionMismatch { .. })
        ));
    }
}

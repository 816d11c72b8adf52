use std::fmt;

use serde::{Deserialize, Serialize};

use super::LieError;
use crate::symexpr::{
    parse_expr, partial_expr, simplify, CompiledExpr, EvalError, Expr, ParseError, ScalarField,
};

/// A vector field on R^n with symbolic components.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VectorField {
    dim: usize,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(components: Vec<Expr>) -> Result<Self, LieError> {
        let dim = components.len();
        if let Some(bad) = components.iter().map(Expr::max_var).find(|&m| m > dim) {
            return Err(LieError::VariableOutOfRange { index: bad, dim });
        }
        Ok(Self { dim, components })
    }

    pub fn parse(sources: &[&str]) -> Result<Self, ParseError> {
        let dim = sources.len();
        let components = sources
            .iter()
            .map(|s| parse_expr(s, dim))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { dim, components })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            components: vec![Expr::zero(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }

    pub fn node_count(&self) -> usize {
        self.components.iter().map(Expr::node_count).sum()
    }

    pub fn simplified(&self) -> Self {
        Self {
            dim: self.dim,
            components: self.components.iter().map(simplify).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            components: self
                .components
                .iter()
                .map(|c| simplify(&Expr::mul(Expr::Const(s), c.clone())))
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        if x.len() != self.dim {
            return Err(EvalError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    pub fn compile(&self) -> CompiledField {
        CompiledField {
            components: self.components.iter().map(CompiledExpr::new).collect(),
        }
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Compiled form of a [`VectorField`] for repeated numeric evaluation.
#[derive(Debug, Clone)]
pub struct CompiledField {
    components: Vec<CompiledExpr>,
}

impl CompiledField {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(x)?;
        }
        Ok(())
    }
}

fn check_dims(a: usize, b: usize) -> Result<(), LieError> {
    if a != b {
        Err(LieError::DimensionMismatch(a, b))
    } else {
        Ok(())
    }
}

/// `Σ_i a_i · ∂e/∂x_i`, unsimplified in the outer sum.
fn derivative_along(a: &[Expr], e: &Expr) -> Expr {
    let terms: Vec<Expr> = a
        .iter()
        .enumerate()
        .filter(|(_, ai)| !ai.is_zero())
        .filter_map(|(i, ai)| {
            let d = partial_expr(e, i + 1);
            (!d.is_zero()).then(|| Expr::mul(ai.clone(), d))
        })
        .collect();
    Expr::Add(terms)
}

/// `XV = DV·X`, the derivative of `V` along `X`.
pub fn directional_derivative(x: &VectorField, v: &ScalarField) -> Result<ScalarField, LieError> {
    check_dims(x.dim, v.dim())?;
    Ok(
        ScalarField::new(x.dim, simplify(&derivative_along(&x.components, v.body())))
            .expect("derivative stays within the field's variables"),
    )
}

/// `[X,Y] = (DY)X − (DX)Y`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, LieError> {
    check_dims(x.dim, y.dim)?;
    let components = (0..x.dim)
        .map(|j| {
            simplify(&Expr::sub(
                derivative_along(&x.components, &y.components[j]),
                derivative_along(&y.components, &x.components[j]),
            ))
        })
        .collect();
    Ok(VectorField {
        dim: x.dim,
        components,
    })
}

/// `[[…[[base, arm], arm], …], arm]` with `k` brackets.
pub fn iterated_bracket(
    base: &VectorField,
    arm: &VectorField,
    k: usize,
) -> Result<VectorField, LieError> {
    if k == 0 {
        return Err(LieError::ZeroIterations);
    }
    let mut acc = lie_bracket(base, arm)?;
    for _ in 1..k {
        acc = lie_bracket(&acc, arm)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn f() -> VectorField {
        VectorField::parse(&["x3^3", "x3", "0"]).unwrap()
    }

    fn g() -> VectorField {
        VectorField::parse(&["0", "0", "1"]).unwrap()
    }

    fn v() -> ScalarField {
        parse("0.5*x1^2 + 0.25*x2^4 + 0.5*x3^2", 3).unwrap()
    }

    fn expr(s: &str) -> Expr {
        simplify(&parse_expr(s, 3).unwrap())
    }

    #[test]
    fn g_v_is_x3() {
        assert_eq!(
            *directional_derivative(&g(), &v()).unwrap().body(),
            Expr::Var(3)
        );
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let c = parse("2.0", 3).unwrap();
        assert!(directional_derivative(&f(), &c).unwrap().body().is_zero());
    }

    #[test]
    fn drift_derivative() {
        let fv = directional_derivative(&f(), &v()).unwrap();
        assert_eq!(*fv.body(), expr("x1*x3^3 + x2^3*x3"));
    }

    #[test]
    fn bracket_of_drift_and_input() {
        let fg = lie_bracket(&f(), &g()).unwrap();
        assert_eq!(fg.components(), &[expr("-3*x3^2"), expr("-1"), expr("0")]);
    }

    #[test]
    fn self_bracket_vanishes() {
        assert!(lie_bracket(&f(), &f()).unwrap().is_zero());
    }

    #[test]
    fn linear_fields_bracket() {
        // X = A x with A = [[0,1],[0,0]], Y = B x with B = [[0,0],[1,0]].
        let x = VectorField::parse(&["x2", "0"]).unwrap();
        let y = VectorField::parse(&["0", "x1"]).unwrap();
        let b = lie_bracket(&x, &y).unwrap();
        assert_eq!(
            b.components(),
            &[Expr::neg(Expr::Var(1)), Expr::Var(2)].map(|e| simplify(&e))
        );
    }

    #[test]
    fn iterated_brackets_on_cubic_chain() {
        let three = iterated_bracket(&f(), &g(), 3).unwrap();
        assert_eq!(three.components(), &[expr("-6"), expr("0"), expr("0")]);
        assert_eq!(
            iterated_bracket(&f(), &g(), 1).unwrap(),
            lie_bracket(&f(), &g()).unwrap()
        );
        assert!(iterated_bracket(&g(), &f(), 2).unwrap().is_zero());
        assert!(matches!(
            iterated_bracket(&f(), &g(), 0),
            Err(LieError::ZeroIterations)
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let two = VectorField::parse(&["x1", "x2"]).unwrap();
        assert!(matches!(
            lie_bracket(&two, &f()),
            Err(LieError::DimensionMismatch(2, 3))
        ));
        assert!(directional_derivative(&two, &v()).is_err());
    }
}

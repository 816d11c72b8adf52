//! Vector fields, Lie brackets under the `XY := (DY)X` convention, and the
//! free-Lie-algebra bookkeeping (Hall words, operator products) used by the
//! classifier.

mod field;
mod words;

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use field::{
    directional_derivative, iterated_bracket, lie_bracket, CompiledField, VectorField,
};
pub use words::{admissible_products, hall_basis, BracketWord, OperatorProduct};

use crate::symexpr::ScalarField;

/// Default ceiling on expression size before symbolic work is abandoned.
pub const DEFAULT_NODE_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LieError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("variable x{index} exceeds dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("iterated bracket needs at least one bracket")]
    ZeroIterations,
    #[error("expression too large: {nodes} nodes exceeds limit {limit} while computing {what}")]
    ExpressionTooLarge {
        nodes: usize,
        limit: usize,
        what: String,
    },
}

/// Which way brackets are oriented. `Flipped` exists only as a negative
/// control: it computes `(DX)Y − (DY)X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BracketConvention {
    #[default]
    Standard,
    Flipped,
}

/// Drift/input pair with memoised realisations of bracket words.
#[derive(Debug)]
pub struct LieContext {
    f: VectorField,
    g: VectorField,
    convention: BracketConvention,
    node_limit: usize,
    cache: Mutex<HashMap<BracketWord, VectorField>>,
}

impl LieContext {
    pub fn new(f: VectorField, g: VectorField) -> Result<Self, LieError> {
        if f.dim() != g.dim() {
            return Err(LieError::DimensionMismatch(f.dim(), g.dim()));
        }
        Ok(Self {
            f,
            g,
            convention: BracketConvention::Standard,
            node_limit: DEFAULT_NODE_LIMIT,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_convention(mut self, convention: BracketConvention) -> Self {
        self.convention = convention;
        self.cache.get_mut().unwrap().clear();
        self
    }

    pub fn with_node_limit(mut self, limit: usize) -> Self {
        self.node_limit = limit;
        self
    }

    pub fn f(&self) -> &VectorField {
        &self.f
    }

    pub fn g(&self) -> &VectorField {
        &self.g
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn node_limit(&self) -> usize {
        self.node_limit
    }

    pub fn bracket(&self, x: &VectorField, y: &VectorField) -> Result<VectorField, LieError> {
        match self.convention {
            BracketConvention::Standard => lie_bracket(x, y),
            BracketConvention::Flipped => lie_bracket(y, x),
        }
    }

    fn guard(&self, nodes: usize, what: impl FnOnce() -> String) -> Result<(), LieError> {
        if nodes > self.node_limit {
            Err(LieError::ExpressionTooLarge {
                nodes,
                limit: self.node_limit,
                what: what(),
            })
        } else {
            Ok(())
        }
    }

    /// Substitutes `F ↦ f`, `G ↦ g` and evaluates the bracket tree.
    pub fn realize(&self, word: &BracketWord) -> Result<VectorField, LieError> {
        match word {
            BracketWord::F => return Ok(self.f.clone()),
            BracketWord::G => return Ok(self.g.clone()),
            BracketWord::Bracket { .. } => {}
        }
        if let Some(hit) = self.cache.lock().unwrap().get(word) {
            return Ok(hit.clone());
        }
        let BracketWord::Bracket { left, right, .. } = word else {
            unreachable!()
        };
        let l = self.realize(left)?;
        let r = self.realize(right)?;
        let out = self.bracket(&l, &r)?;
        self.guard(out.node_count(), || word.to_string())?;
        self.cache.lock().unwrap().insert(word.clone(), out.clone());
        Ok(out)
    }

    /// `[[…[[base, arm], arm], …], arm]` under this context's convention.
    pub fn iterated(
        &self,
        base: BracketWord,
        arm: BracketWord,
        k: usize,
    ) -> Result<VectorField, LieError> {
        if k == 0 {
            return Err(LieError::ZeroIterations);
        }
        self.realize(&BracketWord::iterated(base, arm, k))
    }

    /// `XV` with the size ceiling applied.
    pub fn derivative(&self, x: &VectorField, v: &ScalarField) -> Result<ScalarField, LieError> {
        let out = directional_derivative(x, v)?;
        self.guard(out.node_count(), || format!("derivative of {v}"))?;
        Ok(out)
    }

    /// `(Δ1 (Δ2 (… (Δk V))))`.
    pub fn apply_product(
        &self,
        product: &OperatorProduct,
        v: &ScalarField,
    ) -> Result<ScalarField, LieError> {
        let mut acc = v.clone();
        for w in product.factors().iter().rev() {
            let field = self.realize(w)?;
            acc = self.derivative(&field, &acc)?;
        }
        Ok(acc)
    }

    /// `f^k V`.
    pub fn drift_power(&self, k: usize, v: &ScalarField) -> Result<ScalarField, LieError> {
        let mut acc = v.clone();
        for _ in 0..k {
            acc = self.derivative(&self.f, &acc)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{parse, parse_expr, simplify};

    fn ctx() -> LieContext {
        LieContext::new(
            VectorField::parse(&["x3^3", "x3", "0"]).unwrap(),
            VectorField::parse(&["0", "0", "1"]).unwrap(),
        )
        .unwrap()
    }

    fn v() -> ScalarField {
        parse("0.5*x1^2 + 0.25*x2^4 + 0.5*x3^2", 3).unwrap()
    }

    fn fg() -> BracketWord {
        BracketWord::bracket(BracketWord::F, BracketWord::G)
    }

    #[test]
    fn realize_leaves_and_brackets() {
        let c = ctx();
        assert_eq!(c.realize(&BracketWord::F).unwrap(), *c.f());
        assert_eq!(
            c.realize(&fg()).unwrap(),
            lie_bracket(c.f(), c.g()).unwrap()
        );
        let fgg = c
            .realize(&BracketWord::bracket(fg(), BracketWord::G))
            .unwrap();
        let six_x3 = simplify(&parse_expr("6*x3", 3).unwrap());
        assert_eq!(fgg.components(), &[six_x3, 0.0.into(), 0.0.into()]);
    }

    #[test]
    fn products_compose_left_to_right() {
        let c = ctx();
        let single = OperatorProduct::new(vec![BracketWord::F]).unwrap();
        assert_eq!(
            c.apply_product(&single, &v()).unwrap(),
            directional_derivative(c.f(), &v()).unwrap()
        );
        let ff = OperatorProduct::new(vec![BracketWord::F, BracketWord::F]).unwrap();
        let expected = simplify(&parse_expr("x3^6 + 3*x2^2*x3^2", 3).unwrap());
        assert_eq!(*c.apply_product(&ff, &v()).unwrap().body(), expected);
        let b = OperatorProduct::new(vec![fg()]).unwrap();
        assert_eq!(
            c.apply_product(&b, &v())
                .unwrap()
                .eval(&[1.0, 1.0, 0.0])
                .unwrap(),
            -1.0
        );
    }

    #[test]
    fn flipped_convention_negates() {
        let c = ctx().with_convention(BracketConvention::Flipped);
        let flipped = c.realize(&fg()).unwrap();
        assert_eq!(flipped, lie_bracket(c.f(), c.g()).unwrap().scaled(-1.0));
    }

    #[test]
    fn node_ceiling_is_enforced() {
        let c = ctx().with_node_limit(3);
        let err = c.realize(&fg()).unwrap_err();
        assert!(matches!(err, LieError::ExpressionTooLarge { .. }));
    }
}

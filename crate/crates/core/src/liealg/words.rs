use std::fmt;

use serde::{Deserialize, Serialize};

/// Formal bracket over the generators `F` (drift) and `G` (input field).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BracketWord {
    F,
    G,
    Bracket {
        left: Box<BracketWord>,
        right: Box<BracketWord>,
        order: usize,
    },
}

impl BracketWord {
    pub fn bracket(left: BracketWord, right: BracketWord) -> Self {
        let order = left.order() + right.order();
        BracketWord::Bracket {
            left: Box::new(left),
            right: Box::new(right),
            order,
        }
    }

    /// Leaf count; for pure words this is the grading order.
    pub fn order(&self) -> usize {
        match self {
            BracketWord::F | BracketWord::G => 1,
            BracketWord::Bracket { order, .. } => *order,
        }
    }

    /// `[[…[[base, arm], arm], …], arm]` with `k` brackets.
    pub fn iterated(base: BracketWord, arm: BracketWord, k: usize) -> Self {
        (0..k).fold(base, |acc, _| BracketWord::bracket(acc, arm.clone()))
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            BracketWord::F | BracketWord::G => 1,
            BracketWord::Bracket { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}

impl fmt::Display for BracketWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketWord::F => write!(f, "F"),
            BracketWord::G => write!(f, "G"),
            BracketWord::Bracket { left, right, .. } => write!(f, "[{left},{right}]"),
        }
    }
}

/// Hall basis of the free Lie algebra on `{F, G}` up to `max_order`.
///
/// Words are totally ordered by position in the returned list: shorter words
/// first, `G < F` among generators, then generation order. A bracket `[u,v]`
/// is admitted when `u > v` and, if `u = [u', u'']`, `u'' <= v`.
pub fn hall_basis(max_order: usize) -> Vec<BracketWord> {
    if max_order == 0 {
        return Vec::new();
    }
    // (word, index of right child when the word is a bracket)
    let mut basis: Vec<(BracketWord, Option<usize>)> =
        vec![(BracketWord::G, None), (BracketWord::F, None)];
    for n in 2..=max_order {
        let mut fresh = Vec::new();
        for u in 0..basis.len() {
            for v in 0..u {
                if basis[u].0.order() + basis[v].0.order() != n {
                    continue;
                }
                if matches!(basis[u].1, Some(r) if r > v) {
                    continue;
                }
                fresh.push((
                    BracketWord::bracket(basis[u].0.clone(), basis[v].0.clone()),
                    Some(v),
                ));
            }
        }
        basis.extend(fresh);
    }
    basis.into_iter().map(|(w, _)| w).collect()
}

/// Ordered composition `Δ1 Δ2 … Δk` of derivative operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OperatorProduct(Vec<BracketWord>);

impl OperatorProduct {
    /// Nonempty product; the bare generator `G` is not an admissible factor.
    pub fn new(factors: Vec<BracketWord>) -> Option<Self> {
        if factors.is_empty() || factors.contains(&BracketWord::G) {
            return None;
        }
        Some(Self(factors))
    }

    pub fn factors(&self) -> &[BracketWord] {
        &self.0
    }

    pub fn total_order(&self) -> usize {
        self.0.iter().map(BracketWord::order).sum()
    }
}

impl fmt::Display for OperatorProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, ")")
    }
}

/// All ordered products of Hall words other than `G` with total order in
/// `1..=max_order`, grouped by increasing total order.
pub fn admissible_products(max_order: usize) -> Vec<OperatorProduct> {
    let words: Vec<BracketWord> = hall_basis(max_order)
        .into_iter()
        .filter(|w| *w != BracketWord::G)
        .collect();
    let mut by_order: Vec<Vec<Vec<BracketWord>>> = vec![vec![Vec::new()]];
    for n in 1..=max_order {
        let mut level = Vec::new();
        for w in words.iter().filter(|w| w.order() <= n) {
            for rest in &by_order[n - w.order()] {
                let mut seq = Vec::with_capacity(rest.len() + 1);
                seq.push(w.clone());
                seq.extend(rest.iter().cloned());
                level.push(seq);
            }
        }
        by_order.push(level);
    }
    by_order
        .into_iter()
        .skip(1)
        .flatten()
        .map(OperatorProduct)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fg() -> BracketWord {
        BracketWord::bracket(BracketWord::F, BracketWord::G)
    }

    #[test]
    fn order_is_additive() {
        let w = BracketWord::bracket(fg(), BracketWord::G);
        assert_eq!(w.order(), 3);
        assert_eq!(w.to_string(), "[[F,G],G]");
    }

    #[test]
    fn small_bases() {
        let b2 = hall_basis(2);
        assert_eq!(b2, vec![BracketWord::G, BracketWord::F, fg()]);
        let b3 = hall_basis(3);
        assert_eq!(
            &b3[3..],
            &[
                BracketWord::bracket(fg(), BracketWord::G),
                BracketWord::bracket(fg(), BracketWord::F)
            ]
        );
        assert!(hall_basis(0).is_empty());
    }

    #[test]
    fn products_exclude_bare_input_field() {
        assert!(OperatorProduct::new(vec![BracketWord::F, BracketWord::G]).is_none());
        assert!(OperatorProduct::new(vec![]).is_none());
        let p = admissible_products(3);
        // F | FF, [F,G] | FFF, F[F,G], [F,G]F, [[F,G],G], [[F,G],F]
        assert_eq!(p.len(), 1 + 2 + 5);
        assert!(p
            .windows(2)
            .all(|w| w[0].total_order() <= w[1].total_order()));
    }
}

//! Canonical simplification.
//!
//! Every expression is rewritten into an expanded sum of monomials over
//! "atoms" (variables, `sin`/`cos`/`exp` of canonical arguments, and
//! reciprocals of canonical non-constant denominators). Monomials are kept in
//! a `BTreeMap`, which gives the deterministic term ordering; converting back
//! to an [`Expr`] yields a flattened `Add` of `Mul` terms with a leading
//! coefficient. Re-simplifying that output reproduces it exactly.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use super::Expr;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Atom {
    Var(usize),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
    Inv(Expr),
}

type Monomial = Vec<(Atom, u32)>;

#[derive(Debug, Clone, Default)]
struct Poly(BTreeMap<Monomial, f64>);

impl Poly {
    fn constant(c: f64) -> Self {
        let mut p = Poly::default();
        if c != 0.0 {
            p.0.insert(Vec::new(), c);
        }
        p
    }

    fn atom(a: Atom) -> Self {
        let mut p = Poly::default();
        p.0.insert(vec![(a, 1)], 1.0);
        p
    }

    fn as_constant(&self) -> Option<f64> {
        match self.0.len() {
            0 => Some(0.0),
            1 => self.0.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.0.entry(m) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if *slot.get() == 0.0 {
                    slot.remove();
                }
            }
        }
    }

    fn add(mut self, other: Poly) -> Poly {
        for (m, c) in other.0 {
            self.add_term(m, c);
        }
        self
    }

    fn scale(mut self, s: f64) -> Poly {
        if s == 0.0 {
            return Poly::default();
        }
        for c in self.0.values_mut() {
            *c *= s;
        }
        self.0.retain(|_, c| *c != 0.0);
        self
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                out.add_term(mul_monomials(m1, m2), c1 * c2);
            }
        }
        out
    }

    fn pow(&self, mut k: u32) -> Poly {
        let mut result = Poly::constant(1.0);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }
}

fn mul_monomials(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0.clone(), a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn unary_atom(arg: &Expr, fold: fn(f64) -> f64, wrap: fn(Expr) -> Atom) -> Poly {
    let inner = simplify(arg);
    match inner.as_const() {
        Some(c) => Poly::constant(fold(c)),
        None => Poly::atom(wrap(inner)),
    }
}

fn to_poly(e: &Expr) -> Poly {
    match e {
        Expr::Const(c) => Poly::constant(*c),
        Expr::Var(i) => Poly::atom(Atom::Var(*i)),
        Expr::Neg(a) => to_poly(a).scale(-1.0),
        Expr::Sin(a) => unary_atom(a, f64::sin, Atom::Sin),
        Expr::Cos(a) => unary_atom(a, f64::cos, Atom::Cos),
        Expr::Exp(a) => unary_atom(a, f64::exp, Atom::Exp),
        Expr::Add(xs) => xs
            .iter()
            .fold(Poly::default(), |acc, x| acc.add(to_poly(x))),
        Expr::Sub(a, b) => to_poly(a).add(to_poly(b).scale(-1.0)),
        Expr::Mul(xs) => {
            let mut acc = Poly::constant(1.0);
            for x in xs {
                acc = acc.mul(&to_poly(x));
                if acc.0.is_empty() {
                    break;
                }
            }
            acc
        }
        Expr::Div(a, b) => {
            let den = to_poly(b);
            match den.as_constant() {
                Some(c) if c != 0.0 => to_poly(a).scale(1.0 / c),
                Some(_) => to_poly(a).mul(&Poly::atom(Atom::Inv(Expr::Const(0.0)))),
                None => to_poly(a).mul(&Poly::atom(Atom::Inv(from_poly(den)))),
            }
        }
        Expr::Pow(a, k) => to_poly(a).pow(*k),
    }
}

fn atom_expr(a: Atom) -> Expr {
    match a {
        Atom::Var(i) => Expr::Var(i),
        Atom::Sin(e) => Expr::Sin(Box::new(e)),
        Atom::Cos(e) => Expr::Cos(Box::new(e)),
        Atom::Exp(e) => Expr::Exp(Box::new(e)),
        Atom::Inv(e) => Expr::div(Expr::Const(1.0), e),
    }
}

fn from_poly(p: Poly) -> Expr {
    let mut terms: Vec<Expr> =
        p.0.into_iter()
            .map(|(m, c)| {
                let c = if c == 0.0 { 0.0 } else { c };
                if m.is_empty() {
                    return Expr::Const(c);
                }
                let mut factors = Vec::with_capacity(m.len() + 1);
                if c != 1.0 {
                    factors.push(Expr::Const(c));
                }
                for (atom, k) in m {
                    let a = atom_expr(atom);
                    factors.push(if k == 1 { a } else { Expr::pow(a, k) });
                }
                if factors.len() == 1 {
                    factors.pop().unwrap()
                } else {
                    Expr::Mul(factors)
                }
            })
            .collect();
    match terms.len() {
        0 => Expr::Const(0.0),
        1 => terms.pop().unwrap(),
        _ => Expr::Add(terms),
    }
}

/// Rewrites `e` into canonical expanded form.
pub fn simplify(e: &Expr) -> Expr {
    from_poly(to_poly(e))
}

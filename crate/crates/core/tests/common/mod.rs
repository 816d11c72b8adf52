//! Strategies, independent oracles and invariant checks shared by the
//! property suite and the acceptance harness.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use proptest::prelude::*;
use sdstab::liealg::{directional_derivative, hall_basis, lie_bracket, VectorField};
use sdstab::ode::{self, OdeOptions};
use sdstab::symexpr::{parse_expr, partial, simplify, EvalError, Expr, ScalarField};

pub const DIM: usize = 3;

/// Arbitrary expression trees, including division and transcendentals.
pub fn any_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (1..=DIM).prop_map(Expr::Var),
        (-4i32..=4).prop_map(|c| Expr::Const(c as f64)),
        (-3.0f64..3.0).prop_map(Expr::Const),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Add),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Mul),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::div(a, b)),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| Expr::pow(a, k)),
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(|a| Expr::Sin(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Cos(Box::new(a))),
            inner.prop_map(|a| Expr::Exp(Box::new(a))),
        ]
    })
}

/// Smooth expressions with moderate growth on `[-1, 1]^3`: no division,
/// and `exp` only of a bounded argument.
pub fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (1..=DIM).prop_map(Expr::Var),
        (-2.0f64..2.0).prop_map(Expr::Const),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Add),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::Mul),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| Expr::pow(a, k)),
            inner.clone().prop_map(Expr::neg),
            inner.clone().prop_map(|a| Expr::Sin(Box::new(a))),
            inner.prop_map(|a| Expr::Exp(Box::new(Expr::Sin(Box::new(a))))),
        ]
    })
}

/// Vector fields whose components are sparse quadratics plus an optional
/// `sin` term, with coefficients in `[-0.5, 0.5]`.
pub fn gentle_field() -> impl Strategy<Value = VectorField> {
    let term =
        (-0.5f64..0.5, 0usize..=DIM, 0usize..=DIM, any::<bool>()).prop_map(|(c, i, j, trig)| {
            let mut factors = vec![Expr::Const(c)];
            if i > 0 {
                factors.push(if trig {
                    Expr::Sin(Box::new(Expr::Var(i)))
                } else {
                    Expr::Var(i)
                });
            }
            if j > 0 {
                factors.push(Expr::Var(j));
            }
            Expr::Mul(factors)
        });
    let component = prop::collection::vec(term, 1..4).prop_map(Expr::Add);
    prop::collection::vec(component, DIM)
        .prop_map(|cs| VectorField::new(cs).expect("components use x1..x3"))
}

pub fn point(half_width: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-half_width..half_width, DIM)
}

fn same(a: &Result<f64, EvalError>, b: &Result<f64, EvalError>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x == y || (x.is_nan() && y.is_nan()),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

/// `parse(print(e))` evaluates bit-identically to `e`.
pub fn check_round_trip(e: &Expr, pts: &[Vec<f64>]) -> Result<(), String> {
    let printed = e.to_string();
    let back =
        parse_expr(&printed, DIM).map_err(|err| format!("`{printed}` failed to parse: {err}"))?;
    for x in pts {
        let (a, b) = (e.eval(x), back.eval(x));
        if !same(&a, &b) {
            return Err(format!("`{printed}` at {x:?}: {a:?} vs {b:?}"));
        }
    }
    Ok(())
}

/// Symbolic partial against a central difference with `h = 1e-6`.
pub fn check_partial(e: &Expr, x: &[f64], i: usize) -> Result<(), String> {
    let field = ScalarField::new(DIM, e.clone()).map_err(|e| e.to_string())?;
    let d = partial(&field, i).ok_or("index out of range")?;
    let h = 1e-6;
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i - 1] += h;
    xm[i - 1] -= h;
    let (Ok(fp), Ok(fm), Ok(sym)) = (e.eval(&xp), e.eval(&xm), d.eval(x)) else {
        return Ok(());
    };
    let fd = (fp - fm) / (2.0 * h);
    if !(sym.is_finite() && fd.is_finite()) || sym.abs() > 1e6 {
        return Ok(());
    }
    if (sym - fd).abs() <= 1e-5 * (1.0 + sym.abs()) {
        Ok(())
    } else {
        Err(format!(
            "d/dx{i} of {e} at {x:?}: symbolic {sym} vs difference {fd}"
        ))
    }
}

/// Largest `|value|` over every subtree of `e` at `x`.
pub fn peak_magnitude(e: &Expr, x: &[f64]) -> f64 {
    let own = e.eval(x).map(f64::abs).unwrap_or(0.0);
    let children: Vec<&Expr> = match e {
        Expr::Const(_) | Expr::Var(_) => vec![],
        Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Pow(a, _) => vec![a],
        Expr::Sub(a, b) | Expr::Div(a, b) => vec![a, b],
        Expr::Add(xs) | Expr::Mul(xs) => xs.iter().collect(),
    };
    children
        .into_iter()
        .map(|c| peak_magnitude(c, x))
        .fold(own, f64::max)
}

/// Values agree to `1e-12` relative to the largest intermediate magnitude,
/// times the node count.
pub fn check_simplify(e: &Expr, pts: &[Vec<f64>]) -> Result<(), String> {
    let s = simplify(e);
    for x in pts {
        let (Ok(a), Ok(b)) = (e.eval(x), s.eval(x)) else {
            continue;
        };
        if !(a.is_finite() && b.is_finite()) {
            continue;
        }
        let scale = 1.0 + peak_magnitude(e, x).max(peak_magnitude(&s, x));
        if !scale.is_finite() {
            continue;
        }
        if (a - b).abs() > 1e-12 * scale * (1 + e.node_count()) as f64 {
            return Err(format!("simplify({e}) = {s}; at {x:?}: {a} vs {b}"));
        }
    }
    Ok(())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, c| m.max(c.abs()))
}

pub fn antisymmetry_error(a: &VectorField, b: &VectorField, x: &[f64]) -> f64 {
    let ab = lie_bracket(a, b).unwrap().eval(x).unwrap();
    let ba = lie_bracket(b, a).unwrap().eval(x).unwrap();
    max_abs(&ab.iter().zip(&ba).map(|(p, q)| p + q).collect::<Vec<_>>())
}

pub fn jacobi_error(x: &VectorField, y: &VectorField, z: &VectorField, p: &[f64]) -> f64 {
    let br = |a: &VectorField, b: &VectorField| lie_bracket(a, b).unwrap();
    let t1 = br(x, &br(y, z)).eval(p).unwrap();
    let t2 = br(y, &br(z, x)).eval(p).unwrap();
    let t3 = br(z, &br(x, y)).eval(p).unwrap();
    max_abs(&(0..DIM).map(|i| t1[i] + t2[i] + t3[i]).collect::<Vec<_>>())
}

pub fn leibniz_error(x: &VectorField, y: &VectorField, v: &ScalarField, p: &[f64]) -> f64 {
    let d = |a: &VectorField, s: &ScalarField| directional_derivative(a, s).unwrap();
    let lhs = d(&lie_bracket(x, y).unwrap(), v).eval(p).unwrap();
    let rhs = d(x, &d(y, v)).eval(p).unwrap() - d(y, &d(x, v)).eval(p).unwrap();
    (lhs - rhs).abs()
}

fn flow(field: &VectorField, x: &[f64], t: f64) -> Vec<f64> {
    let code = field.compile();
    let sign = t.signum();
    let rhs = |y: &[f64], dy: &mut [f64]| {
        code.eval_into(y, dy).map_err(|e| e.to_string())?;
        dy.iter_mut().for_each(|d| *d *= sign);
        Ok(())
    };
    let opts = OdeOptions {
        rtol: 1e-13,
        atol: 1e-15,
        max_steps: 100_000,
    };
    ode::integrate(rhs, x, t.abs(), &opts, |_, _| {})
        .expect("gentle fields have global flows on short times")
}

/// `Y_{-t} ∘ X_{-t} ∘ Y_t ∘ X_t (x) − x − sign·t²·[X,Y](x)`, max norm.
pub fn flow_commutator_residual(
    a: &VectorField,
    b: &VectorField,
    x: &[f64],
    t: f64,
    sign: f64,
) -> f64 {
    let p = flow(a, x, t);
    let p = flow(b, &p, t);
    let p = flow(a, &p, -t);
    let p = flow(b, &p, -t);
    let br = lie_bracket(a, b).unwrap().eval(x).unwrap();
    max_abs(
        &(0..x.len())
            .map(|i| p[i] - x[i] - sign * t * t * br[i])
            .collect::<Vec<_>>(),
    )
}

/// Sign `s` with `φ(x) − x ≈ s·t²·[X,Y](x)` on the linear pair
/// `X = (x2, 0)`, `Y = (0, x1)`.
pub fn commutator_sign() -> f64 {
    let a = VectorField::parse(&["x2", "0"]).unwrap();
    let b = VectorField::parse(&["0", "x1"]).unwrap();
    let x = [0.7, -0.4];
    let t = 1e-3;
    let p = flow(&a, &x, t);
    let p = flow(&b, &p, t);
    let p = flow(&a, &p, -t);
    let p = flow(&b, &p, -t);
    let br = lie_bracket(&a, &b).unwrap().eval(&x).unwrap();
    let dot: f64 = (0..2).map(|i| (p[i] - x[i]) * br[i]).sum();
    dot.signum()
}

/// Witt dimension of the degree-`n` component of the free Lie algebra on
/// two generators, via the Möbius function: `(1/n) Σ_{d|n} μ(d) 2^{n/d}`.
pub fn witt_count(n: u32) -> u64 {
    fn mobius(mut m: u32) -> i64 {
        let mut result = 1;
        let mut p = 2;
        while p * p <= m {
            if m.is_multiple_of(p) {
                m /= p;
                if m.is_multiple_of(p) {
                    return 0;
                }
                result = -result;
            }
            p += 1;
        }
        if m > 1 {
            result = -result;
        }
        result
    }
    let total: i64 = (1..=n)
        .filter(|d| n.is_multiple_of(*d))
        .map(|d| mobius(d) * (1i64 << (n / d)))
        .sum();
    (total / n as i64) as u64
}

/// Hall-basis sizes per order `1..=max`.
pub fn hall_counts(max: usize) -> Vec<u64> {
    let basis = hall_basis(max);
    (1..=max)
        .map(|n| basis.iter().filter(|w| w.order() == n).count() as u64)
        .collect()
}

/// Integrator convergence ratio on `ẋ = −x` over `[0, 1]` when the fixed
/// step is halved from `1/steps`.
pub fn integrator_order_ratio(steps: usize) -> f64 {
    let decay = |y: &[f64], dy: &mut [f64]| {
        dy[0] = -y[0];
        Ok(())
    };
    let exact = (-1.0f64).exp();
    let e1 = (ode::integrate_fixed(decay, &[1.0], 1.0, steps).unwrap()[0] - exact).abs();
    let e2 = (ode::integrate_fixed(decay, &[1.0], 1.0, 2 * steps).unwrap()[0] - exact).abs();
    e1 / e2
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

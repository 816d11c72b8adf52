use super::{EvalError, Expr};
use crate::symexpr::expr::powi;

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Sin,
    Cos,
    Exp,
    Add(usize),
    Sub,
    Mul(usize),
    Div,
    Pow(u32),
}

/// Postfix program for an [`Expr`], used on integrator hot paths.
///
/// Produces the same values as [`Expr::eval`]; on division by zero it falls
/// back to the tree evaluator to report the offending subexpression.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    source: Expr,
    depth: usize,
}

impl CompiledExpr {
    pub fn new(e: &Expr) -> Self {
        let mut ops = Vec::with_capacity(e.node_count());
        emit(e, &mut ops);
        let mut depth = 0usize;
        let mut max = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var(_) => depth += 1,
                Op::Neg | Op::Sin | Op::Cos | Op::Exp | Op::Pow(_) => {}
                Op::Sub | Op::Div => depth -= 1,
                Op::Add(n) | Op::Mul(n) => depth = depth + 1 - n,
            }
            max = max.max(depth);
        }
        Self {
            ops,
            source: e.clone(),
            depth: max,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        let mut stack: Vec<f64> = Vec::with_capacity(self.depth);
        for op in &self.ops {
            match *op {
                Op::Const(c) => stack.push(c),
                Op::Var(i) => match x.get(i - 1) {
                    Some(v) => stack.push(*v),
                    None => return self.source.eval(x),
                },
                Op::Neg => {
                    let a = stack.last_mut().unwrap();
                    *a = -*a;
                }
                Op::Sin => {
                    let a = stack.last_mut().unwrap();
                    *a = a.sin();
                }
                Op::Cos => {
                    let a = stack.last_mut().unwrap();
                    *a = a.cos();
                }
                Op::Exp => {
                    let a = stack.last_mut().unwrap();
                    *a = a.exp();
                }
                Op::Pow(k) => {
                    let a = stack.last_mut().unwrap();
                    *a = powi(*a, k);
                }
                Op::Add(n) => {
                    let start = stack.len() - n;
                    let mut acc = 0.0;
                    for v in &stack[start..] {
                        acc += v;
                    }
                    stack.truncate(start);
                    stack.push(acc);
                }
                Op::Mul(n) => {
                    let start = stack.len() - n;
                    let mut acc = 1.0;
                    for v in &stack[start..] {
                        acc *= v;
                    }
                    stack.truncate(start);
                    stack.push(acc);
                }
                Op::Sub => {
                    let b = stack.pop().unwrap();
                    let a = stack.last_mut().unwrap();
                    *a -= b;
                }
                Op::Div => {
                    let b = stack.pop().unwrap();
                    if b == 0.0 {
                        return self.source.eval(x);
                    }
                    let a = stack.last_mut().unwrap();
                    *a /= b;
                }
            }
        }
        Ok(stack.pop().unwrap_or(0.0))
    }
}

fn emit(e: &Expr, ops: &mut Vec<Op>) {
    match e {
        Expr::Const(c) => ops.push(Op::Const(*c)),
        Expr::Var(i) => ops.push(Op::Var(*i)),
        Expr::Neg(a) => {
            emit(a, ops);
            ops.push(Op::Neg);
        }
        Expr::Sin(a) => {
            emit(a, ops);
            ops.push(Op::Sin);
        }
        Expr::Cos(a) => {
            emit(a, ops);
            ops.push(Op::Cos);
        }
        Expr::Exp(a) => {
            emit(a, ops);
            ops.push(Op::Exp);
        }
        Expr::Pow(a, k) => {
            emit(a, ops);
            ops.push(Op::Pow(*k));
        }
        Expr::Add(xs) => {
            xs.iter().for_each(|x| emit(x, ops));
            ops.push(Op::Add(xs.len()));
        }
        Expr::Mul(xs) => {
            xs.iter().for_each(|x| emit(x, ops));
            ops.push(Op::Mul(xs.len()));
        }
        Expr::Sub(a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(Op::Sub);
        }
        Expr::Div(a, b) => {
            emit(a, ops);
            emit(b, ops);
            ops.push(Op::Div);
        }
    }
}

use std::collections::HashMap;

use thiserror::Error;

use super::{Expr, Func, Node, Var};
use crate::coeffs::phi;
use crate::linalg3::Vec3;

/// Evaluation failed at a point outside an expression's domain.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error: {reason} in `{expr}` at (s, t) = ({s}, {t})")]
pub struct EvalError {
    pub reason: &'static str,
    /// Printed form of the offending sub-expression, truncated for very large DAGs.
    pub expr: String,
    pub s: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Const(u64),
    S,
    T,
    Neg(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Pow(u32, i32),
    Call(Func, u32),
    Phi(u32, u32),
}

/// A compiled, multi-output expression evaluator.
///
/// Structurally identical sub-expressions are merged at compile time, so
/// repeated evaluation costs one pass over the distinct nodes.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    sources: Vec<Expr>,
    outputs: Vec<u32>,
}

const MAX_EXPR_CHARS: usize = 160;

impl Tape {
    pub fn compile(exprs: &[Expr]) -> Tape {
        let mut b = Builder {
            ops: Vec::new(),
            sources: Vec::new(),
            by_ptr: HashMap::new(),
            by_op: HashMap::new(),
        };
        let outputs = exprs.iter().map(|e| b.visit(e)).collect();
        Tape {
            ops: b.ops,
            sources: b.sources,
            outputs,
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluates every output at `(s, t)`.
    pub fn eval(&self, s: f64, t: f64) -> Result<Vec<f64>, EvalError> {
        let mut buf = Vec::with_capacity(self.ops.len());
        self.eval_into(s, t, &mut buf)?;
        Ok(self.outputs.iter().map(|&i| buf[i as usize]).collect())
    }

    /// Evaluates and groups consecutive outputs into triples.
    pub fn eval_vec3s(&self, s: f64, t: f64) -> Result<Vec<Vec3>, EvalError> {
        debug_assert!(self.outputs.len() % 3 == 0);
        let v = self.eval(s, t)?;
        Ok(v.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect())
    }

    fn eval_into(&self, s: f64, t: f64, buf: &mut Vec<f64>) -> Result<(), EvalError> {
        buf.clear();
        for (i, op) in self.ops.iter().enumerate() {
            let at = |j: &u32| buf[*j as usize];
            let value = match op {
                Op::Const(bits) => f64::from_bits(*bits),
                Op::S => s,
                Op::T => t,
                Op::Neg(a) => -at(a),
                Op::Add(a, b) => at(a) + at(b),
                Op::Sub(a, b) => at(a) - at(b),
                Op::Mul(a, b) => at(a) * at(b),
                Op::Div(a, b) => {
                    let d = at(b);
                    if d == 0.0 {
                        return Err(self.domain_error(i, "division by zero", s, t));
                    }
                    at(a) / d
                }
                Op::Pow(a, n) => {
                    let x = at(a);
                    if *n < 0 && x == 0.0 {
                        return Err(self.domain_error(i, "negative power of zero", s, t));
                    }
                    x.powi(*n)
                }
                Op::Call(f, a) => f.apply(at(a)).map_err(|reason| self.domain_error(i, reason, s, t))?,
                Op::Phi(n, a) => phi(*n, at(a)),
            };
            if !value.is_finite() {
                return Err(self.domain_error(i, "non-finite value", s, t));
            }
            buf.push(value);
        }
        Ok(())
    }

    fn domain_error(&self, i: usize, reason: &'static str, s: f64, t: f64) -> EvalError {
        let mut expr = self.sources[i].to_string();
        if expr.len() > MAX_EXPR_CHARS {
            let cut = (0..=MAX_EXPR_CHARS).rev().find(|&k| expr.is_char_boundary(k)).unwrap_or(0);
            expr.truncate(cut);
            expr.push_str("...");
        }
        EvalError { reason, expr, s, t }
    }
}

struct Builder {
    ops: Vec<Op>,
    sources: Vec<Expr>,
    by_ptr: HashMap<*const Node, u32>,
    by_op: HashMap<Op, u32>,
}

impl Builder {
    fn visit(&mut self, e: &Expr) -> u32 {
        if let Some(&i) = self.by_ptr.get(&e.ptr()) {
            return i;
        }
        let op = match e.node() {
            // normalise -0.0 so equal constants merge
            Node::Const(v) => Op::Const(if *v == 0.0 { 0 } else { v.to_bits() }),
            Node::Var(Var::S) => Op::S,
            Node::Var(Var::T) => Op::T,
            Node::Neg(a) => Op::Neg(self.visit(a)),
            Node::Add(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                Op::Add(a.min(b), a.max(b))
            }
            Node::Sub(a, b) => Op::Sub(self.visit(a), self.visit(b)),
            Node::Mul(a, b) => {
                let (a, b) = (self.visit(a), self.visit(b));
                Op::Mul(a.min(b), a.max(b))
            }
            Node::Div(a, b) => Op::Div(self.visit(a), self.visit(b)),
            Node::Pow(a, n) => Op::Pow(self.visit(a), *n),
            Node::Call(f, a) => Op::Call(*f, self.visit(a)),
            Node::Phi(n, a) => Op::Phi(*n, self.visit(a)),
        };
        let idx = match self.by_op.get(&op) {
            Some(&i) => i,
            None => {
                let i = u32::try_from(self.ops.len()).expect("tape exceeds u32 nodes");
                self.ops.push(op);
                self.sources.push(e.clone());
                self.by_op.insert(op, i);
                i
            }
        };
        self.by_ptr.insert(e.ptr(), idx);
        idx
    }
}

use std::collections::HashMap;

use super::{Expr, Func, Node, Var};

/// Exact partial derivative of `e` with respect to `var`.
///
/// Derivatives of shared sub-expressions are computed once and shared in the
/// result.
pub fn diff(e: &Expr, var: Var) -> Expr {
    Differ {
        var,
        memo: HashMap::new(),
    }
    .go(e)
}

struct Differ {
    var: Var,
    memo: HashMap<*const Node, Expr>,
}

impl Differ {
    fn go(&mut self, e: &Expr) -> Expr {
        if let Some(d) = self.memo.get(&e.ptr()) {
            return d.clone();
        }
        let d = self.rule(e);
        self.memo.insert(e.ptr(), d.clone());
        d
    }

    fn rule(&mut self, e: &Expr) -> Expr {
        match e.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(v) => {
                if *v == self.var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Neg(a) => self.go(a).neg(),
            Node::Add(a, b) => self.go(a).add(&self.go(b)),
            Node::Sub(a, b) => self.go(a).sub(&self.go(b)),
            Node::Mul(a, b) => {
                let (da, db) = (self.go(a), self.go(b));
                da.mul(b).add(&a.mul(&db))
            }
            Node::Div(a, b) => {
                let (da, db) = (self.go(a), self.go(b));
                if db.is_zero() {
                    return da.div(b);
                }
                da.div(b).sub(&a.mul(&db).div(&b.powi(2)))
            }
            Node::Pow(a, n) => {
                let da = self.go(a);
                Expr::constant(f64::from(*n)).mul(&a.powi(n - 1)).mul(&da)
            }
            Node::Call(f, a) => {
                let da = self.go(a);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Sin => a.cos(),
                    Func::Cos => a.sin().neg(),
                    Func::Tan => Expr::one().div(&a.cos().powi(2)),
                    Func::Exp => e.clone(),
                    Func::Log => Expr::one().div(a),
                    Func::Sqrt => Expr::constant(0.5).div(e),
                    Func::Sinh => Expr::call(Func::Cosh, a),
                    Func::Cosh => Expr::call(Func::Sinh, a),
                };
                outer.mul(&da)
            }
            Node::Phi(n, q) => {
                let dq = self.go(q);
                if dq.is_zero() {
                    return Expr::zero();
                }
                let lead = Expr::constant(f64::from(*n)).mul(&Expr::phi(n + 2, q));
                Expr::constant(0.5).mul(&lead.sub(&Expr::phi(n + 1, q))).mul(&dq)
            }
        }
    }
}

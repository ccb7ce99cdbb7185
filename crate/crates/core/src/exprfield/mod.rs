//! Scalar and vector expressions in the independent variables `s` and `t`.
//!
//! Expressions are immutable, reference-counted DAGs. Sub-expressions are shared
//! freely, which keeps symbolic derivatives of assembled fields from growing
//! exponentially. Evaluation goes through a [`Tape`], a topologically ordered op
//! list with common sub-expressions merged.
//!
//! The textual grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' integer)?
//! base   := number | 's' | 't' | func '(' expr ')' | '(' expr ')' | '-' base
//! func   := sin | cos | tan | exp | log | sqrt | sinh | cosh
//! ```
//!
//! Besides the parseable functions there is one internal node, `phiN(q)`, the
//! coefficient family of [`crate::coeffs::phi`]. It is produced by the symmetry
//! module and prints as `phiN(...)`, which the parser does not accept.

mod diff;
mod parse;
mod tape;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops;
use std::sync::Arc;

pub use diff::diff;
pub use parse::{parse, ParseError};
pub use tape::{EvalError, Tape};

use crate::coeffs::phi;
use crate::linalg3::Vec3;

/// Independent variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    S,
    T,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::S => "s",
            Var::T => "t",
        }
    }
}

/// Elementary functions available in the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Applies the function, or names the violated domain restriction.
    pub fn apply(self, x: f64) -> Result<f64, &'static str> {
        let y = match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => {
                if x.cos() == 0.0 {
                    return Err("tan at a pole");
                }
                x.tan()
            }
            Func::Exp => x.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err("log of a non-positive value");
                }
                x.ln()
            }
            Func::Sqrt => {
                if x < 0.0 {
                    return Err("sqrt of a negative value");
                }
                x.sqrt()
            }
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
        };
        if y.is_finite() {
            Ok(y)
        } else {
            Err("non-finite result")
        }
    }
}

/// Expression node. Construct through [`Expr`]'s methods, which fold constants.
#[derive(Debug)]
pub enum Node {
    Const(f64),
    Var(Var),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, i32),
    Call(Func, Expr),
    /// Coefficient `phi(n, q)`.
    Phi(u32, Expr),
}

/// Shared handle to an immutable expression DAG.
#[derive(Debug, Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    fn wrap(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr(&self) -> *const Node {
        Arc::as_ptr(&self.0)
    }

    pub fn constant(v: f64) -> Expr {
        Expr::wrap(Node::Const(v))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(v: Var) -> Expr {
        Expr::wrap(Node::Var(v))
    }

    pub fn s() -> Expr {
        Expr::var(Var::S)
    }

    pub fn t() -> Expr {
        Expr::var(Var::T)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Const(v) => Expr::constant(-v),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::wrap(Node::Neg(self.clone())),
        }
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            (Some(0.0), _) => rhs.clone(),
            (_, Some(0.0)) => self.clone(),
            _ => Expr::wrap(Node::Add(self.clone(), rhs.clone())),
        }
    }

    pub fn sub(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a - b),
            (Some(0.0), _) => rhs.neg(),
            (_, Some(0.0)) => self.clone(),
            _ => Expr::wrap(Node::Sub(self.clone(), rhs.clone())),
        }
    }

    pub fn mul(&self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            _ if self.is_one() => rhs.clone(),
            _ if rhs.is_one() => self.clone(),
            (Some(-1.0), _) => rhs.neg(),
            (_, Some(-1.0)) => self.neg(),
            _ => Expr::wrap(Node::Mul(self.clone(), rhs.clone())),
        }
    }

    pub fn div(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => Expr::constant(a / b),
            (_, Some(1.0)) => self.clone(),
            (Some(a), _) if a == 0.0 && !rhs.is_zero() => Expr::zero(),
            _ => Expr::wrap(Node::Div(self.clone(), rhs.clone())),
        }
    }

    pub fn powi(&self, n: i32) -> Expr {
        match (self.as_const(), n) {
            (_, 0) => Expr::one(),
            (_, 1) => self.clone(),
            (Some(a), n) if n > 0 || a != 0.0 => Expr::constant(a.powi(n)),
            _ => Expr::wrap(Node::Pow(self.clone(), n)),
        }
    }

    pub fn call(f: Func, arg: &Expr) -> Expr {
        if let Some(a) = arg.as_const() {
            if let Ok(v) = f.apply(a) {
                return Expr::constant(v);
            }
        }
        Expr::wrap(Node::Call(f, arg.clone()))
    }

    pub fn sin(&self) -> Expr {
        Expr::call(Func::Sin, self)
    }

    pub fn cos(&self) -> Expr {
        Expr::call(Func::Cos, self)
    }

    /// Coefficient `phi(n, self)`; see [`crate::coeffs`].
    pub fn phi(n: u32, q: &Expr) -> Expr {
        match q.as_const() {
            Some(v) => Expr::constant(phi(n, v)),
            None => Expr::wrap(Node::Phi(n, q.clone())),
        }
    }

    /// Whether `var` occurs anywhere in the expression.
    pub fn depends_on(&self, var: Var) -> bool {
        fn walk(e: &Expr, var: Var, seen: &mut HashSet<*const Node>) -> bool {
            if !seen.insert(e.ptr()) {
                return false;
            }
            match e.node() {
                Node::Const(_) => false,
                Node::Var(v) => *v == var,
                Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) | Node::Phi(_, a) => walk(a, var, seen),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a, var, seen) || walk(b, var, seen)
                }
            }
        }
        walk(self, var, &mut HashSet::new())
    }

    pub fn diff(&self, var: Var) -> Expr {
        diff(self, var)
    }

    /// Replaces `var` by the constant `value`, folding what becomes constant.
    pub fn substitute(&self, var: Var, value: f64) -> Expr {
        fn walk(e: &Expr, var: Var, value: f64, memo: &mut HashMap<*const Node, Expr>) -> Expr {
            if let Some(done) = memo.get(&e.ptr()) {
                return done.clone();
            }
            let mut go = |x: &Expr| walk(x, var, value, memo);
            let out = match e.node() {
                Node::Const(_) => e.clone(),
                Node::Var(v) if *v == var => Expr::constant(value),
                Node::Var(_) => e.clone(),
                Node::Neg(a) => go(a).neg(),
                Node::Add(a, b) => go(a).add(&go(b)),
                Node::Sub(a, b) => go(a).sub(&go(b)),
                Node::Mul(a, b) => go(a).mul(&go(b)),
                Node::Div(a, b) => go(a).div(&go(b)),
                Node::Pow(a, n) => go(a).powi(*n),
                Node::Call(f, a) => Expr::call(*f, &go(a)),
                Node::Phi(n, a) => Expr::phi(*n, &go(a)),
            };
            memo.insert(e.ptr(), out.clone());
            out
        }
        walk(self, var, value, &mut HashMap::new())
    }

    /// One-off evaluation. Compile a [`Tape`] for repeated use.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64, EvalError> {
        Ok(Tape::compile(std::slice::from_ref(self)).eval(s, t)?[0])
    }

    /// Number of distinct nodes reachable from this expression.
    pub fn node_count(&self) -> usize {
        fn walk(e: &Expr, seen: &mut HashSet<*const Node>) {
            if !seen.insert(e.ptr()) {
                return;
            }
            match e.node() {
                Node::Const(_) | Node::Var(_) => {}
                Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) | Node::Phi(_, a) => walk(a, seen),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a, seen);
                    walk(b, seen);
                }
            }
        }
        let mut seen = HashSet::new();
        walk(self, &mut seen);
        seen.len()
    }

    fn precedence(&self) -> u8 {
        match self.node() {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Pow(..) => 3,
            Node::Const(v) if *v < 0.0 || v.is_sign_negative() => 0,
            _ => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.fmt_prec(f, 0)?;
            return write!(f, ")");
        }
        match self.node() {
            Node::Const(v) => write!(f, "{v:?}"),
            Node::Var(v) => write!(f, "{}", v.name()),
            Node::Neg(a) => {
                write!(f, "(-")?;
                a.fmt_prec(f, 4)?;
                write!(f, ")")
            }
            Node::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                b.fmt_prec(f, 2)
            }
            Node::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                b.fmt_prec(f, 2)
            }
            Node::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)
            }
            Node::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)
            }
            Node::Pow(a, n) => {
                a.fmt_prec(f, 4)?;
                write!(f, "^{n}")
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")
            }
            Node::Phi(n, a) => {
                write!(f, "phi{n}(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::constant(v)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse(text)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$method(self, rhs)
            }
        }
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$method(&self, &rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$method(&self, rhs)
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

/// Three expressions, one per director-basis component.
#[derive(Debug, Clone)]
pub struct VecExpr(pub [Expr; 3]);

impl VecExpr {
    pub fn new(x: Expr, y: Expr, z: Expr) -> Self {
        VecExpr([x, y, z])
    }

    pub fn zero() -> Self {
        VecExpr::constant(Vec3::ZERO)
    }

    pub fn constant(v: Vec3) -> Self {
        VecExpr::new(Expr::constant(v.x), Expr::constant(v.y), Expr::constant(v.z))
    }

    /// Parses three component strings.
    pub fn parse(components: [&str; 3]) -> Result<Self, ParseError> {
        Ok(VecExpr::new(parse(components[0])?, parse(components[1])?, parse(components[2])?))
    }

    pub fn components(&self) -> &[Expr; 3] {
        &self.0
    }

    pub fn diff(&self, var: Var) -> VecExpr {
        VecExpr(self.0.clone().map(|e| e.diff(var)))
    }

    pub fn substitute(&self, var: Var, value: f64) -> VecExpr {
        let [x, y, z] = &self.0;
        VecExpr::new(x.substitute(var, value), y.substitute(var, value), z.substitute(var, value))
    }

    pub fn depends_on(&self, var: Var) -> bool {
        self.0.iter().any(|e| e.depends_on(var))
    }

    pub fn add(&self, o: &VecExpr) -> VecExpr {
        VecExpr::new(&self.0[0] + &o.0[0], &self.0[1] + &o.0[1], &self.0[2] + &o.0[2])
    }

    pub fn sub(&self, o: &VecExpr) -> VecExpr {
        VecExpr::new(&self.0[0] - &o.0[0], &self.0[1] - &o.0[1], &self.0[2] - &o.0[2])
    }

    pub fn neg(&self) -> VecExpr {
        VecExpr(self.0.clone().map(|e| -e))
    }

    pub fn scale(&self, k: &Expr) -> VecExpr {
        VecExpr(self.0.clone().map(|e| &e * k))
    }

    pub fn dot(&self, o: &VecExpr) -> Expr {
        &(&(&self.0[0] * &o.0[0]) + &(&self.0[1] * &o.0[1])) + &(&self.0[2] * &o.0[2])
    }

    pub fn cross(&self, o: &VecExpr) -> VecExpr {
        let [a0, a1, a2] = &self.0;
        let [b0, b1, b2] = &o.0;
        VecExpr::new(a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0)
    }

    pub fn norm_squared(&self) -> Expr {
        self.dot(self)
    }

    pub fn compile(&self) -> Tape {
        Tape::compile(&self.0)
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<Vec3, EvalError> {
        let v = self.compile().eval(s, t)?;
        Ok(Vec3::new(v[0], v[1], v[2]))
    }
}

impl fmt::Display for VecExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.0[0], self.0[1], self.0[2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_folds() {
        let e: Expr = "0.2 + 0.3*s*t + sin(s)".parse().unwrap();
        let at0 = e.substitute(Var::S, 0.0);
        assert!(!at0.depends_on(Var::S));
        assert_eq!(at0.to_string(), "0.2");
        let at1 = e.substitute(Var::S, 1.0);
        assert!((at1.eval(9.0, 2.0).unwrap() - e.eval(1.0, 2.0).unwrap()).abs() < 1e-15);
    }
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ev(text: &str, s: f64, t: f64) -> f64 {
        parse(text).unwrap().eval(s, t).unwrap()
    }

    #[test]
    fn evaluates_examples() {
        assert_eq!(ev("s*t + 1", 2.0, 3.0), 7.0);
        assert!((ev("sin(s)^2 + cos(s)^2", 0.7, 0.0) - 1.0).abs() <= 1e-15);
        assert_eq!(ev("2^3", 0.0, 0.0), 8.0);
        assert_eq!(ev("sqrt(s^2+t^2)", 3.0, 4.0), 5.0);
    }

    #[test]
    fn pole_is_a_domain_error() {
        let err = parse("1/(s-1)").unwrap().eval(1.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("division by zero"), "{err}");
        assert!(err.expr.contains("s - 1"), "{err}");
        let err = parse("log(s)").unwrap().eval(-1.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("log"), "{err}");
    }

    #[test]
    fn derivative_examples() {
        let d = parse("s^2").unwrap().diff(Var::S);
        assert_eq!(d.eval(3.0, 0.0).unwrap(), 6.0);
        let d = parse("sin(s*t)").unwrap().diff(Var::T);
        assert_eq!(d.eval(2.0, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let e = parse("exp(s)*cos(t)+s*t^3").unwrap();
        let d = e.diff(Var::S);
        let (s, t, h) = (0.4, 1.2, 1e-5);
        let fd = (e.eval(s + h, t).unwrap() - e.eval(s - h, t).unwrap()) / (2.0 * h);
        assert!((d.eval(s, t).unwrap() - fd).abs() <= 1e-8);
    }

    #[test]
    fn every_function_differentiates() {
        for f in Func::ALL {
            let e = parse(&format!("{}(0.5 + 0.3*s*t)", f.name())).unwrap();
            for var in [Var::S, Var::T] {
                let d = e.diff(var);
                let (s, t, h) = (0.6, 0.7, 1e-5);
                let fd = match var {
                    Var::S => (e.eval(s + h, t).unwrap() - e.eval(s - h, t).unwrap()) / (2.0 * h),
                    Var::T => (e.eval(s, t + h).unwrap() - e.eval(s, t - h).unwrap()) / (2.0 * h),
                };
                assert!((d.eval(s, t).unwrap() - fd).abs() < 1e-8, "{} d{}", f.name(), var.name());
            }
        }
    }

    #[test]
    fn phi_node_differentiates() {
        let q = parse("s^2 + t^2 + 0.5*s").unwrap();
        for n in 0..4 {
            let e = Expr::phi(n, &q);
            let d = e.diff(Var::S);
            let (s, t, h) = (0.9, 1.3, 1e-5);
            let fd = (e.eval(s + h, t).unwrap() - e.eval(s - h, t).unwrap()) / (2.0 * h);
            assert!((d.eval(s, t).unwrap() - fd).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn negative_exponents() {
        assert_eq!(ev("s^-2", 2.0, 0.0), 0.25);
        let d = parse("s^-2").unwrap().diff(Var::S);
        assert_eq!(d.eval(2.0, 0.0).unwrap(), -0.25);
        assert!(parse("s^-1").unwrap().eval(0.0, 0.0).is_err());
    }

    #[test]
    fn unary_minus_binds_to_base() {
        // '-' base, then '^': (-s)^2
        assert_eq!(ev("-s^2", 3.0, 0.0), 9.0);
        assert_eq!(ev("-(s^2)", 3.0, 0.0), -9.0);
        assert_eq!(ev("2*-s", 3.0, 0.0), -6.0);
    }

    #[test]
    fn depends_on_detects_variables() {
        let e = parse("cos(t) + 2*t").unwrap();
        assert!(e.depends_on(Var::T));
        assert!(!e.depends_on(Var::S));
        assert!(!parse("s - s*0").unwrap().depends_on(Var::T));
    }

    fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
        if depth == 0 || rng.gen_bool(0.3) {
            return match rng.gen_range(0..4) {
                0 => "s".into(),
                1 => "t".into(),
                2 => format!("{:?}", rng.gen_range(-2.0..2.0f64)),
                _ => format!("{}", rng.gen_range(1..5)),
            };
        }
        let a = random_expr(rng, depth - 1);
        let b = random_expr(rng, depth - 1);
        match rng.gen_range(0..9) {
            0 => format!("{a} + {b}"),
            1 => format!("{a} - ({b})"),
            2 => format!("({a})*({b})"),
            3 => format!("({a})/(2.5 + sin({b}))"),
            4 => format!("({a})^{}", rng.gen_range(0..4)),
            5 => format!("-({a})"),
            6 => format!("exp(0.1*({a}))"),
            7 => format!("cosh(0.2*({a}))"),
            _ => format!("sin({a})*cos({b})"),
        }
    }

    #[test]
    fn print_parse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let text = random_expr(&mut rng, 4);
            let e = parse(&text).unwrap();
            let printed = e.to_string();
            let back = parse(&printed).unwrap_or_else(|err| panic!("{printed}: {err}"));
            let (ta, tb) = (Tape::compile(&[e]), Tape::compile(&[back]));
            for _ in 0..100 {
                let (s, t) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                match (ta.eval(s, t), tb.eval(s, t)) {
                    (Ok(a), Ok(b)) => assert!((a[0] - b[0]).abs() <= 1e-14, "{text} -> {printed}"),
                    (Err(_), Err(_)) => {}
                    (a, b) => panic!("mismatch {a:?} {b:?} for {text}"),
                }
            }
        }
    }

    proptest! {
        #[test]
        fn differentiation_is_linear(alpha in -3.0..3.0f64, beta in -3.0..3.0f64, s in -1.0..1.0f64, t in -1.0..1.0f64) {
            let e1 = parse("sin(s*t) + s^3").unwrap();
            let e2 = parse("exp(t)*cos(s) - t/(2+s)").unwrap();
            let combo = &(&Expr::constant(alpha) * &e1) + &(&Expr::constant(beta) * &e2);
            for var in [Var::S, Var::T] {
                let lhs = combo.diff(var).eval(s, t).unwrap();
                let rhs = alpha * e1.diff(var).eval(s, t).unwrap() + beta * e2.diff(var).eval(s, t).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12);
            }
        }

        #[test]
        fn mixed_partials_commute(s in -1.0..1.0f64, t in -1.0..1.0f64) {
            for text in ["sin(s*t)*exp(s) + t^3*s^2", "cosh(s - t)/(3 + cos(s*t))", "sqrt(2 + s^2*t^2)*log(3 + t)"] {
                let e = parse(text).unwrap();
                let st = e.diff(Var::S).diff(Var::T).eval(s, t).unwrap();
                let ts = e.diff(Var::T).diff(Var::S).eval(s, t).unwrap();
                prop_assert!((st - ts).abs() <= 1e-12, "{text}: {st} vs {ts}");
            }
        }
    }
}

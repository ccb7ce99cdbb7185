//! The point-symmetry group of `∂t κ = ∂s ω + ω × κ` and the general solution
//! it generates.
//!
//! For an arbitrary vector function `p(s, t)` with skew matrix `A = hat(p)` and
//! `|p| = p`, the group element (with the group parameter absorbed into `p`) maps
//!
//! ```text
//! ω' = exp(A) ω + J(p) ∂t p,     κ' = exp(A) κ + J(p) ∂s p,
//! J(p) = I + (1 - cos p)/p² A + (p - sin p)/p³ A²
//! ```
//!
//! and leaves `s`, `t` unchanged. Applied to `ω = f(t)`, `κ = 0` this yields the
//! general solution.

use thiserror::Error;

use crate::exprfield::{EvalError, Expr, Tape, Var, VecExpr};
use crate::linalg3::Vec3;

pub use crate::coeffs::coeffs;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymmetryError {
    #[error("f component {component} depends on s; initial twist data must be a function of t only")]
    InitialDataDependsOnS { component: usize },
    #[error("supplied ∂{var} p component {component} disagrees with the symbolic derivative by {delta:e} at ({s}, {t})")]
    DerivativeMismatch {
        var: &'static str,
        component: usize,
        s: f64,
        t: f64,
        delta: f64,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

const VALIDATION_POINTS: usize = 10;
const VALIDATION_TOL: f64 = 1e-12;

/// The generator data: `p` and its first partials.
#[derive(Debug, Clone)]
pub struct SymmetryData {
    p: VecExpr,
    dp_ds: VecExpr,
    dp_dt: VecExpr,
    tape: Tape,
}

impl SymmetryData {
    /// Derives the partials symbolically.
    pub fn new(p: VecExpr) -> Self {
        let dp_ds = p.diff(Var::S);
        let dp_dt = p.diff(Var::T);
        Self::assemble(p, dp_ds, dp_dt)
    }

    /// Accepts caller-supplied partials after checking them against the symbolic
    /// derivatives at sample points of the unit square.
    pub fn with_derivatives(p: VecExpr, dp_ds: VecExpr, dp_dt: VecExpr) -> Result<Self, SymmetryError> {
        let reference = Tape::compile(
            &[p.diff(Var::S).0, p.diff(Var::T).0, dp_ds.0.clone(), dp_dt.0.clone()].concat(),
        );
        for k in 0..VALIDATION_POINTS {
            // low-discrepancy points in [0, 1]^2
            let s = (k as f64 + 0.5) / VALIDATION_POINTS as f64;
            let t = ((k as f64 * 0.618_033_988_749_895) + 0.25).fract();
            let v = reference.eval(s, t)?;
            for c in 0..6 {
                let delta = (v[c] - v[c + 6]).abs();
                if delta > VALIDATION_TOL * v[c].abs().max(1.0) {
                    return Err(SymmetryError::DerivativeMismatch {
                        var: if c < 3 { "s" } else { "t" },
                        component: c % 3,
                        s,
                        t,
                        delta,
                    });
                }
            }
        }
        Ok(Self::assemble(p, dp_ds, dp_dt))
    }

    fn assemble(p: VecExpr, dp_ds: VecExpr, dp_dt: VecExpr) -> Self {
        let tape = Tape::compile(&[p.0.clone(), dp_ds.0.clone(), dp_dt.0.clone()].concat());
        SymmetryData { p, dp_ds, dp_dt, tape }
    }

    pub fn p(&self) -> &VecExpr {
        &self.p
    }

    pub fn dp_ds(&self) -> &VecExpr {
        &self.dp_ds
    }

    pub fn dp_dt(&self) -> &VecExpr {
        &self.dp_dt
    }

    /// `(p, ∂s p, ∂t p)` at a point.
    pub fn eval(&self, s: f64, t: f64) -> Result<(Vec3, Vec3, Vec3), EvalError> {
        let v = self.tape.eval_vec3s(s, t)?;
        Ok((v[0], v[1], v[2]))
    }
}

/// `J(p) dp = dp + c2 p × dp + c3 (p (p·dp) - p² dp)`, the `v`-independent part of
/// the group action.
pub fn transport(p: Vec3, dp: Vec3) -> Vec3 {
    let (_, c2, c3) = coeffs(p.norm());
    let q = p.norm_squared();
    dp + p.cross(&dp) * c2 + (p * p.dot(&dp) - dp * q) * c3
}

/// `exp(hat(p)) v + J(p) dp`.
pub fn transform_vector(p: Vec3, v: Vec3, dp: Vec3) -> Vec3 {
    let (c1, c2, _) = coeffs(p.norm());
    let q = p.norm_squared();
    v + p.cross(&v) * c1 + (p * p.dot(&v) - v * q) * c2 + transport(p, dp)
}

/// Image of a twist value `ω` under the group element of `sd` at `(s, t)`.
pub fn act_omega(sd: &SymmetryData, omega: Vec3, (s, t): (f64, f64)) -> Result<Vec3, EvalError> {
    let (p, _, dp_dt) = sd.eval(s, t)?;
    Ok(transform_vector(p, omega, dp_dt))
}

/// Image of a Darboux value `κ`; same structure as [`act_omega`] with `∂s p`.
pub fn act_kappa(sd: &SymmetryData, kappa: Vec3, (s, t): (f64, f64)) -> Result<Vec3, EvalError> {
    let (p, dp_ds, _) = sd.eval(s, t)?;
    Ok(transform_vector(p, kappa, dp_ds))
}

/// Symbolic form of [`transform_vector`].
pub fn transform_expr(p: &VecExpr, v: &VecExpr, dp: &VecExpr) -> VecExpr {
    let q = p.norm_squared();
    let c1 = Expr::phi(1, &q);
    let c2 = Expr::phi(2, &q);
    let c3 = Expr::phi(3, &q);
    let rotated = v
        .add(&p.cross(v).scale(&c1))
        .add(&p.scale(&p.dot(v)).sub(&v.scale(&q)).scale(&c2));
    let transported = dp
        .add(&p.cross(dp).scale(&c2))
        .add(&p.scale(&p.dot(dp)).sub(&dp.scale(&q)).scale(&c3));
    rotated.add(&transported)
}

/// A vector field with symbolic first partials.
#[derive(Debug, Clone)]
pub struct DiffField {
    pub value: VecExpr,
    pub d_ds: VecExpr,
    pub d_dt: VecExpr,
}

impl DiffField {
    pub fn new(value: VecExpr) -> Self {
        let d_ds = value.diff(Var::S);
        let d_dt = value.diff(Var::T);
        DiffField { value, d_ds, d_dt }
    }
}

/// How a [`SolutionFamily`] was produced.
#[derive(Debug, Clone)]
pub enum Provenance {
    General { p: VecExpr, f: VecExpr },
    Transformed { base: Box<Provenance>, p: VecExpr },
    Fields,
}

/// `ω`, `κ` and their partials at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub omega: Vec3,
    pub omega_s: Vec3,
    pub omega_t: Vec3,
    pub kappa: Vec3,
    pub kappa_s: Vec3,
    pub kappa_t: Vec3,
}

impl FieldSample {
    /// `F = ∂s ω - ∂t κ + ω × κ`.
    pub fn residual(&self) -> Vec3 {
        self.omega_s - self.kappa_t + self.omega.cross(&self.kappa)
    }
}

/// A pair of fields `ω(s, t)`, `κ(s, t)` with exact partials.
#[derive(Debug, Clone)]
pub struct SolutionFamily {
    pub omega: DiffField,
    pub kappa: DiffField,
    pub provenance: Provenance,
    tape: Tape,
}

impl SolutionFamily {
    /// Wraps arbitrary fields; nothing guarantees they solve the equation.
    pub fn from_fields(omega: VecExpr, kappa: VecExpr) -> Self {
        Self::build(omega, kappa, Provenance::Fields)
    }

    fn build(omega: VecExpr, kappa: VecExpr, provenance: Provenance) -> Self {
        let omega = DiffField::new(omega);
        let kappa = DiffField::new(kappa);
        let tape = Tape::compile(
            &[
                omega.value.0.clone(),
                omega.d_ds.0.clone(),
                omega.d_dt.0.clone(),
                kappa.value.0.clone(),
                kappa.d_ds.0.clone(),
                kappa.d_dt.0.clone(),
            ]
            .concat(),
        );
        SolutionFamily {
            omega,
            kappa,
            provenance,
            tape,
        }
    }

    /// Applies the group element generated by `p` to both fields, symbolically.
    pub fn transform(&self, p: &VecExpr) -> SolutionFamily {
        let sd = SymmetryData::new(p.clone());
        let omega = transform_expr(sd.p(), &self.omega.value, sd.dp_dt());
        let kappa = transform_expr(sd.p(), &self.kappa.value, sd.dp_ds());
        let provenance = Provenance::Transformed {
            base: Box::new(self.provenance.clone()),
            p: p.clone(),
        };
        Self::build(omega, kappa, provenance)
    }

    pub fn eval(&self, s: f64, t: f64) -> Result<FieldSample, EvalError> {
        let v = self.tape.eval_vec3s(s, t)?;
        Ok(FieldSample {
            omega: v[0],
            omega_s: v[1],
            omega_t: v[2],
            kappa: v[3],
            kappa_s: v[4],
            kappa_t: v[5],
        })
    }

    pub fn residual_at(&self, s: f64, t: f64) -> Result<Vec3, EvalError> {
        Ok(self.eval(s, t)?.residual())
    }

    /// Number of distinct operations evaluated per point.
    pub fn tape_len(&self) -> usize {
        self.tape.len()
    }
}

/// The general solution: the image of `ω = f(t)`, `κ = 0` under the element
/// generated by `p`.
pub fn general_solution(p: &VecExpr, f: &VecExpr) -> Result<SolutionFamily, SymmetryError> {
    if let Some(component) = f.components().iter().position(|e| e.depends_on(Var::S)) {
        return Err(SymmetryError::InitialDataDependsOnS { component });
    }
    let sd = SymmetryData::new(p.clone());
    let omega = transform_expr(sd.p(), f, sd.dp_dt());
    let kappa = transform_expr(sd.p(), &VecExpr::zero(), sd.dp_ds());
    Ok(SolutionFamily::build(
        omega,
        kappa,
        Provenance::General {
            p: p.clone(),
            f: f.clone(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::SMALL_ANGLE;
    use crate::linalg3::{rodrigues_exp, Mat3};

    fn vexpr(c: [&str; 3]) -> VecExpr {
        VecExpr::parse(c).unwrap()
    }

    #[test]
    fn coeff_branches_agree_at_threshold() {
        let p = SMALL_ANGLE;
        let (p2, p4) = (p * p, p * p * p * p);
        let taylor = (
            1.0 - p2 / 6.0 + p4 / 120.0,
            0.5 - p2 / 24.0 + p4 / 720.0,
            1.0 / 6.0 - p2 / 120.0 + p4 / 5040.0,
        );
        let closed = coeffs(p);
        assert!((taylor.0 - closed.0).abs() <= 1e-12);
        assert!((taylor.1 - closed.1).abs() <= 1e-12);
        assert!((taylor.2 - closed.2).abs() <= 1e-12);
    }

    #[test]
    fn zero_generator_is_identity() {
        let sd = SymmetryData::new(VecExpr::zero());
        let w = Vec3::new(0.4, -1.0, 2.0);
        assert_eq!(act_omega(&sd, w, (0.3, 0.7)).unwrap(), w);
        assert_eq!(act_kappa(&sd, w, (0.3, 0.7)).unwrap(), w);
    }

    #[test]
    fn constant_generator_rotates() {
        let p = Vec3::new(0.3, -0.2, 0.1);
        let sd = SymmetryData::new(VecExpr::constant(p));
        let w = Vec3::new(1.0, 0.0, 0.0);
        let got = act_omega(&sd, w, (0.5, 0.5)).unwrap();
        assert!((got - rodrigues_exp(p) * w).norm_inf() < 1e-15);
    }

    #[test]
    fn kappa_action_without_gradient_keeps_zero() {
        let sd = SymmetryData::new(vexpr(["0.3", "t", "t^2"]));
        assert_eq!(act_kappa(&sd, Vec3::ZERO, (0.2, 0.9)).unwrap(), Vec3::ZERO);
    }

    #[test]
    fn omega_and_kappa_actions_share_structure() {
        // ∂s p == ∂t p for functions of s + t
        let sd = SymmetryData::new(vexpr(["sin(s+t)", "0.5*(s+t)^2", "0.2*(s+t)"]));
        let v = Vec3::new(0.7, -0.3, 1.1);
        for &(s, t) in &[(0.1, 0.2), (0.5, 0.5), (0.9, 0.3)] {
            let a = act_omega(&sd, v, (s, t)).unwrap();
            let b = act_kappa(&sd, v, (s, t)).unwrap();
            assert!((a - b).norm_inf() <= 1e-14);
        }
    }

    fn simpson<F: Fn(f64) -> Mat3>(f: F, panels: usize) -> Mat3 {
        let h = 1.0 / panels as f64;
        let mut acc = f(0.0) + f(1.0);
        for i in 1..panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc = acc + f(i as f64 * h) * w;
        }
        acc * (h / 3.0)
    }

    #[test]
    fn action_matches_quadrature_of_group_flow() {
        let sd = SymmetryData::new(vexpr(["s+t", "0.5*(s+t)^2 - s", "sin(s+t)*t"]));
        let (s, t) = (0.5, 0.5);
        let (p, _, dp_dt) = sd.eval(s, t).unwrap();
        let w = Vec3::new(0.2, 1.0, -0.4);
        let e = rodrigues_exp(p);
        let integral = simpson(|y| rodrigues_exp(p * -y), 10_000);
        let oracle = e * w + e * (integral * dp_dt);
        let got = act_omega(&sd, w, (s, t)).unwrap();
        assert!((got - oracle).norm_inf() <= 1e-8, "{got} vs {oracle}");
    }

    #[test]
    fn inverse_for_constant_generator() {
        let p = VecExpr::constant(Vec3::new(1.2, -0.7, 2.2));
        let sd = SymmetryData::new(p.clone());
        let inv = SymmetryData::new(p.neg());
        let w = Vec3::new(0.3, 0.1, -2.0);
        let back = act_omega(&inv, act_omega(&sd, w, (0.1, 0.2)).unwrap(), (0.1, 0.2)).unwrap();
        assert!((back - w).norm_inf() <= 1e-10);
    }

    #[test]
    fn supplied_derivatives_are_validated() {
        let p = vexpr(["s*t", "sin(s)", "t^2"]);
        let ok = SymmetryData::with_derivatives(p.clone(), vexpr(["t", "cos(s)", "0"]), vexpr(["s", "0", "2*t"]));
        assert!(ok.is_ok());
        let bad = SymmetryData::with_derivatives(p, vexpr(["t", "cos(s)", "0"]), vexpr(["s", "0", "t"]));
        assert!(matches!(
            bad,
            Err(SymmetryError::DerivativeMismatch {
                var: "t",
                component: 2,
                ..
            })
        ));
    }

    #[test]
    fn trivial_generator_returns_initial_data() {
        let fam = general_solution(&VecExpr::zero(), &vexpr(["sin(t)", "0", "0"])).unwrap();
        for &(s, t) in &[(0.0, 0.3), (0.8, 1.7)] {
            let x = fam.eval(s, t).unwrap();
            assert_eq!(x.omega, Vec3::new(t.sin(), 0.0, 0.0));
            assert_eq!(x.kappa, Vec3::ZERO);
        }
    }

    #[test]
    fn parallel_gradient_collapses_corrections() {
        let fam = general_solution(&vexpr(["0.1*s", "0", "0"]), &VecExpr::zero()).unwrap();
        for &(s, t) in &[(0.0, 0.0), (0.5, 0.2), (1.0, 1.0)] {
            let x = fam.eval(s, t).unwrap();
            assert!((x.kappa - Vec3::new(0.1, 0.0, 0.0)).norm_inf() < 1e-16);
            assert!(x.omega.norm_inf() < 1e-16);
        }
    }

    #[test]
    fn general_solution_residual_on_grid() {
        let fam = general_solution(&vexpr(["0.3*s*t", "0.2*sin(s)", "0.1*t^2"]), &vexpr(["cos(t)", "t", "1"])).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..21 {
            for j in 0..21 {
                let r = fam.residual_at(i as f64 / 20.0, j as f64 / 20.0).unwrap();
                worst = worst.max(r.norm_inf());
            }
        }
        assert!(worst <= 1e-9, "max residual {worst}");
    }

    #[test]
    fn rejects_s_dependent_initial_data() {
        let err = general_solution(&VecExpr::zero(), &vexpr(["t", "s*t", "1"])).unwrap_err();
        assert_eq!(err, SymmetryError::InitialDataDependsOnS { component: 1 });
    }

    #[test]
    fn residual_through_vanishing_generator() {
        // p passes through zero at (0, 0); the Taylor branch covers it
        let fam = general_solution(&vexpr(["s", "t", "s*t"]), &vexpr(["1", "cos(t)", "0"])).unwrap();
        for &(s, t) in &[(0.0, 0.0), (1e-6, 0.0), (0.0, 3e-5)] {
            assert!(fam.residual_at(s, t).unwrap().norm_inf() < 1e-12);
        }
    }

    #[test]
    fn transformed_solution_stays_a_solution() {
        let base = general_solution(&VecExpr::zero(), &vexpr(["1", "0", "0"])).unwrap();
        let moved = base.transform(&vexpr(["s*t", "0", "0"]));
        for i in 0..11 {
            for j in 0..11 {
                let r = moved.residual_at(i as f64 / 10.0, j as f64 / 10.0).unwrap();
                assert!(r.norm_inf() <= 1e-8);
            }
        }
    }

    #[test]
    fn transform_by_zero_is_identity() {
        let base = general_solution(&vexpr(["0.3*s*t", "0.2*sin(s)", "0.1*t^2"]), &vexpr(["cos(t)", "t", "1"])).unwrap();
        let same = base.transform(&VecExpr::zero());
        for &(s, t) in &[(0.2, 0.4), (0.9, 0.1)] {
            assert_eq!(base.eval(s, t).unwrap(), same.eval(s, t).unwrap());
        }
    }
}

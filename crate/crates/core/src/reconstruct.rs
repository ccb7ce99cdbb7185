//! Inverse problem for the general solution: recover the generator `p(s, t)` from
//! a target Darboux field, then the initial twist data `f(t)` from `ω(0, t)`.
//!
//! The κ-equation of the general solution is linear in `∂s p`,
//! `κ = M(p) ∂s p` with `M(p) = I + c2(p) hat(p) + c3(p) hat(p)²`, so for given
//! initial values `p(0, t)` it becomes the ODE `∂s p = M(p)⁻¹ κ(s, t)` along each
//! line of constant `t`. The solve is local: `M` is singular where `|p| = 2πk`,
//! and integration stops there.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::coeffs::{coeffs, SMALL_ANGLE};
use crate::exprfield::{EvalError, Tape, Var, VecExpr};
use crate::linalg3::{hat, rodrigues_exp, Mat3, Vec3};
use crate::output::write_csv_row;
use crate::symmetry::transport;
use crate::verify::{GridSpec, VerifyError};

/// Integration stops once `|det M(p)|` falls below this.
pub const SINGULAR_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconstructError {
    #[error("Jacobian singular at (s, t) = ({s}, {t}): |det M| = {det:e} below {SINGULAR_THRESHOLD:e}")]
    Singular {
        s: f64,
        t: f64,
        det: f64,
        /// Everything integrated before the failure.
        partial: Box<ReconstructionResult>,
    },
    #[error("non-finite {what} at (s, t) = ({s}, {t})")]
    NonFinite { what: &'static str, s: f64, t: f64 },
    #[error("ODE step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("initial values p(0, t) must not depend on s")]
    InitialValuesDependOnS,
    #[error(transparent)]
    Grid(#[from] VerifyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Smallest `|det M(p)|` seen at any RK stage.
    pub min_abs_det: f64,
    /// Total RK4 steps over all lines.
    pub ode_steps: usize,
    pub ode_step: f64,
}

/// Sampled generator and initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub grid: GridSpec,
    /// `p` at grid point `(i, j)` stored at `i * nt + j`; `None` past a singularity.
    pub p: Vec<Option<Vec3>>,
    /// `f` on the t-axis of the grid; empty until recovered.
    pub f: Vec<Vec3>,
    pub diagnostics: Diagnostics,
}

impl ReconstructionResult {
    pub fn p_at(&self, i: usize, j: usize) -> Option<Vec3> {
        self.p[i * self.grid.nt + j]
    }

    /// `s,t,a,b,c`; unreached points are written as `NaN`.
    pub fn write_p_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "s,t,a,b,c")?;
        for i in 0..self.grid.ns {
            for j in 0..self.grid.nt {
                let p = self.p_at(i, j).unwrap_or(Vec3::new(f64::NAN, f64::NAN, f64::NAN));
                write_csv_row(out, &[self.grid.s_at(i), self.grid.t_at(j), p.x, p.y, p.z])?;
            }
        }
        Ok(())
    }

    /// `t,f1,f2,f3`.
    pub fn write_f_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "t,f1,f2,f3")?;
        for (j, f) in self.f.iter().enumerate() {
            write_csv_row(out, &[self.grid.t_at(j), f.x, f.y, f.z])?;
        }
        Ok(())
    }

    pub fn diagnostics_json(&self) -> serde_json::Value {
        serde_json::json!({
            "grid": self.grid,
            "diagnostics": self.diagnostics,
            "complete": self.p.iter().all(Option::is_some),
        })
    }
}

/// Signed closed form `2(cos p - 1)/p²` with `p = |p|`, Taylor-expanded below
/// [`SMALL_ANGLE`].
///
/// `jacobian_matrix(p).det()` is the negation of this value, `2(1 - cos p)/p²`
/// (it is `+1` at `p = 0`); magnitude and zero set `p = 2πk, k ≠ 0` coincide.
pub fn jacobian_det(p: Vec3) -> f64 {
    let a = p.norm();
    if a < SMALL_ANGLE {
        let q = a * a;
        return -1.0 + q / 12.0 - q * q / 360.0;
    }
    let (_, c2, _) = coeffs(a);
    -2.0 * c2
}

/// `M(p)` with `κ = M(p) ∂s p` in the general solution.
pub fn jacobian_matrix(p: Vec3) -> Mat3 {
    let (_, c2, c3) = coeffs(p.norm());
    let a = hat(p);
    Mat3::IDENTITY + a * c2 + (a * a) * c3
}

/// Recovers `p` on `grid` from `κ`, integrating in `s` from `p(s0, t) = p0(t)`
/// with fixed-step RK4 of (at most) `ode_step`.
pub fn solve_p_from_kappa<K>(
    kappa: &K,
    p0: &VecExpr,
    grid: &GridSpec,
    ode_step: f64,
) -> Result<ReconstructionResult, ReconstructError>
where
    K: Fn(f64, f64) -> Result<Vec3, EvalError> + Sync,
{
    grid.validate()?;
    if !(ode_step > 0.0 && ode_step.is_finite()) {
        return Err(ReconstructError::InvalidStep(ode_step));
    }
    if p0.depends_on(Var::S) {
        return Err(ReconstructError::InitialValuesDependOnS);
    }
    let p0_tape = p0.compile();
    let s_nodes = grid.s_values();
    let lines: Vec<LineOutcome> = grid
        .t_values()
        .into_par_iter()
        .map(|t| integrate_line(kappa, &p0_tape, &s_nodes, t, ode_step))
        .collect();

    let mut p = vec![None; grid.len()];
    let mut min_abs_det = f64::INFINITY;
    let mut ode_steps = 0;
    let mut failure = None;
    for (j, line) in lines.into_iter().enumerate() {
        for (i, v) in line.values.into_iter().enumerate() {
            p[i * grid.nt + j] = v;
        }
        min_abs_det = min_abs_det.min(line.min_abs_det);
        ode_steps += line.steps;
        if failure.is_none() {
            failure = line.failure;
        }
    }
    let result = ReconstructionResult {
        grid: *grid,
        p,
        f: Vec::new(),
        diagnostics: Diagnostics {
            min_abs_det,
            ode_steps,
            ode_step,
        },
    };
    match failure {
        None => Ok(result),
        Some(LineFailure::Singular { s, t, det }) => Err(ReconstructError::Singular {
            s,
            t,
            det,
            partial: Box::new(result),
        }),
        Some(LineFailure::Error(e)) => Err(e),
    }
}

enum LineFailure {
    Singular { s: f64, t: f64, det: f64 },
    Error(ReconstructError),
}

struct LineOutcome {
    values: Vec<Option<Vec3>>,
    min_abs_det: f64,
    steps: usize,
    failure: Option<LineFailure>,
}

fn integrate_line<K>(kappa: &K, p0: &Tape, s_nodes: &[f64], t: f64, ode_step: f64) -> LineOutcome
where
    K: Fn(f64, f64) -> Result<Vec3, EvalError> + Sync,
{
    let mut out = LineOutcome {
        values: vec![None; s_nodes.len()],
        min_abs_det: f64::INFINITY,
        steps: 0,
        failure: None,
    };
    let mut p = match p0.eval_vec3s(s_nodes[0], t) {
        Ok(v) => v[0],
        Err(e) => {
            out.failure = Some(LineFailure::Error(e.into()));
            return out;
        }
    };
    out.values[0] = Some(p);

    let rhs = |s: f64, p: Vec3, min_det: &mut f64| -> Result<Vec3, LineFailure> {
        let k = kappa(s, t).map_err(|e| LineFailure::Error(e.into()))?;
        if !k.is_finite() {
            return Err(LineFailure::Error(ReconstructError::NonFinite { what: "kappa", s, t }));
        }
        if !p.is_finite() {
            return Err(LineFailure::Error(ReconstructError::NonFinite { what: "p", s, t }));
        }
        let m = jacobian_matrix(p);
        let det = m.det();
        *min_det = min_det.min(det.abs());
        if det.abs() < SINGULAR_THRESHOLD {
            return Err(LineFailure::Singular { s, t, det: det.abs() });
        }
        Ok(m.adjugate() * k * (1.0 / det))
    };

    for (i, w) in s_nodes.windows(2).enumerate() {
        let span = w[1] - w[0];
        let n = ((span / ode_step) - 1e-9).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for k in 0..n {
            let s = w[0] + h * k as f64;
            let step = (|| {
                let k1 = rhs(s, p, &mut out.min_abs_det)?;
                let k2 = rhs(s + 0.5 * h, p + k1 * (0.5 * h), &mut out.min_abs_det)?;
                let k3 = rhs(s + 0.5 * h, p + k2 * (0.5 * h), &mut out.min_abs_det)?;
                let k4 = rhs(s + h, p + k3 * h, &mut out.min_abs_det)?;
                Ok(p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
            })();
            match step {
                Ok(next) => p = next,
                Err(f) => {
                    out.failure = Some(f);
                    return out;
                }
            }
            out.steps += 1;
        }
        out.values[i + 1] = Some(p);
    }
    out
}

/// `f(t) = exp(-hat(p)) (ω(0, t) - J(p) ∂t p)` evaluated at each `t`, with `p`,
/// `∂t p` taken at `s = 0`.
pub fn solve_f_from_omega<W, P, D>(omega0: W, p_at_0: P, dp_dt_at_0: D, ts: &[f64]) -> Result<Vec<Vec3>, EvalError>
where
    W: Fn(f64) -> Result<Vec3, EvalError>,
    P: Fn(f64) -> Result<Vec3, EvalError>,
    D: Fn(f64) -> Result<Vec3, EvalError>,
{
    ts.iter()
        .map(|&t| {
            let p = p_at_0(t)?;
            let rest = omega0(t)? - transport(p, dp_dt_at_0(t)?);
            Ok(rodrigues_exp(-p) * rest)
        })
        .collect()
}

/// Full inverse map: `p` from `κ` with initial values `p0(t)` at `s = grid.s0`,
/// then `f` from `ω(s0, t)`.
pub fn reconstruct<K, W>(
    kappa: &K,
    omega: &W,
    p0: &VecExpr,
    grid: &GridSpec,
    ode_step: f64,
) -> Result<ReconstructionResult, ReconstructError>
where
    K: Fn(f64, f64) -> Result<Vec3, EvalError> + Sync,
    W: Fn(f64, f64) -> Result<Vec3, EvalError>,
{
    let mut result = solve_p_from_kappa(kappa, p0, grid, ode_step)?;
    let tape = Tape::compile(&[p0.0.clone(), p0.diff(Var::T).0].concat());
    let s0 = grid.s0;
    let eval = |t: f64| tape.eval_vec3s(s0, t);
    result.f = solve_f_from_omega(
        |t| omega(s0, t),
        |t| Ok(eval(t)?[0]),
        |t| Ok(eval(t)?[1]),
        &grid.t_values(),
    )?;
    Ok(result)
}

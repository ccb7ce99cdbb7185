//! Residuals of the compatibility equation `F = ∂s ω - ∂t κ + ω × κ` on grids,
//! finite-difference cross-checks of the symbolic partials, and the operational
//! "solutions map to solutions" test.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exprfield::{parse, EvalError, Tape, VecExpr};
use crate::linalg3::Vec3;
use crate::output::write_csv_row;
use crate::symmetry::{DiffField, SolutionFamily};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Residual bounds. Both are overridable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// For fields produced directly by the general solution.
    pub direct: f64,
    /// For fields composed with a further symmetry transformation.
    pub composed: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            direct: 1e-9,
            composed: 1e-8,
        }
    }
}

/// Tensor grid on `[s0, s1] x [t0, t1]` with inclusive endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub s0: f64,
    pub s1: f64,
    pub ns: usize,
    pub t0: f64,
    pub t1: f64,
    pub nt: usize,
}

impl GridSpec {
    pub fn new(s0: f64, s1: f64, ns: usize, t0: f64, t1: f64, nt: usize) -> Result<Self, VerifyError> {
        let g = GridSpec { s0, s1, ns, t0, t1, nt };
        g.validate()?;
        Ok(g)
    }

    /// `n x n` grid over the unit square.
    pub fn unit(n: usize) -> Self {
        GridSpec {
            s0: 0.0,
            s1: 1.0,
            ns: n,
            t0: 0.0,
            t1: 1.0,
            nt: n,
        }
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        if self.ns < 2 || self.nt < 2 {
            return Err(VerifyError::InvalidGrid(format!(
                "need at least 2 points per axis, got ns={} nt={}",
                self.ns, self.nt
            )));
        }
        let bounds = [self.s0, self.s1, self.t0, self.t1];
        if bounds.iter().any(|v| !v.is_finite()) || self.s1 <= self.s0 || self.t1 <= self.t0 {
            return Err(VerifyError::InvalidGrid(format!(
                "bounds must be finite and increasing: s in [{}, {}], t in [{}, {}]",
                self.s0, self.s1, self.t0, self.t1
            )));
        }
        Ok(())
    }

    pub fn s_at(&self, i: usize) -> f64 {
        axis_point(self.s0, self.s1, self.ns, i)
    }

    pub fn t_at(&self, j: usize) -> f64 {
        axis_point(self.t0, self.t1, self.nt, j)
    }

    pub fn s_values(&self) -> Vec<f64> {
        (0..self.ns).map(|i| self.s_at(i)).collect()
    }

    pub fn t_values(&self) -> Vec<f64> {
        (0..self.nt).map(|j| self.t_at(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.ns * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in s-major order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let ts = self.t_values();
        self.s_values()
            .into_iter()
            .flat_map(|s| ts.iter().map(move |&t| (s, t)))
            .collect()
    }
}

fn axis_point(a: f64, b: f64, n: usize, i: usize) -> f64 {
    if i + 1 == n {
        b
    } else {
        a + (b - a) * i as f64 / (n - 1) as f64
    }
}

impl FromStr for GridSpec {
    type Err = VerifyError;

    /// `s0,s1,ns,t0,t1,nt`
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(VerifyError::InvalidGrid(format!(
                "expected s0,s1,ns,t0,t1,nt, got `{text}`"
            )));
        }
        let real = |k: usize| {
            parts[k]
                .parse::<f64>()
                .map_err(|_| VerifyError::InvalidGrid(format!("`{}` is not a number", parts[k])))
        };
        let count = |k: usize| {
            parts[k]
                .parse::<usize>()
                .map_err(|_| VerifyError::InvalidGrid(format!("`{}` is not a point count", parts[k])))
        };
        GridSpec::new(real(0)?, real(1)?, count(2)?, real(3)?, real(4)?, count(5)?)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{},{},{}", self.s0, self.s1, self.ns, self.t0, self.t1, self.nt)
    }
}

/// How partial derivatives enter the residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DerivativeMode {
    Exact,
    FiniteDifference { h: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointResidual {
    pub s: f64,
    pub t: f64,
    pub f: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub grid: GridSpec,
    pub mode: DerivativeMode,
    pub points: Vec<PointResidual>,
    /// Largest component magnitude over the grid.
    pub max_norm: f64,
    /// Root mean square of the Euclidean residual over grid points.
    pub l2_norm: f64,
}

impl ResidualReport {
    fn from_points(grid: GridSpec, mode: DerivativeMode, points: Vec<PointResidual>) -> Self {
        let max_norm = points.iter().fold(0.0_f64, |m, p| m.max(p.f.norm_inf()));
        let sum_sq: f64 = points.iter().map(|p| p.f.norm_squared()).sum();
        let l2_norm = (sum_sq / points.len().max(1) as f64).sqrt();
        ResidualReport {
            grid,
            mode,
            points,
            max_norm,
            l2_norm,
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_norm <= tol
    }

    /// JSON summary; per-point residuals only when `include_points`.
    pub fn to_json(&self, include_points: bool) -> serde_json::Value {
        let mut v = serde_json::json!({
            "grid": self.grid,
            "mode": self.mode,
            "max_norm": self.max_norm,
            "l2_norm": self.l2_norm,
        });
        if include_points {
            v["points"] = serde_json::to_value(&self.points).expect("residuals serialize");
        }
        v
    }

    /// `s,t,F1,F2,F3` rows.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "s,t,F1,F2,F3")?;
        for p in &self.points {
            write_csv_row(out, &[p.s, p.t, p.f.x, p.f.y, p.f.z])?;
        }
        Ok(())
    }
}

/// Evaluates `F` over the grid, either with the symbolic partials or with
/// central differences of step `h`.
pub fn residual_subsystem(
    family: &SolutionFamily,
    grid: &GridSpec,
    mode: DerivativeMode,
) -> Result<ResidualReport, VerifyError> {
    grid.validate()?;
    if let DerivativeMode::FiniteDifference { h } = mode {
        check_step(h)?;
    }
    let points: Result<Vec<_>, VerifyError> = grid
        .points()
        .into_par_iter()
        .map(|(s, t)| {
            let f = match mode {
                DerivativeMode::Exact => family.residual_at(s, t)?,
                DerivativeMode::FiniteDifference { h } => fd_residual(family, s, t, h)?,
            };
            Ok(PointResidual { s, t, f })
        })
        .collect();
    Ok(ResidualReport::from_points(*grid, mode, points?))
}

fn fd_residual(family: &SolutionFamily, s: f64, t: f64, h: f64) -> Result<Vec3, EvalError> {
    let here = family.eval(s, t)?;
    let sp = family.eval(s + h, t)?;
    let sm = family.eval(s - h, t)?;
    let tp = family.eval(s, t + h)?;
    let tm = family.eval(s, t - h)?;
    let omega_s = (sp.omega - sm.omega) * (0.5 / h);
    let kappa_t = (tp.kappa - tm.kappa) * (0.5 / h);
    Ok(omega_s - kappa_t + here.omega.cross(&here.kappa))
}

fn check_step(h: f64) -> Result<(), VerifyError> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(VerifyError::InvalidStep(h))
    }
}

/// Largest discrepancy between symbolic and central-difference partials of
/// `field` (both variables, all components) over the grid.
pub fn fd_crosscheck(field: &DiffField, grid: &GridSpec, h: f64) -> Result<f64, VerifyError> {
    check_step(h)?;
    grid.validate()?;
    let tape = Tape::compile(&[field.value.0.clone(), field.d_ds.0.clone(), field.d_dt.0.clone()].concat());
    let errors: Result<Vec<f64>, VerifyError> = grid
        .points()
        .into_par_iter()
        .map(|(s, t)| {
            let v = tape.eval_vec3s(s, t)?;
            let value = |s, t| -> Result<Vec3, EvalError> { Ok(tape.eval_vec3s(s, t)?[0]) };
            let fd_s = (value(s + h, t)? - value(s - h, t)?) * (0.5 / h);
            let fd_t = (value(s, t + h)? - value(s, t - h)?) * (0.5 / h);
            Ok((fd_s - v[1]).norm_inf().max((fd_t - v[2]).norm_inf()))
        })
        .collect();
    Ok(errors?.into_iter().fold(0.0, f64::max))
}

/// Transforms `base` by the element generated by `p` and reports the residual of
/// the image.
pub fn symmetry_closure_test(
    base: &SolutionFamily,
    p: &VecExpr,
    grid: &GridSpec,
) -> Result<ResidualReport, VerifyError> {
    residual_subsystem(&base.transform(p), grid, DerivativeMode::Exact)
}

const TERMS_ST: [&str; 7] = ["1", "s", "t", "s*t", "sin(s)", "cos(t)", "sin(s*t)"];
const TERMS_T: [&str; 3] = ["1", "t", "cos(t)"];

/// Seeded generator of bounded trigonometric/polynomial test expressions.
///
/// Each component is a sum of one to three terms `c * a` or `c * a * b` with
/// `c ~ U[-0.5, 0.5]` and `a`, `b` drawn from `{1, s, t, s*t, sin s, cos t, sin(s*t)}`
/// (only `{1, t, cos t}` for functions of `t`). On the unit square every
/// component stays within 1.5, so `|p| < 2π`.
#[derive(Debug, Clone)]
pub struct ExpressionSampler {
    rng: ChaCha8Rng,
}

/// One random `(p, f, p')` triple, as text and parsed.
#[derive(Debug, Clone)]
pub struct RandomDraw {
    pub p_text: [String; 3],
    pub f_text: [String; 3],
    pub p_prime_text: [String; 3],
    pub p: VecExpr,
    pub f: VecExpr,
    pub p_prime: VecExpr,
}

impl ExpressionSampler {
    pub fn new(seed: u64) -> Self {
        ExpressionSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn component(&mut self, atoms: &[&str]) -> String {
        let n_terms = self.rng.gen_range(1..=3);
        let mut terms = Vec::with_capacity(n_terms);
        for _ in 0..n_terms {
            let c: f64 = self.rng.gen_range(-0.5..=0.5);
            let a = atoms[self.rng.gen_range(0..atoms.len())];
            let term = if self.rng.gen_bool(0.5) {
                let b = atoms[self.rng.gen_range(0..atoms.len())];
                format!("({c:?})*{a}*{b}")
            } else {
                format!("({c:?})*{a}")
            };
            terms.push(term);
        }
        terms.join(" + ")
    }

    fn vector(&mut self, atoms: &[&str]) -> [String; 3] {
        [self.component(atoms), self.component(atoms), self.component(atoms)]
    }

    pub fn draw(&mut self) -> RandomDraw {
        let p_text = self.vector(&TERMS_ST);
        let f_text = self.vector(&TERMS_T);
        let p_prime_text = self.vector(&TERMS_ST);
        let parse3 = |c: &[String; 3]| {
            VecExpr::new(
                parse(&c[0]).expect("sampler emits valid syntax"),
                parse(&c[1]).expect("sampler emits valid syntax"),
                parse(&c[2]).expect("sampler emits valid syntax"),
            )
        };
        RandomDraw {
            p: parse3(&p_text),
            f: parse3(&f_text),
            p_prime: parse3(&p_prime_text),
            p_text,
            f_text,
            p_prime_text,
        }
    }
}

//! Method-of-lines simulation of the full rod system in the strain/velocity
//! variables `(κ, ν, ω, υ)`:
//!
//! ```text
//! ∂t κ = ∂s ω + ω × κ
//! ∂t ν = ∂s υ + κ × υ − ω × ν
//! ρJ ∂t ω = ∂s m + κ × m + ν × n − ω × (ρJ ω)
//! ρA ∂t υ = ∂s n + κ × n − ω × (ρA υ) + f
//! ```
//!
//! with linear material laws, second-order finite differences in `s` and
//! classical RK4 in `t`.

mod config;
mod frame;
mod material;
mod mms;
mod rhs;
mod wave;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exprfield::{EvalError, ParseError, Var, VecExpr};
use crate::linalg3::Vec3;

pub use config::{
    run_simulation, GridConfig, InitialConditions, SimulationConfig, SimulationSummary, TimeConfig,
};
pub use frame::{reconstruct_frame, FrameField, FrameMode};
pub use material::{constitutive_m, constitutive_n, monotonicity_check, MaterialParams, MonotonicityReport};
pub use mms::{kappa_convergence, kappa_mms_error, kappa_rhs_error, ConvergenceStudy};
pub use rhs::{cfl_limit, check_cfl, rhs_full, step_rk4, CflPolicy, CflViolation, Derivatives, StepOptions};
pub use wave::pulse_shift;

pub const MIN_NODES: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RodError {
    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite {field} at node {node}")]
    NonFinite { field: &'static str, node: usize },
    #[error("time step {dt:e} exceeds the CFL limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("boundary triad is not orthonormal (defect {defect:e})")]
    NonOrthonormalTriad { defect: f64 },
    #[error("initial condition {field} must depend on s only")]
    InitialDependsOnT { field: &'static str },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("output failed: {0}")]
    Output(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Nodes at `s = i L / N`, `i < N`; node `N` coincides with node 0.
    Periodic,
    /// Clamped at `s = 0`, stress-free at `s = L`; nodes at `s = i L / (N - 1)`.
    ClampedFree,
}

impl BoundaryMode {
    pub fn is_periodic(self) -> bool {
        matches!(self, BoundaryMode::Periodic)
    }

    pub fn spacing(self, length: f64, nodes: usize) -> f64 {
        match self {
            BoundaryMode::Periodic => length / nodes as f64,
            BoundaryMode::ClampedFree => length / (nodes - 1) as f64,
        }
    }
}

/// Snapshot of the rod on a uniform grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct RodState {
    pub length: f64,
    pub boundary: BoundaryMode,
    pub time: f64,
    pub kappa: Vec<Vec3>,
    pub nu: Vec<Vec3>,
    pub omega: Vec<Vec3>,
    pub upsilon: Vec<Vec3>,
}

impl RodState {
    pub fn from_fields(
        length: f64,
        boundary: BoundaryMode,
        kappa: Vec<Vec3>,
        nu: Vec<Vec3>,
        omega: Vec<Vec3>,
        upsilon: Vec<Vec3>,
    ) -> Result<Self, RodError> {
        let n = kappa.len();
        if nu.len() != n || omega.len() != n || upsilon.len() != n {
            return Err(RodError::InvalidGrid("field lengths differ".into()));
        }
        validate_grid(length, n)?;
        let state = RodState {
            length,
            boundary,
            time: 0.0,
            kappa,
            nu,
            omega,
            upsilon,
        };
        state.check_finite()?;
        Ok(state)
    }

    pub fn uniform(
        length: f64,
        nodes: usize,
        boundary: BoundaryMode,
        [kappa, nu, omega, upsilon]: [Vec3; 4],
    ) -> Result<Self, RodError> {
        Self::from_fields(
            length,
            boundary,
            vec![kappa; nodes],
            vec![nu; nodes],
            vec![omega; nodes],
            vec![upsilon; nodes],
        )
    }

    /// The stress-free rest state `(κ°, ν°, 0, 0)`.
    pub fn equilibrium(length: f64, nodes: usize, boundary: BoundaryMode, mp: &MaterialParams) -> Result<Self, RodError> {
        Self::uniform(length, nodes, boundary, [mp.kappa0, mp.nu0, Vec3::ZERO, Vec3::ZERO])
    }

    /// Samples expressions in `s` (any `t` dependence is rejected) at every node.
    pub fn from_exprs(
        length: f64,
        nodes: usize,
        boundary: BoundaryMode,
        init: [&VecExpr; 4],
    ) -> Result<Self, RodError> {
        validate_grid(length, nodes)?;
        const NAMES: [&str; 4] = ["kappa", "nu", "omega", "upsilon"];
        let h = boundary.spacing(length, nodes);
        let mut fields: Vec<Vec<Vec3>> = Vec::with_capacity(4);
        for (expr, field) in init.into_iter().zip(NAMES) {
            if expr.depends_on(Var::T) {
                return Err(RodError::InitialDependsOnT { field });
            }
            let tape = expr.compile();
            let values = (0..nodes)
                .map(|i| tape.eval_vec3s(i as f64 * h, 0.0).map(|v| v[0]))
                .collect::<Result<Vec<_>, _>>()?;
            fields.push(values);
        }
        let upsilon = fields.pop().expect("four fields");
        let omega = fields.pop().expect("four fields");
        let nu = fields.pop().expect("four fields");
        let kappa = fields.pop().expect("four fields");
        let mut state = Self::from_fields(length, boundary, kappa, nu, omega, upsilon)?;
        state.apply_boundary();
        Ok(state)
    }

    pub fn nodes(&self) -> usize {
        self.kappa.len()
    }

    pub fn ds(&self) -> f64 {
        self.boundary.spacing(self.length, self.nodes())
    }

    pub fn s_at(&self, i: usize) -> f64 {
        i as f64 * self.ds()
    }

    pub fn check_finite(&self) -> Result<(), RodError> {
        for (field, values) in self.named_fields() {
            if let Some(node) = values.iter().position(|v| !v.is_finite()) {
                return Err(RodError::NonFinite { field, node });
            }
        }
        Ok(())
    }

    /// Largest absolute entry over all four fields.
    pub fn max_norm(&self) -> f64 {
        self.named_fields()
            .iter()
            .flat_map(|(_, v)| v.iter())
            .map(Vec3::norm_inf)
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry of the difference to `other` over all four fields.
    pub fn max_difference(&self, other: &RodState) -> f64 {
        self.named_fields()
            .iter()
            .zip(other.named_fields().iter())
            .flat_map(|((_, a), (_, b))| a.iter().zip(b.iter()))
            .map(|(a, b)| (*a - *b).norm_inf())
            .fold(0.0, f64::max)
    }

    pub(crate) fn named_fields(&self) -> [(&'static str, &[Vec3]); 4] {
        [
            ("kappa", &self.kappa),
            ("nu", &self.nu),
            ("omega", &self.omega),
            ("upsilon", &self.upsilon),
        ]
    }

    /// Clamped end: no angular or linear velocity at `s = 0`.
    pub fn apply_boundary(&mut self) {
        if self.boundary == BoundaryMode::ClampedFree {
            self.omega[0] = Vec3::ZERO;
            self.upsilon[0] = Vec3::ZERO;
        }
    }

    pub fn write_csv_header<W: std::io::Write>(out: &mut W) -> std::io::Result<()> {
        writeln!(out, "t,s,kappa1,kappa2,kappa3,nu1,nu2,nu3,omega1,omega2,omega3,upsilon1,upsilon2,upsilon3")
    }

    pub fn write_csv_rows<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        for i in 0..self.nodes() {
            let mut row = vec![self.time, self.s_at(i)];
            for (_, values) in self.named_fields() {
                row.extend_from_slice(&values[i].to_array());
            }
            crate::output::write_csv_row(out, &row)?;
        }
        Ok(())
    }
}

fn validate_grid(length: f64, nodes: usize) -> Result<(), RodError> {
    if nodes < MIN_NODES {
        return Err(RodError::InvalidGrid(format!("need at least {MIN_NODES} nodes, got {nodes}")));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(RodError::InvalidGrid(format!("rod length must be positive, got {length}")));
    }
    Ok(())
}

/// Second-order first derivative on a uniform grid: central differences inside,
/// periodic wrap or one-sided three-point stencils at the ends.
pub fn spatial_derivative(values: &[Vec3], h: f64, periodic: bool) -> Vec<Vec3> {
    let n = values.len();
    debug_assert!(n >= 3);
    let inv = 0.5 / h;
    (0..n)
        .map(|i| {
            if i > 0 && i + 1 < n {
                (values[i + 1] - values[i - 1]) * inv
            } else if periodic {
                let next = values[(i + 1) % n];
                let prev = values[(i + n - 1) % n];
                (next - prev) * inv
            } else if i == 0 {
                (values[1] * 4.0 - values[0] * 3.0 - values[2]) * inv
            } else {
                (values[n - 1] * 3.0 - values[n - 2] * 4.0 + values[n - 3]) * inv
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_exact_on_quadratics() {
        let h = 0.1;
        let values: Vec<Vec3> = (0..7)
            .map(|i| {
                let s = i as f64 * h;
                Vec3::new(s * s, 3.0 * s - 1.0, 2.0)
            })
            .collect();
        for (i, d) in spatial_derivative(&values, h, false).iter().enumerate() {
            let s = i as f64 * h;
            assert!((*d - Vec3::new(2.0 * s, 3.0, 0.0)).norm_inf() < 1e-12, "node {i}: {d}");
        }
    }

    #[test]
    fn periodic_derivative_of_sine() {
        let n = 200;
        let h = std::f64::consts::TAU / n as f64;
        let values: Vec<Vec3> = (0..n).map(|i| Vec3::new((i as f64 * h).sin(), 0.0, 0.0)).collect();
        let d = spatial_derivative(&values, h, true);
        let err = (0..n).map(|i| (d[i].x - (i as f64 * h).cos()).abs()).fold(0.0, f64::max);
        assert!(err < h * h / 6.0 * 1.01);
    }

    #[test]
    fn spacing_per_mode() {
        assert_eq!(BoundaryMode::Periodic.spacing(1.0, 10), 0.1);
        assert_eq!(BoundaryMode::ClampedFree.spacing(1.0, 11), 0.1);
    }

    #[test]
    fn rejects_small_or_nonfinite_state() {
        let mp = MaterialParams::unit();
        assert!(matches!(
            RodState::equilibrium(1.0, 4, BoundaryMode::Periodic, &mp),
            Err(RodError::InvalidGrid(_))
        ));
        let mut nu = vec![Vec3::new(0.0, 0.0, 1.0); 6];
        nu[3].y = f64::NAN;
        let zeros = vec![Vec3::ZERO; 6];
        assert_eq!(
            RodState::from_fields(1.0, BoundaryMode::Periodic, zeros.clone(), nu, zeros.clone(), zeros),
            Err(RodError::NonFinite { field: "nu", node: 3 })
        );
    }

    #[test]
    fn initial_conditions_from_expressions() {
        let kappa = VecExpr::parse(["0", "0", "s"]).unwrap();
        let nu = VecExpr::parse(["0", "0", "1"]).unwrap();
        let zero = VecExpr::zero();
        let state = RodState::from_exprs(2.0, 5, BoundaryMode::ClampedFree, [&kappa, &nu, &zero, &zero]).unwrap();
        assert_eq!(state.kappa[4], Vec3::new(0.0, 0.0, 2.0));
        let moving = VecExpr::parse(["t", "0", "0"]).unwrap();
        assert_eq!(
            RodState::from_exprs(2.0, 5, BoundaryMode::Periodic, [&kappa, &nu, &moving, &zero]),
            Err(RodError::InitialDependsOnT { field: "omega" })
        );
    }
}

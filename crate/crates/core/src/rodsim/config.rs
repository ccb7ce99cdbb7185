use serde::{Deserialize, Serialize};

use super::frame::FrameMode;
use super::material::{monotonicity_check, MaterialParams, MonotonicityReport};
use super::rhs::{cfl_limit, check_cfl, step_rk4, CflPolicy, StepOptions};
use super::{BoundaryMode, RodError, RodState};
use crate::exprfield::VecExpr;
use crate::linalg3::{Mat3, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Fixed step; derived from `cfl` when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub cfl_policy: CflPolicy,
    pub t_end: f64,
}

fn default_cfl() -> f64 {
    0.5
}

/// Component expressions in `s`; absent fields start at `(κ°, ν°, 0, 0)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConditions {
    #[serde(default)]
    pub kappa: Option<[String; 3]>,
    #[serde(default)]
    pub nu: Option<[String; 3]>,
    #[serde(default)]
    pub omega: Option<[String; 3]>,
    #[serde(default)]
    pub upsilon: Option<[String; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub material: MaterialParams,
    pub grid: GridConfig,
    pub boundary: BoundaryMode,
    pub time: TimeConfig,
    #[serde(default)]
    pub initial: InitialConditions,
    /// Uniform gravity in the fixed frame; `null` disables external force.
    #[serde(default)]
    pub gravity: Option<Vec3>,
    #[serde(default)]
    pub frame_mode: FrameMode,
    /// Emit a snapshot every this many steps (the first and last are always emitted).
    #[serde(default = "default_output_every")]
    pub output_every: usize,
}

fn default_output_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub steps: usize,
    pub dt: f64,
    pub cfl_limit: f64,
    pub cfl_violated: bool,
    pub final_time: f64,
    pub stiffness_ratio: f64,
    pub max_wave_speed: f64,
    pub monotonicity: MonotonicityReport,
    pub final_max_norm: f64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), RodError> {
        self.material.validate()?;
        if !(self.time.t_end > 0.0 && self.time.t_end.is_finite()) {
            return Err(RodError::Config(format!("t_end must be positive, got {}", self.time.t_end)));
        }
        if !(self.time.cfl > 0.0 && self.time.cfl.is_finite()) {
            return Err(RodError::Config(format!("cfl must be positive, got {}", self.time.cfl)));
        }
        if let Some(dt) = self.time.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(RodError::Config(format!("dt must be positive, got {dt}")));
            }
        }
        if self.output_every == 0 {
            return Err(RodError::Config("output_every must be at least 1".into()));
        }
        if let Some(g) = self.gravity {
            if !g.is_finite() {
                return Err(RodError::Config("gravity must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Result<RodState, RodError> {
        let mp = &self.material;
        let field = |text: &Option<[String; 3]>, default: Vec3| -> Result<VecExpr, RodError> {
            match text {
                Some([a, b, c]) => Ok(VecExpr::parse([a.as_str(), b.as_str(), c.as_str()])?),
                None => Ok(VecExpr::constant(default)),
            }
        };
        let kappa = field(&self.initial.kappa, mp.kappa0)?;
        let nu = field(&self.initial.nu, mp.nu0)?;
        let omega = field(&self.initial.omega, Vec3::ZERO)?;
        let upsilon = field(&self.initial.upsilon, Vec3::ZERO)?;
        RodState::from_exprs(
            self.grid.length,
            self.grid.nodes,
            self.boundary,
            [&kappa, &nu, &omega, &upsilon],
        )
    }

    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            cfl: self.time.cfl,
            cfl_policy: self.time.cfl_policy,
            gravity: self.gravity,
            base_triad: Mat3::IDENTITY,
        }
    }
}

/// Runs the configured simulation, calling `emit` on the initial state, every
/// `output_every` steps, and on the final state.
pub fn run_simulation<F>(config: &SimulationConfig, mut emit: F) -> Result<SimulationSummary, RodError>
where
    F: FnMut(&RodState) -> Result<(), RodError>,
{
    config.validate()?;
    let mp = &config.material;
    let opts = config.step_options();
    let mut state = config.initial_state()?;
    let limit = cfl_limit(&state, mp, opts.cfl);
    let target = config.time.dt.unwrap_or(limit);
    let steps = (config.time.t_end / target - 1e-9).ceil().max(1.0) as usize;
    let dt = config.time.t_end / steps as f64;
    let violation = check_cfl(&state, mp, dt, &opts)?;
    if let Some(v) = violation {
        log::warn!("time step {:e} exceeds the CFL limit {:e}", v.dt, v.limit);
    }
    // silence the per-step warning; it was reported once above
    let step_opts = StepOptions {
        cfl_policy: CflPolicy::Warn,
        cfl: if violation.is_some() { f64::INFINITY } else { opts.cfl },
        ..opts
    };

    emit(&state)?;
    for k in 1..=steps {
        state = step_rk4(&state, mp, dt, &step_opts)?;
        state.time = k as f64 * dt;
        if k % config.output_every == 0 || k == steps {
            emit(&state)?;
        }
    }
    Ok(SimulationSummary {
        steps,
        dt,
        cfl_limit: limit,
        cfl_violated: violation.is_some(),
        final_time: state.time,
        stiffness_ratio: mp.stiffness_ratio(config.grid.length),
        max_wave_speed: mp.max_wave_speed(),
        monotonicity: monotonicity_check(mp),
        final_max_norm: state.max_norm(),
    })
}

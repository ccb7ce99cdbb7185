use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frame::{reconstruct_frame, FrameMode};
use super::material::{constitutive_m, constitutive_n, MaterialParams};
use super::{spatial_derivative, BoundaryMode, RodError, RodState};
use crate::linalg3::{Mat3, Vec3};

const PAR_MIN_LEN: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CflPolicy {
    #[default]
    Warn,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub cfl: f64,
    pub cfl_policy: CflPolicy,
    /// Uniform gravitational acceleration in the fixed frame.
    pub gravity: Option<Vec3>,
    /// Triad `(d1 d2 d3)` at `s = 0`, used to rotate gravity into the local basis.
    pub base_triad: Mat3,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            cfl: 0.5,
            cfl_policy: CflPolicy::Warn,
            gravity: None,
            base_triad: Mat3::IDENTITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CflViolation {
    pub dt: f64,
    pub limit: f64,
}

/// Per-node time derivatives of the four fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub kappa: Vec<Vec3>,
    pub nu: Vec<Vec3>,
    pub omega: Vec<Vec3>,
    pub upsilon: Vec<Vec3>,
}

impl Derivatives {
    pub fn max_norm(&self) -> f64 {
        [&self.kappa, &self.nu, &self.omega, &self.upsilon]
            .iter()
            .flat_map(|v| v.iter())
            .map(Vec3::norm_inf)
            .fold(0.0, f64::max)
    }
}

/// Semi-discrete right-hand side of the rod system.
pub fn rhs_full(state: &RodState, mp: &MaterialParams, opts: &StepOptions) -> Result<Derivatives, RodError> {
    state.check_finite()?;
    let n_nodes = state.nodes();
    let h = state.ds();
    let periodic = state.boundary.is_periodic();

    let mut n: Vec<Vec3> = state.nu.par_iter().with_min_len(PAR_MIN_LEN).map(|nu| constitutive_n(*nu, mp)).collect();
    let mut m: Vec<Vec3> = state
        .kappa
        .par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|k| constitutive_m(*k, mp))
        .collect();
    if state.boundary == BoundaryMode::ClampedFree {
        n[n_nodes - 1] = Vec3::ZERO;
        m[n_nodes - 1] = Vec3::ZERO;
    }

    let d_omega = spatial_derivative(&state.omega, h, periodic);
    let d_upsilon = spatial_derivative(&state.upsilon, h, periodic);
    let d_n = spatial_derivative(&n, h, periodic);
    let d_m = spatial_derivative(&m, h, periodic);

    let force: Option<Vec<Vec3>> = match opts.gravity {
        Some(g) => {
            let frame = reconstruct_frame(state, opts.base_triad, Vec3::ZERO, FrameMode::Cosserat)?;
            let weight = g * mp.rho_a();
            Some(frame.triads.iter().map(|r| r.transpose() * weight).collect())
        }
        None => None,
    };

    let rho_a = mp.rho_a();
    let rho_j = mp.rho_j();
    let clamped = state.boundary == BoundaryMode::ClampedFree;
    let per_node: Vec<[Vec3; 4]> = (0..n_nodes)
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|i| {
            let kappa = state.kappa[i];
            let nu = state.nu[i];
            let omega = state.omega[i];
            let upsilon = state.upsilon[i];
            let dk = d_omega[i] + omega.cross(&kappa);
            let dnu = d_upsilon[i] + kappa.cross(&upsilon) - omega.cross(&nu);
            if clamped && i == 0 {
                return [dk, dnu, Vec3::ZERO, Vec3::ZERO];
            }
            let spin = omega.component_mul(&rho_j);
            let torque = d_m[i] + kappa.cross(&m[i]) + nu.cross(&n[i]) - omega.cross(&spin);
            let domega = Vec3::new(torque.x / rho_j.x, torque.y / rho_j.y, torque.z / rho_j.z);
            let mut load = d_n[i] + kappa.cross(&n[i]) - omega.cross(&(upsilon * rho_a));
            if let Some(f) = &force {
                load += f[i];
            }
            [dk, dnu, domega, load * (1.0 / rho_a)]
        })
        .collect();

    let mut out = Derivatives {
        kappa: Vec::with_capacity(n_nodes),
        nu: Vec::with_capacity(n_nodes),
        omega: Vec::with_capacity(n_nodes),
        upsilon: Vec::with_capacity(n_nodes),
    };
    for [dk, dnu, dw, du] in per_node {
        out.kappa.push(dk);
        out.nu.push(dnu);
        out.omega.push(dw);
        out.upsilon.push(du);
    }
    Ok(out)
}

/// `CFL * Δs / c_max`.
pub fn cfl_limit(state: &RodState, mp: &MaterialParams, cfl: f64) -> f64 {
    cfl * state.ds() / mp.max_wave_speed()
}

/// Returns the violation (if any) under the `Warn` policy, an error under `Error`.
pub fn check_cfl(
    state: &RodState,
    mp: &MaterialParams,
    dt: f64,
    opts: &StepOptions,
) -> Result<Option<CflViolation>, RodError> {
    let limit = cfl_limit(state, mp, opts.cfl);
    if dt <= limit {
        return Ok(None);
    }
    match opts.cfl_policy {
        CflPolicy::Warn => Ok(Some(CflViolation { dt, limit })),
        CflPolicy::Error => Err(RodError::Cfl { dt, limit }),
    }
}

fn axpy(state: &RodState, k: &Derivatives, a: f64) -> RodState {
    let add = |x: &[Vec3], d: &[Vec3]| x.iter().zip(d).map(|(x, d)| *x + *d * a).collect();
    let mut next = RodState {
        length: state.length,
        boundary: state.boundary,
        time: state.time + a,
        kappa: add(&state.kappa, &k.kappa),
        nu: add(&state.nu, &k.nu),
        omega: add(&state.omega, &k.omega),
        upsilon: add(&state.upsilon, &k.upsilon),
    };
    next.apply_boundary();
    next
}

/// One classical RK4 step.
pub fn step_rk4(state: &RodState, mp: &MaterialParams, dt: f64, opts: &StepOptions) -> Result<RodState, RodError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(RodError::Config(format!("time step must be positive, got {dt}")));
    }
    if let Some(v) = check_cfl(state, mp, dt, opts)? {
        log::warn!("time step {:e} exceeds the CFL limit {:e}", v.dt, v.limit);
    }
    let k1 = rhs_full(state, mp, opts)?;
    let k2 = rhs_full(&axpy(state, &k1, 0.5 * dt), mp, opts)?;
    let k3 = rhs_full(&axpy(state, &k2, 0.5 * dt), mp, opts)?;
    let k4 = rhs_full(&axpy(state, &k3, dt), mp, opts)?;
    let w = dt / 6.0;
    let combine = |x: &[Vec3], a: &[Vec3], b: &[Vec3], c: &[Vec3], d: &[Vec3]| -> Vec<Vec3> {
        (0..x.len())
            .map(|i| x[i] + (a[i] + (b[i] + c[i]) * 2.0 + d[i]) * w)
            .collect()
    };
    let mut next = RodState {
        length: state.length,
        boundary: state.boundary,
        time: state.time + dt,
        kappa: combine(&state.kappa, &k1.kappa, &k2.kappa, &k3.kappa, &k4.kappa),
        nu: combine(&state.nu, &k1.nu, &k2.nu, &k3.nu, &k4.nu),
        omega: combine(&state.omega, &k1.omega, &k2.omega, &k3.omega, &k4.omega),
        upsilon: combine(&state.upsilon, &k1.upsilon, &k2.upsilon, &k3.upsilon, &k4.upsilon),
    };
    next.apply_boundary();
    next.check_finite()?;
    Ok(next)
}

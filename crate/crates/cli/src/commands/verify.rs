use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use cosserat_core::verify::{residual_subsystem, DerivativeMode, GridSpec, PointResidual, ResidualReport, Tolerances};

use super::Globals;
use crate::family::{FamilyArgs, FamilySpec};
use crate::manifest::RunRecorder;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Evaluation grid `s0,s1,ns,t0,t1,nt`.
    #[arg(long, default_value = "0,1,101,0,1,101")]
    pub grid: GridSpec,
    /// Use central differences of this step instead of exact derivatives.
    #[arg(long, value_name = "H")]
    pub fd: Option<f64>,
    /// Include per-point residuals in report.json.
    #[arg(long)]
    pub points: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub family: FamilySpec,
    pub grid: GridSpec,
    pub mode: DerivativeMode,
    pub tol: f64,
    pub include_points: bool,
}

impl VerifyArgs {
    pub fn resolve(&self, globals: &Globals, inputs: &mut Vec<PathBuf>) -> Result<VerifyConfig> {
        let resolved = self.family.resolve(globals.seed)?;
        inputs.extend(resolved.input);
        let mode = match self.fd {
            Some(h) => DerivativeMode::FiniteDifference { h },
            None => DerivativeMode::Exact,
        };
        let defaults = Tolerances::default();
        let base_tol = if resolved.spec.transforms.is_empty() {
            defaults.direct
        } else {
            defaults.composed
        };
        Ok(VerifyConfig {
            family: resolved.spec,
            grid: self.grid,
            mode,
            tol: globals.tol.unwrap_or(base_tol),
            include_points: self.points,
        })
    }
}

/// Residual over `grid` of a family sampled at shifted coordinates, reported at
/// the unshifted grid points.
pub fn shifted_report(spec: &FamilySpec, grid: &GridSpec, mode: DerivativeMode) -> Result<ResidualReport> {
    let family = spec.build()?;
    let mut report = residual_subsystem(&family, &spec.sample_grid(grid)?, mode)?;
    if spec.is_shifted() {
        report.grid = *grid;
        let [ds, dt] = spec.shift;
        for PointResidual { s, t, .. } in &mut report.points {
            *s -= ds;
            *t -= dt;
        }
    }
    Ok(report)
}

pub fn execute(config: &VerifyConfig, rec: &mut RunRecorder) -> Result<()> {
    let report = shifted_report(&config.family, &config.grid, config.mode)?;
    let mut csv = rec.create("residual.csv")?;
    report.write_csv(&mut csv)?;
    drop(csv);
    let pass = report.passes(config.tol);
    let mut summary = report.to_json(config.include_points);
    summary["tol"] = json!(config.tol);
    summary["pass"] = json!(pass);
    rec.write_json("report.json", &summary)?;
    println!("max |F| = {:e} (tol {:e}): {}", report.max_norm, config.tol, if pass { "PASS" } else { "FAIL" });
    if !pass {
        bail!("residual {:e} exceeds tolerance {:e}", report.max_norm, config.tol);
    }
    Ok(())
}

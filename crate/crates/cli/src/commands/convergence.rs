use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use cosserat_core::output::write_csv_row;
use cosserat_core::rodsim::kappa_convergence;

use super::Globals;
use crate::family::FamilySpec;
use crate::manifest::{RunManifest, RunRecorder};

/// A family that is 2π-periodic in s, suitable for the periodic study.
fn default_family() -> FamilySpec {
    FamilySpec {
        p: [
            "0.4*sin(s) + 0.2*t".into(),
            "0.3*cos(s)*t".into(),
            "0.2*sin(s)*cos(t)".into(),
        ],
        f: ["cos(t)".into(), "0.5*t".into(), "1".into()],
        transforms: Vec::new(),
        shift: [0.0, 0.0],
    }
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    /// Node counts, coarse to fine.
    #[arg(long, value_delimiter = ',', default_value = "41,81,161")]
    pub nodes: Vec<usize>,
    /// Length of the s-interval; the default family is periodic over 2π.
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    pub length: f64,
    /// One-sided stencils at the ends instead of a periodic grid.
    #[arg(long)]
    pub open: bool,
    #[arg(long, default_value_t = 0.5)]
    pub t_end: f64,
    /// RK4 steps in time, shared by all grids.
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    /// Use the solution family recorded in an earlier run's manifest.
    #[arg(long)]
    pub from: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub family: FamilySpec,
    pub length: f64,
    pub periodic: bool,
    pub nodes: Vec<usize>,
    pub t_end: f64,
    pub steps: usize,
}

impl ConvergenceArgs {
    pub fn resolve(&self, _globals: &Globals, inputs: &mut Vec<PathBuf>) -> Result<ConvergenceConfig> {
        let family = match &self.from {
            Some(path) => {
                let spec = RunManifest::load(path)?
                    .config
                    .family()
                    .ok_or_else(|| anyhow!("manifest {} does not describe a solution family", path.display()))?;
                inputs.push(path.clone());
                spec
            }
            None => default_family(),
        };
        if self.nodes.len() < 2 {
            bail!("need at least two grids");
        }
        if !(self.length > 0.0 && self.t_end > 0.0) || self.steps == 0 {
            bail!("length, t_end and steps must be positive");
        }
        Ok(ConvergenceConfig {
            family,
            length: self.length,
            periodic: !self.open,
            nodes: self.nodes.clone(),
            t_end: self.t_end,
            steps: self.steps,
        })
    }
}

pub fn execute(config: &ConvergenceConfig, rec: &mut RunRecorder) -> Result<()> {
    if config.family.is_shifted() {
        bail!("shifted families are not supported by the convergence study");
    }
    let family = config.family.build()?;
    let study = kappa_convergence(
        &family,
        config.length,
        &config.nodes,
        config.periodic,
        config.t_end,
        config.steps,
    )?;
    let mut csv = rec.create("convergence.csv")?;
    writeln!(csv, "nodes,h,error,order")?;
    for (k, n) in study.nodes.iter().enumerate() {
        let order = if k == 0 { f64::NAN } else { study.orders[k - 1] };
        write_csv_row(&mut csv, &[*n as f64, study.spacing[k], study.errors[k], order])?;
    }
    csv.flush()?;
    drop(csv);
    rec.write_json("convergence.json", &study)?;
    for (k, order) in study.orders.iter().enumerate() {
        println!("N = {} -> {}: observed order {order:.4}", study.nodes[k], study.nodes[k + 1]);
    }
    Ok(())
}

use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use cosserat_core::output::write_csv_row;
use cosserat_core::symmetry::SolutionFamily;
use cosserat_core::verify::GridSpec;

use super::Globals;
use crate::family::{FamilyArgs, FamilySpec};
use crate::manifest::RunRecorder;

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Sampling grid `s0,s1,ns,t0,t1,nt` (endpoints inclusive).
    #[arg(long, default_value = "0,1,11,0,1,11")]
    pub grid: GridSpec,
    /// Append the residual columns F1, F2, F3.
    #[arg(long)]
    pub emit_residual: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub family: FamilySpec,
    pub grid: GridSpec,
    pub emit_residual: bool,
}

impl GenArgs {
    pub fn resolve(&self, globals: &Globals, inputs: &mut Vec<PathBuf>) -> Result<GenConfig> {
        let resolved = self.family.resolve(globals.seed)?;
        inputs.extend(resolved.input);
        Ok(GenConfig {
            family: resolved.spec,
            grid: self.grid,
            emit_residual: self.emit_residual,
        })
    }
}

/// Writes `s,t,omega1..3,kappa1..3[,F1..3]` rows for every grid point, with the
/// family sampled at the shifted coordinates.
pub fn write_solution_csv<W: Write>(
    out: &mut W,
    family: &SolutionFamily,
    spec: &FamilySpec,
    grid: &GridSpec,
    emit_residual: bool,
) -> Result<()> {
    let [ds, dt] = spec.shift;
    let rows = grid
        .points()
        .into_par_iter()
        .map(|(s, t)| {
            let sample = family.eval(s + ds, t + dt)?;
            let mut row = vec![s, t];
            row.extend_from_slice(&sample.omega.to_array());
            row.extend_from_slice(&sample.kappa.to_array());
            if emit_residual {
                row.extend_from_slice(&sample.residual().to_array());
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = String::from("s,t,omega1,omega2,omega3,kappa1,kappa2,kappa3");
    if emit_residual {
        header.push_str(",F1,F2,F3");
    }
    writeln!(out, "{header}")?;
    for row in rows {
        write_csv_row(out, &row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn execute(config: &GenConfig, rec: &mut RunRecorder) -> Result<()> {
    config.grid.validate()?;
    let family = config.family.build()?;
    let mut out = rec.create("solution.csv")?;
    write_solution_csv(&mut out, &family, &config.family, &config.grid, config.emit_residual)
}

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use cosserat_core::linalg3::{Mat3, Vec3};
use cosserat_core::rodsim::{reconstruct_frame, run_simulation, RodError, RodState, SimulationConfig};

use super::Globals;
use crate::manifest::RunRecorder;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub simulation: SimulationConfig,
}

impl SimulateArgs {
    pub fn resolve(&self, _globals: &Globals, inputs: &mut Vec<PathBuf>) -> Result<SimulateConfig> {
        let text = fs::read_to_string(&self.config).with_context(|| format!("reading {}", self.config.display()))?;
        let simulation: SimulationConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", self.config.display()))?;
        simulation.validate()?;
        inputs.push(self.config.clone());
        Ok(SimulateConfig { simulation })
    }
}

pub fn execute(config: &SimulateConfig, rec: &mut RunRecorder) -> Result<()> {
    let sim = &config.simulation;
    let mut fields = rec.create("fields.csv")?;
    RodState::write_csv_header(&mut fields)?;
    let mut last: Option<RodState> = None;
    let outcome = run_simulation(sim, |state| {
        state
            .write_csv_rows(&mut fields)
            .map_err(|e| RodError::Output(e.to_string()))?;
        last = Some(state.clone());
        Ok(())
    });
    fields.flush()?;
    drop(fields);
    let summary = outcome?;

    let state = last.expect("the initial state is always emitted");
    let frame = reconstruct_frame(&state, Mat3::IDENTITY, Vec3::ZERO, sim.frame_mode)?;
    let mut frame_csv = rec.create("frame.csv")?;
    frame.write_csv(&mut frame_csv)?;
    frame_csv.flush()?;
    drop(frame_csv);

    let report = json!({
        "summary": summary,
        "frame_orthonormality_defect": frame.orthonormality_defect(),
    });
    rec.write_json("summary.json", &report)?;
    println!(
        "{} steps of {:e} to t = {}; stiffness ratio {:.3e}",
        summary.steps, summary.dt, summary.final_time, summary.stiffness_ratio
    );
    if summary.cfl_violated {
        eprintln!("warning: time step {:e} exceeds the CFL limit {:e}", summary.dt, summary.cfl_limit);
    }
    Ok(())
}

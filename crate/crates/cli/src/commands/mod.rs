mod convergence;
mod gen;
mod reconstruct;
mod simulate;
mod transform;
mod verify;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Subcommand;
use serde::{Deserialize, Serialize};

use crate::family::FamilySpec;
use crate::manifest::{sha256_file, RunManifest, RunRecorder};

pub use convergence::{ConvergenceArgs, ConvergenceConfig};
pub use gen::{GenArgs, GenConfig};
pub use reconstruct::{ReconstructArgs, ReconstructConfig};
pub use simulate::{SimulateArgs, SimulateConfig};
pub use transform::{TransformArgs, TransformConfig};
pub use verify::{VerifyArgs, VerifyConfig};

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Globals {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an exact solution of the compatibility equation on a grid.
    Gen(GenArgs),
    /// Residual of the compatibility equation for a solution family.
    Verify(VerifyArgs),
    /// Apply a group action to a solution family and check closure.
    Transform(TransformArgs),
    /// Recover the generator p and initial twist f from κ and ω.
    Reconstruct(ReconstructArgs),
    /// Run the rod simulator from a JSON configuration.
    Simulate(SimulateArgs),
    /// Spatial convergence study of the κ-equation with a manufactured solution.
    Convergence(ConvergenceArgs),
    /// Re-run the configuration recorded in a manifest.
    Replay {
        /// Manifest written by an earlier run.
        manifest: PathBuf,
    },
}

/// Fully resolved configuration of a run, as stored in its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum RunConfig {
    Gen(GenConfig),
    Verify(VerifyConfig),
    Transform(TransformConfig),
    Reconstruct(ReconstructConfig),
    Simulate(SimulateConfig),
    Convergence(ConvergenceConfig),
}

impl RunConfig {
    /// The solution family this run produced or examined, in a form later runs
    /// can pick up with `--from`.
    pub fn family(&self) -> Option<FamilySpec> {
        match self {
            RunConfig::Gen(c) => Some(c.family.clone()),
            RunConfig::Verify(c) => Some(c.family.clone()),
            RunConfig::Transform(c) => Some(c.result_family()),
            RunConfig::Convergence(c) => Some(c.family.clone()),
            RunConfig::Reconstruct(_) | RunConfig::Simulate(_) => None,
        }
    }

    fn execute(&self, rec: &mut RunRecorder) -> Result<()> {
        match self {
            RunConfig::Gen(c) => gen::execute(c, rec),
            RunConfig::Verify(c) => verify::execute(c, rec),
            RunConfig::Transform(c) => transform::execute(c, rec),
            RunConfig::Reconstruct(c) => reconstruct::execute(c, rec),
            RunConfig::Simulate(c) => simulate::execute(c, rec),
            RunConfig::Convergence(c) => convergence::execute(c, rec),
        }
    }
}

pub fn run(command: Command, globals: &Globals) -> Result<()> {
    let mut inputs = Vec::new();
    let config = match command {
        Command::Gen(args) => RunConfig::Gen(args.resolve(globals, &mut inputs)?),
        Command::Verify(args) => RunConfig::Verify(args.resolve(globals, &mut inputs)?),
        Command::Transform(args) => RunConfig::Transform(args.resolve(globals, &mut inputs)?),
        Command::Reconstruct(args) => RunConfig::Reconstruct(args.resolve(globals, &mut inputs)?),
        Command::Simulate(args) => RunConfig::Simulate(args.resolve(globals, &mut inputs)?),
        Command::Convergence(args) => RunConfig::Convergence(args.resolve(globals, &mut inputs)?),
        Command::Replay { manifest } => {
            let recorded = RunManifest::load(&manifest)?;
            return execute(recorded.config, recorded.seed, &globals.out_dir, &[manifest]);
        }
    };
    execute(config, globals.seed, &globals.out_dir, &inputs)
}

fn execute(config: RunConfig, seed: u64, out_dir: &Path, inputs: &[PathBuf]) -> Result<()> {
    let mut digests = BTreeMap::new();
    for path in inputs {
        digests.insert(path.display().to_string(), sha256_file(path)?);
    }
    let mut rec = RunRecorder::begin(out_dir, seed, config.clone(), digests)?;
    let outcome = config.execute(&mut rec);
    rec.finish(&outcome)?;
    outcome
}

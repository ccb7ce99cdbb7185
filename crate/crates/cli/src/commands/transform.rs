use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use cosserat_core::verify::{DerivativeMode, ExpressionSampler, GridSpec, Tolerances};

use super::gen::write_solution_csv;
use super::verify::shifted_report;
use super::Globals;
use crate::family::{parse_vec, FamilyArgs, FamilySpec};
use crate::manifest::RunRecorder;

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// First component of the group parameter p'(s, t).
    #[arg(long, allow_hyphen_values = true, required_unless_present = "random_prime")]
    pub pa: Option<String>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "random_prime")]
    pub pb: Option<String>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "random_prime")]
    pub pc: Option<String>,
    /// Draw p' from the seeded random expression family.
    #[arg(long, conflicts_with_all = ["pa", "pb", "pc"])]
    pub random_prime: bool,
    /// Index of the random draw used for p'.
    #[arg(long, default_value_t = 0)]
    pub prime_draw: usize,
    /// Sampling grid `s0,s1,ns,t0,t1,nt`.
    #[arg(long, default_value = "0,1,11,0,1,11")]
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformConfig {
    pub base: FamilySpec,
    pub p_prime: [String; 3],
    pub grid: GridSpec,
    pub tol: f64,
}

impl TransformConfig {
    pub fn result_family(&self) -> FamilySpec {
        let mut spec = self.base.clone();
        spec.transforms.push(self.p_prime.clone());
        spec
    }
}

impl TransformArgs {
    pub fn resolve(&self, globals: &Globals, inputs: &mut Vec<PathBuf>) -> Result<TransformConfig> {
        let resolved = self.family.resolve(globals.seed)?;
        inputs.extend(resolved.input);
        let p_prime = if self.random_prime {
            let mut sampler = ExpressionSampler::new(globals.seed);
            let mut draw = sampler.draw();
            for _ in 0..self.prime_draw {
                draw = sampler.draw();
            }
            draw.p_prime_text
        } else {
            let get = |v: &Option<String>| v.clone().expect("clap enforces presence");
            [get(&self.pa), get(&self.pb), get(&self.pc)]
        };
        parse_vec(&p_prime)?;
        Ok(TransformConfig {
            base: resolved.spec,
            p_prime,
            grid: self.grid,
            tol: globals.tol.unwrap_or(Tolerances::default().composed),
        })
    }
}

pub fn execute(config: &TransformConfig, rec: &mut RunRecorder) -> Result<()> {
    config.grid.validate()?;
    let spec = config.result_family();
    let family = spec.build()?;
    let mut out = rec.create("solution.csv")?;
    write_solution_csv(&mut out, &family, &spec, &config.grid, true)?;
    drop(out);

    let report = shifted_report(&spec, &config.grid, DerivativeMode::Exact)?;
    let pass = report.passes(config.tol);
    let mut summary = report.to_json(false);
    summary["tol"] = json!(config.tol);
    summary["pass"] = json!(pass);
    rec.write_json("closure.json", &summary)?;
    println!("closure residual {:e} (tol {:e}): {}", report.max_norm, config.tol, if pass { "PASS" } else { "FAIL" });
    if !pass {
        bail!("transformed residual {:e} exceeds tolerance {:e}", report.max_norm, config.tol);
    }
    Ok(())
}

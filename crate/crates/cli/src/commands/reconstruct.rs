use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use cosserat_core::exprfield::{Var, VecExpr};
use cosserat_core::reconstruct::{reconstruct, ReconstructError, ReconstructionResult};
use cosserat_core::verify::GridSpec;
use cosserat_core::Vec3;

use super::Globals;
use crate::family::{parse_vec, FamilySpec};
use crate::manifest::{RunManifest, RunRecorder};

const FIELD_FLAGS: [&str; 6] = ["k1", "k2", "k3", "w1", "w2", "w3"];

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Take κ and ω from the solution family of an earlier run (round trip).
    #[arg(long, conflicts_with_all = FIELD_FLAGS)]
    pub from: Option<PathBuf>,
    /// Components of κ(s, t).
    #[arg(long, allow_hyphen_values = true, required_unless_present = "from")]
    pub k1: Option<String>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "from")]
    pub k2: Option<String>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "from")]
    pub k3: Option<String>,
    /// Components of ω(s, t); only s = s0 is used.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "from")]
    pub w1: Option<String>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "from")]
    pub w2: Option<String>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "from")]
    pub w3: Option<String>,
    /// Initial values p(s0, t); defaults to the family's own p with --from.
    #[arg(long, allow_hyphen_values = true, requires_all = ["p0b", "p0c"])]
    pub p0a: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["p0a", "p0c"])]
    pub p0b: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["p0a", "p0b"])]
    pub p0c: Option<String>,
    /// Grid `s0,s1,ns,t0,t1,nt`; integration runs along s from s0.
    #[arg(long, default_value = "0,1,11,0,1,11")]
    pub grid: GridSpec,
    /// RK4 step in s.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSource {
    Family(FamilySpec),
    Expressions { kappa: [String; 3], omega: [String; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructConfig {
    pub source: FieldSource,
    pub p0: [String; 3],
    pub grid: GridSpec,
    pub ode_step: f64,
}

impl ReconstructArgs {
    pub fn resolve(&self, _globals: &Globals, inputs: &mut Vec<PathBuf>) -> Result<ReconstructConfig> {
        let explicit_p0 = match (&self.p0a, &self.p0b, &self.p0c) {
            (Some(a), Some(b), Some(c)) => Some([a.clone(), b.clone(), c.clone()]),
            _ => None,
        };
        let (source, p0) = if let Some(path) = &self.from {
            let spec = RunManifest::load(path)?
                .config
                .family()
                .ok_or_else(|| anyhow!("manifest {} does not describe a solution family", path.display()))?;
            inputs.push(path.clone());
            if spec.is_shifted() {
                bail!("reconstruction from a shifted family is not supported");
            }
            let p0 = match explicit_p0 {
                Some(p0) => p0,
                None if spec.transforms.is_empty() => {
                    let at_start = parse_vec(&spec.p)?.substitute(Var::S, self.grid.s0);
                    at_start.components().clone().map(|e| e.to_string())
                }
                None => bail!("--p0a/--p0b/--p0c are required for a transformed family"),
            };
            (FieldSource::Family(spec), p0)
        } else {
            let get = |v: &Option<String>| v.clone().expect("clap enforces presence");
            let source = FieldSource::Expressions {
                kappa: [get(&self.k1), get(&self.k2), get(&self.k3)],
                omega: [get(&self.w1), get(&self.w2), get(&self.w3)],
            };
            let p0 = explicit_p0.ok_or_else(|| anyhow!("--p0a, --p0b and --p0c are required without --from"))?;
            (source, p0)
        };
        let config = ReconstructConfig {
            source,
            p0,
            grid: self.grid,
            ode_step: self.step,
        };
        if let FieldSource::Expressions { kappa, omega } = &config.source {
            parse_vec(kappa)?;
            parse_vec(omega)?;
        }
        parse_vec(&config.p0)?;
        Ok(config)
    }
}

/// Ground truth when the fields come from an untransformed general solution.
struct Truth {
    p: VecExpr,
    f: VecExpr,
}

fn run(config: &ReconstructConfig) -> Result<(Result<ReconstructionResult, ReconstructError>, Option<Truth>)> {
    let p0 = parse_vec(&config.p0)?;
    match &config.source {
        FieldSource::Family(spec) => {
            let family = spec.build()?;
            let kappa = |s: f64, t: f64| family.eval(s, t).map(|f| f.kappa);
            let omega = |s: f64, t: f64| family.eval(s, t).map(|f| f.omega);
            let result = reconstruct(&kappa, &omega, &p0, &config.grid, config.ode_step);
            let truth = if spec.transforms.is_empty() {
                Some(Truth {
                    p: parse_vec(&spec.p)?,
                    f: parse_vec(&spec.f)?,
                })
            } else {
                None
            };
            Ok((result, truth))
        }
        FieldSource::Expressions { kappa, omega } => {
            let kappa_tape = parse_vec(kappa)?.compile();
            let omega_tape = parse_vec(omega)?.compile();
            let kappa = |s: f64, t: f64| kappa_tape.eval_vec3s(s, t).map(|v| v[0]);
            let omega = |s: f64, t: f64| omega_tape.eval_vec3s(s, t).map(|v| v[0]);
            Ok((reconstruct(&kappa, &omega, &p0, &config.grid, config.ode_step), None))
        }
    }
}

fn errors_against(result: &ReconstructionResult, truth: &Truth) -> Result<(f64, f64)> {
    let grid = &result.grid;
    let p_tape = truth.p.compile();
    let f_tape = truth.f.compile();
    let mut p_err = 0.0_f64;
    for i in 0..grid.ns {
        for j in 0..grid.nt {
            if let Some(p) = result.p_at(i, j) {
                let exact = p_tape.eval_vec3s(grid.s_at(i), grid.t_at(j))?[0];
                p_err = p_err.max((p - exact).norm_inf());
            }
        }
    }
    let mut f_err = 0.0_f64;
    for (j, f) in result.f.iter().enumerate() {
        let exact: Vec3 = f_tape.eval_vec3s(0.0, grid.t_at(j))?[0];
        f_err = f_err.max((*f - exact).norm_inf());
    }
    Ok((p_err, f_err))
}

fn write_outputs(rec: &mut RunRecorder, result: &ReconstructionResult, extra: serde_json::Value) -> Result<()> {
    let mut p_csv = rec.create("p.csv")?;
    result.write_p_csv(&mut p_csv)?;
    p_csv.flush()?;
    drop(p_csv);
    let mut f_csv = rec.create("f.csv")?;
    result.write_f_csv(&mut f_csv)?;
    f_csv.flush()?;
    drop(f_csv);
    let mut diagnostics = result.diagnostics_json();
    if let (Some(target), serde_json::Value::Object(more)) = (diagnostics.as_object_mut(), extra) {
        target.extend(more);
    }
    rec.write_json("diagnostics.json", &diagnostics)
}

pub fn execute(config: &ReconstructConfig, rec: &mut RunRecorder) -> Result<()> {
    let (result, truth) = run(config)?;
    match result {
        Ok(result) => {
            let mut extra = json!({});
            if let Some(truth) = &truth {
                let (p_err, f_err) = errors_against(&result, truth)?;
                extra = json!({ "p_error": p_err, "f_error": f_err });
                println!("p error {p_err:e}, f error {f_err:e}");
            }
            println!("min |det M| = {:e}", result.diagnostics.min_abs_det);
            write_outputs(rec, &result, extra)
        }
        Err(ReconstructError::Singular { s, t, det, partial }) => {
            let extra = json!({ "singular": { "s": s, "t": t, "det": det } });
            write_outputs(rec, &partial, extra)?;
            Err(ReconstructError::Singular { s, t, det, partial }.into())
        }
        Err(e) => Err(e.into()),
    }
}

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use cosserat_core::exprfield::VecExpr;
use cosserat_core::symmetry::{general_solution, SolutionFamily};
use cosserat_core::verify::{ExpressionSampler, GridSpec};

use crate::manifest::RunManifest;

/// Textual recipe for an exact solution: the general solution generated by
/// `(p, f)`, then each listed group action in order, then an optional shift
/// of the independent variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub p: [String; 3],
    pub f: [String; 3],
    #[serde(default)]
    pub transforms: Vec<[String; 3]>,
    /// `(σ, τ)`: fields are reported at `(s + σ, t + τ)`.
    #[serde(default)]
    pub shift: [f64; 2],
}

pub fn parse_vec(text: &[String; 3]) -> Result<VecExpr> {
    let mut parsed = Vec::with_capacity(3);
    for (i, component) in text.iter().enumerate() {
        let e = component
            .parse()
            .with_context(|| format!("component {} `{component}`", i + 1))?;
        parsed.push(e);
    }
    let z = parsed.pop().expect("three components");
    let y = parsed.pop().expect("three components");
    let x = parsed.pop().expect("three components");
    Ok(VecExpr::new(x, y, z))
}

impl FamilySpec {
    pub fn build(&self) -> Result<SolutionFamily> {
        let p = parse_vec(&self.p).context("parsing p")?;
        let f = parse_vec(&self.f).context("parsing f")?;
        let mut family = general_solution(&p, &f)?;
        for (k, text) in self.transforms.iter().enumerate() {
            let q = parse_vec(text).with_context(|| format!("parsing transform {}", k + 1))?;
            family = family.transform(&q);
        }
        Ok(family)
    }

    pub fn is_shifted(&self) -> bool {
        self.shift != [0.0, 0.0]
    }

    /// The grid on which the unshifted family is sampled.
    pub fn sample_grid(&self, grid: &GridSpec) -> Result<GridSpec> {
        let [ds, dt] = self.shift;
        Ok(GridSpec::new(
            grid.s0 + ds,
            grid.s1 + ds,
            grid.ns,
            grid.t0 + dt,
            grid.t1 + dt,
            grid.nt,
        )?)
    }
}

/// Flags selecting a solution family.
#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    /// First component of p(s, t).
    #[arg(long, allow_hyphen_values = true, required_unless_present_any = ["from", "random"])]
    pub a: Option<String>,
    /// Second component of p(s, t).
    #[arg(long, allow_hyphen_values = true, required_unless_present_any = ["from", "random"])]
    pub b: Option<String>,
    /// Third component of p(s, t).
    #[arg(long, allow_hyphen_values = true, required_unless_present_any = ["from", "random"])]
    pub c: Option<String>,
    /// First component of f(t).
    #[arg(long, allow_hyphen_values = true, required_unless_present_any = ["from", "random"])]
    pub f1: Option<String>,
    #[arg(long, allow_hyphen_values = true, required_unless_present_any = ["from", "random"])]
    pub f2: Option<String>,
    #[arg(long, allow_hyphen_values = true, required_unless_present_any = ["from", "random"])]
    pub f3: Option<String>,
    /// Reuse the family recorded in a previous run's manifest.
    #[arg(long, conflicts_with_all = ["a", "b", "c", "f1", "f2", "f3", "random"])]
    pub from: Option<PathBuf>,
    /// Draw (p, f) from the seeded random expression family.
    #[arg(long, conflicts_with_all = ["a", "b", "c", "f1", "f2", "f3"])]
    pub random: bool,
    /// Index of the random draw to use with --random.
    #[arg(long, default_value_t = 0, requires = "random")]
    pub draw: usize,
    /// Translation of s applied after everything else.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub shift_s: f64,
    /// Translation of t applied after everything else.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub shift_t: f64,
}

/// Resolved family plus the path it was read from, if any.
pub struct Resolved {
    pub spec: FamilySpec,
    pub input: Option<PathBuf>,
}

impl FamilyArgs {
    pub fn resolve(&self, seed: u64) -> Result<Resolved> {
        let (mut spec, input) = if let Some(path) = &self.from {
            let manifest = RunManifest::load(path)?;
            let spec = manifest
                .config
                .family()
                .ok_or_else(|| anyhow!("manifest {} does not describe a solution family", path.display()))?;
            (spec, Some(path.clone()))
        } else if self.random {
            let mut sampler = ExpressionSampler::new(seed);
            let mut draw = sampler.draw();
            for _ in 0..self.draw {
                draw = sampler.draw();
            }
            let spec = FamilySpec {
                p: draw.p_text,
                f: draw.f_text,
                transforms: Vec::new(),
                shift: [0.0, 0.0],
            };
            (spec, None)
        } else {
            let get = |v: &Option<String>| v.clone().expect("clap enforces presence");
            let spec = FamilySpec {
                p: [get(&self.a), get(&self.b), get(&self.c)],
                f: [get(&self.f1), get(&self.f2), get(&self.f3)],
                transforms: Vec::new(),
                shift: [0.0, 0.0],
            };
            (spec, None)
        };
        if self.shift_s != 0.0 || self.shift_t != 0.0 {
            if !(self.shift_s.is_finite() && self.shift_t.is_finite()) {
                bail!("shifts must be finite");
            }
            spec.shift = [spec.shift[0] + self.shift_s, spec.shift[1] + self.shift_t];
        }
        // fail early on bad expressions
        spec.build()?;
        Ok(Resolved { spec, input })
    }
}

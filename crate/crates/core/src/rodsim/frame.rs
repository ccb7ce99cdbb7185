use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{RodError, RodState};
use crate::linalg3::{rodrigues_exp, Mat3, Vec3};
use crate::output::write_csv_row;

const BASE_TRIAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameMode {
    /// Centerline from the state's shear/stretch strains.
    #[default]
    Cosserat,
    /// Centerline from the inextensible, unshearable strain `ν = (0, 0, 1)`.
    Kirchhoff,
}

/// Directors and centerline at every node. `triads[i]` has columns `d1, d2, d3`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameField {
    pub s: Vec<f64>,
    pub r: Vec<Vec3>,
    pub triads: Vec<Mat3>,
}

impl FrameField {
    pub fn director(&self, node: usize, k: usize) -> Vec3 {
        self.triads[node].column(k)
    }

    /// Worst `|d_i · d_j − δ_ij|` and `|d3 − d1 × d2|` over all nodes.
    pub fn orthonormality_defect(&self) -> f64 {
        self.triads.iter().map(triad_defect).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "s,r1,r2,r3,d1_1,d1_2,d1_3,d2_1,d2_2,d2_3,d3_1,d3_2,d3_3")?;
        for (i, triad) in self.triads.iter().enumerate() {
            let mut row = vec![self.s[i]];
            row.extend_from_slice(&self.r[i].to_array());
            for k in 0..3 {
                row.extend_from_slice(&triad.column(k).to_array());
            }
            write_csv_row(out, &row)?;
        }
        Ok(())
    }
}

fn triad_defect(r: &Mat3) -> f64 {
    let gram = r.transpose() * *r - Mat3::IDENTITY;
    let handed = r.column(2) - r.column(0).cross(&r.column(1));
    gram.max_abs().max(handed.norm_inf())
}

/// Integrates `∂s d_k = κ × d_k` with the exact rotation update
/// `R ← R exp(Δs hat(κ_mid))` and the centerline `∂s r = Σ ν_k d_k` by the
/// trapezoidal rule, starting from `base` and `r0` at `s = 0`.
pub fn reconstruct_frame(state: &RodState, base: Mat3, r0: Vec3, mode: FrameMode) -> Result<FrameField, RodError> {
    let defect = triad_defect(&base);
    // also rejects NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(defect <= BASE_TRIAD_TOL) {
        return Err(RodError::NonOrthonormalTriad { defect });
    }
    let n = state.nodes();
    let h = state.ds();
    let strain = |i: usize| match mode {
        FrameMode::Cosserat => state.nu[i],
        FrameMode::Kirchhoff => Vec3::new(0.0, 0.0, 1.0),
    };
    let mut triads = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    triads.push(base);
    r.push(r0);
    for i in 1..n {
        let prev = triads[i - 1];
        let kappa_mid = (state.kappa[i - 1] + state.kappa[i]) * 0.5;
        let next = prev * rodrigues_exp(kappa_mid * h);
        let tangent_prev = prev * strain(i - 1);
        let tangent_next = next * strain(i);
        r.push(r[i - 1] + (tangent_prev + tangent_next) * (0.5 * h));
        triads.push(next);
    }
    Ok(FrameField {
        s: (0..n).map(|i| state.s_at(i)).collect(),
        r,
        triads,
    })
}

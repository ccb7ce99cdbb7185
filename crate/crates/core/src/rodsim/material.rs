use serde::{Deserialize, Serialize};

use super::RodError;
use crate::linalg3::Vec3;

/// Linear elastic material and inertia data of a rod cross-section.
///
/// `rho` is a lumped linear density so that `ρA = rho * area`; `j` holds the
/// diagonal of the rotational inertia per length `ρJ` directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub rho: f64,
    pub area: f64,
    /// Young's modulus (tension).
    pub e: f64,
    /// Young's modulus of bending.
    pub e_b: f64,
    /// Shear modulus.
    pub g: f64,
    pub i1: f64,
    pub i2: f64,
    /// Polar moment.
    pub i3: f64,
    pub j: Vec3,
    #[serde(default)]
    pub kappa0: Vec3,
    #[serde(default = "straight_nu")]
    pub nu0: Vec3,
}

fn straight_nu() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

impl MaterialParams {
    /// Unit-ish parameters for a straight, unstrained reference configuration.
    pub fn unit() -> Self {
        MaterialParams {
            rho: 1.0,
            area: 1.0,
            e: 1.0,
            e_b: 1.0,
            g: 1.0,
            i1: 1.0,
            i2: 1.0,
            i3: 1.0,
            j: Vec3::new(1.0, 1.0, 1.0),
            kappa0: Vec3::ZERO,
            nu0: straight_nu(),
        }
    }

    pub fn rho_a(&self) -> f64 {
        self.rho * self.area
    }

    pub fn rho_j(&self) -> Vec3 {
        self.j
    }

    /// `(E_b I1, E_b I2, G I3)`.
    pub fn bending_stiffness(&self) -> Vec3 {
        Vec3::new(self.e_b * self.i1, self.e_b * self.i2, self.g * self.i3)
    }

    /// `(GA, GA, EA)`.
    pub fn axial_stiffness(&self) -> Vec3 {
        Vec3::new(self.g * self.area, self.g * self.area, self.e * self.area)
    }

    pub fn validate(&self) -> Result<(), RodError> {
        let b = self.bending_stiffness();
        let a = self.axial_stiffness();
        let named = [
            ("GA", a.x),
            ("EA", a.z),
            ("E_b*I1", b.x),
            ("E_b*I2", b.y),
            ("G*I3", b.z),
            ("rho*A", self.rho_a()),
            ("J11", self.j.x),
            ("J22", self.j.y),
            ("J33", self.j.z),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RodError::InvalidMaterial(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.kappa0.is_finite() || !self.nu0.is_finite() {
            return Err(RodError::InvalidMaterial("reference strains must be finite".into()));
        }
        Ok(())
    }

    /// Characteristic speeds `sqrt(EA/ρA)`, `sqrt(GA/ρA)`, `sqrt(E_b I1/ρJ11)`,
    /// `sqrt(E_b I2/ρJ22)`, `sqrt(G I3/ρJ33)`.
    pub fn wave_speeds(&self) -> [f64; 5] {
        let a = self.axial_stiffness();
        let b = self.bending_stiffness();
        [
            (a.z / self.rho_a()).sqrt(),
            (a.x / self.rho_a()).sqrt(),
            (b.x / self.j.x).sqrt(),
            (b.y / self.j.y).sqrt(),
            (b.z / self.j.z).sqrt(),
        ]
    }

    pub fn max_wave_speed(&self) -> f64 {
        self.wave_speeds().into_iter().fold(0.0, f64::max)
    }

    /// `sqrt(EA / (E_b I1)) * L`; large values mean a stiff semi-discrete system.
    pub fn stiffness_ratio(&self, length: f64) -> f64 {
        (self.e * self.area / (self.e_b * self.i1)).sqrt() * length
    }
}

/// `n = (GA (ν1 - ν1°), GA (ν2 - ν2°), EA (ν3 - ν3°))`.
pub fn constitutive_n(nu: Vec3, mp: &MaterialParams) -> Vec3 {
    debug_assert!(nu.z > 0.0, "orientation-reversing deformation: nu3 = {}", nu.z);
    (nu - mp.nu0).component_mul(&mp.axial_stiffness())
}

/// `m = (E_b I1 (κ1 - κ1°), E_b I2 (κ2 - κ2°), G I3 (κ3 - κ3°))`.
pub fn constitutive_m(kappa: Vec3, mp: &MaterialParams) -> Vec3 {
    (kappa - mp.kappa0).component_mul(&mp.bending_stiffness())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub positive_definite: bool,
    /// `[[∂m/∂κ, ∂m/∂ν], [∂n/∂κ, ∂n/∂ν]]`.
    pub matrix: [[f64; 6]; 6],
    pub leading_minors: [f64; 6],
}

/// Positive-definiteness of the constitutive Jacobian, by leading principal minors.
pub fn monotonicity_check(mp: &MaterialParams) -> MonotonicityReport {
    let b = mp.bending_stiffness();
    let a = mp.axial_stiffness();
    let diag = [b.x, b.y, b.z, a.x, a.y, a.z];
    let mut matrix = [[0.0; 6]; 6];
    for (i, d) in diag.iter().enumerate() {
        matrix[i][i] = *d;
    }
    let mut leading_minors = [0.0; 6];
    for (k, minor) in leading_minors.iter_mut().enumerate() {
        *minor = determinant(&matrix, k + 1);
    }
    MonotonicityReport {
        positive_definite: leading_minors.iter().all(|m| *m > 0.0),
        matrix,
        leading_minors,
    }
}

/// Determinant of the leading `k x k` block by Gaussian elimination with partial
/// pivoting.
fn determinant(m: &[[f64; 6]; 6], k: usize) -> f64 {
    let mut a: Vec<Vec<f64>> = m[..k].iter().map(|row| row[..k].to_vec()).collect();
    let mut det = 1.0;
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty range");
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..k {
            let factor = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (x, y) in lower[0][col..k].iter_mut().zip(&upper[col][col..k]) {
                *x -= factor * y;
            }
        }
    }
    det
}

//! Three-dimensional vectors, 3x3 matrices, the hat map and the closed-form
//! exponential of skew-symmetric matrices.

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::coeffs::coeffs;

/// A triple of components in the director basis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Vec3) -> Vec3 {
        cross(*self, *other)
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Largest absolute component.
    pub fn norm_inf(&self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Component-wise product, used for diagonal tensors.
    pub fn component_mul(&self, other: &Vec3) -> Vec3 {
        Vec3::new(self.x * other.x, self.y * other.y, self.z * other.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Right-handed cross product.
pub fn cross(u: Vec3, v: Vec3) -> Vec3 {
    Vec3::new(
        u.y * v.z - u.z * v.y,
        u.z * v.x - u.x * v.z,
        u.x * v.y - u.y * v.x,
    )
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const ZERO: Mat3 = Mat3 { m: [[0.0; 3]; 3] };
    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub const fn from_rows(m: [[f64; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn from_columns(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Self {
            m: [[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]],
        }
    }

    pub fn column(&self, j: usize) -> Vec3 {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let mut t = [[0.0; 3]; 3];
        for (i, row) in self.m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                t[j][i] = *v;
            }
        }
        Mat3 { m: t }
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Transpose of the cofactor matrix, so that `A * adj(A) = det(A) I`.
    pub fn adjugate(&self) -> Mat3 {
        let m = &self.m;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        Mat3::from_rows([
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ])
    }

    /// Inverse by adjugate over determinant; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(self.adjugate() * (1.0 / d))
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    /// `max |R^T R - I|` and `|det R - 1|` both within `tol`.
    pub fn is_rotation(&self, tol: f64) -> bool {
        (self.transpose() * *self - Mat3::IDENTITY).max_abs() <= tol && (self.det() - 1.0).abs() <= tol
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut r = self;
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] += o.m[i][j];
            }
        }
        r
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        self + o * -1.0
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, k: f64) -> Mat3 {
        let mut r = self;
        r.m.iter_mut().flatten().for_each(|v| *v *= k);
        r
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }
}

impl Mul for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        Mat3 { m: r }
    }
}

/// Skew matrix of `v`, so that `hat(v) * w == v x w`.
pub fn hat(v: Vec3) -> Mat3 {
    Mat3::from_rows([[0.0, -v.z, v.y], [v.z, 0.0, -v.x], [-v.y, v.x, 0.0]])
}

/// `exp(hat(v)) = I + (sin p / p) A + ((1 - cos p) / p^2) A^2` with `p = |v|`.
pub fn rodrigues_exp(v: Vec3) -> Mat3 {
    let a = hat(v);
    let (c1, c2, _) = coeffs(v.norm());
    Mat3::IDENTITY + a * c1 + (a * a) * c2
}

/// Max-entry magnitude of `A^3 + p^2 A` for `A = hat(v)`.
pub fn cayley_hamilton_defect(v: Vec3) -> f64 {
    let a = hat(v);
    (a * a * a + a * v.norm_squared()).max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    /// Truncated power series, kept independent of the closed form.
    fn taylor_exp(a: Mat3, terms: usize) -> Mat3 {
        let mut sum = Mat3::IDENTITY;
        let mut term = Mat3::IDENTITY;
        for k in 1..terms {
            term = term * a * (1.0 / k as f64);
            sum = sum + term;
        }
        sum
    }

    fn vec_in_ball(radius: f64) -> impl Strategy<Value = Vec3> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..radius).prop_map(|(x, y, z, r)| {
            let v = Vec3::new(x, y, z);
            let n = v.norm();
            if n < 1e-9 {
                Vec3::ZERO
            } else {
                v * (r / n)
            }
        })
    }

    #[test]
    fn hat_of_zero_is_zero() {
        assert_eq!(hat(Vec3::ZERO), Mat3::ZERO);
    }

    #[test]
    fn hat_applies_cross_product() {
        assert_eq!(hat(Vec3::new(1.0, 2.0, 3.0)) * Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 3.0, -2.0));
        let a = hat(Vec3::new(0.3, -0.2, 0.1));
        assert_eq!(a + a.transpose(), Mat3::ZERO);
    }

    #[test]
    fn cross_examples() {
        assert_eq!(cross(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)), Vec3::new(0.0, 0.0, 1.0));
        let u = Vec3::new(1.0, 2.0, 3.0);
        let v = Vec3::new(4.0, 5.0, 6.0);
        assert_eq!(cross(u, v), Vec3::new(-3.0, 6.0, -3.0));
        assert_eq!(cross(u, v), -cross(v, u));
        assert_eq!(cross(u, u), Vec3::ZERO);
    }

    #[test]
    fn rodrigues_examples() {
        assert_eq!(rodrigues_exp(Vec3::ZERO), Mat3::IDENTITY);

        let r = rodrigues_exp(Vec3::new(FRAC_PI_2, 0.0, 0.0));
        let img = r * Vec3::new(0.0, 1.0, 0.0);
        let oracle = taylor_exp(hat(Vec3::new(FRAC_PI_2, 0.0, 0.0)), 40) * Vec3::new(0.0, 1.0, 0.0);
        assert!((img - Vec3::new(0.0, 0.0, 1.0)).norm_inf() <= 1e-12);
        assert!((oracle - Vec3::new(0.0, 0.0, 1.0)).norm_inf() <= 1e-12);

        let r = rodrigues_exp(Vec3::new(1.1, -0.4, 2.0));
        assert!((r.det() - 1.0).abs() <= 1e-12);
        assert!(r.is_rotation(1e-12));
    }

    #[test]
    fn rodrigues_accepts_large_angles() {
        let v = Vec3::new(7.0, -3.0, 2.0);
        let r = rodrigues_exp(v);
        assert!(r.is_rotation(1e-12));
        // rotation axis is fixed
        assert!((r * v - v).norm_inf() < 1e-12);
    }

    #[test]
    fn cayley_hamilton_examples() {
        assert_eq!(cayley_hamilton_defect(Vec3::ZERO), 0.0);
        assert!(cayley_hamilton_defect(Vec3::new(1.0, 2.0, 2.0)) <= 1e-12);
        assert!(cayley_hamilton_defect(Vec3::new(5.0, -5.0, 5.0)) <= 1e-11);
    }

    #[test]
    fn inverse_by_adjugate() {
        let a = Mat3::from_rows([[2.0, 1.0, 0.5], [-1.0, 3.0, 0.0], [0.25, 0.0, 1.0]]);
        let inv = a.inverse().unwrap();
        assert!((a * inv - Mat3::IDENTITY).max_abs() < 1e-15);
        assert!(Mat3::ZERO.inverse().is_none());
    }

    proptest! {
        #[test]
        fn hat_is_exactly_skew(x in -1e3..1e3f64, y in -1e3..1e3f64, z in -1e3..1e3f64) {
            let a = hat(Vec3::new(x, y, z));
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(a.m[i][j], -a.m[j][i]);
                }
            }
        }

        #[test]
        fn rodrigues_matches_taylor_oracle(v in vec_in_ball(PI)) {
            let diff = (rodrigues_exp(v) - taylor_exp(hat(v), 40)).max_abs();
            prop_assert!(diff <= 1e-12, "diff {diff} at {v}");
        }

        #[test]
        fn rodrigues_inverse_is_negation(v in vec_in_ball(12.0)) {
            let prod = rodrigues_exp(v) * rodrigues_exp(-v);
            prop_assert!((prod - Mat3::IDENTITY).max_abs() <= 1e-12);
        }

        #[test]
        fn cayley_hamilton_holds(v in vec_in_ball(10.0)) {
            prop_assert!(cayley_hamilton_defect(v) <= 1e-11);
        }
    }
}

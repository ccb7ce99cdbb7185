//! Entire coefficient functions of the SO(3) exponential.
//!
//! The family `phi(n, q) = sum_k (-q)^k / (2k + n)!` with `q = p^2` covers every
//! coefficient that appears in the rotation and transport formulas:
//!
//! | n | closed form            |
//! |---|------------------------|
//! | 0 | `cos p`                |
//! | 1 | `sin p / p`            |
//! | 2 | `(1 - cos p) / p^2`    |
//! | 3 | `(p - sin p) / p^3`    |
//!
//! Working in `q` rather than `p` keeps every member analytic at the origin, and
//! the family is closed under differentiation:
//! `d phi(n, q) / dq = (n * phi(n + 2, q) - phi(n + 1, q)) / 2`.

/// Below this angle the coefficients switch to their fifth-order Taylor polynomials.
pub const SMALL_ANGLE: f64 = 1e-4;

/// Upper bound on `q` for direct series summation; the recurrence from `cos`/`sin`
/// takes over above it.
const SERIES_LIMIT: f64 = 4.0;

fn inv_factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc / f64::from(k))
}

/// `phi(n, q)` for `q = p^2`.
pub fn phi(n: u32, q: f64) -> f64 {
    if q.abs() < SMALL_ANGLE * SMALL_ANGLE {
        return inv_factorial(n) - q * inv_factorial(n + 2) + q * q * inv_factorial(n + 4);
    }
    if q.abs() <= SERIES_LIMIT {
        let mut term = inv_factorial(n);
        let mut sum = term;
        for k in 1..40u32 {
            let a = f64::from(2 * k + n - 1);
            let b = f64::from(2 * k + n);
            term *= -q / (a * b);
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    if q < 0.0 {
        return f64::NAN;
    }
    let p = q.sqrt();
    let (mut even, mut odd) = (p.cos(), p.sin() / p);
    // g(k + 2) = (1/k! - g(k)) / q
    let mut k = 0;
    while k + 1 < n {
        even = (inv_factorial(k) - even) / q;
        odd = (inv_factorial(k + 1) - odd) / q;
        k += 2;
    }
    if k == n {
        even
    } else {
        odd
    }
}

/// `(sin p / p, (1 - cos p) / p^2, (p - sin p) / p^3)` for an angle `p >= 0`.
pub fn coeffs(p: f64) -> (f64, f64, f64) {
    if p < SMALL_ANGLE {
        let p2 = p * p;
        let p4 = p2 * p2;
        return (
            1.0 - p2 / 6.0 + p4 / 120.0,
            0.5 - p2 / 24.0 + p4 / 720.0,
            1.0 / 6.0 - p2 / 120.0 + p4 / 5040.0,
        );
    }
    let q = p * p;
    (phi(1, q), phi(2, q), phi(3, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn limits_at_zero() {
        assert_eq!(coeffs(0.0), (1.0, 0.5, 1.0 / 6.0));
    }

    #[test]
    fn values_at_pi() {
        let (c1, c2, c3) = coeffs(PI);
        assert!(c1.abs() < 1e-15);
        assert!((c2 - 2.0 / (PI * PI)).abs() < 1e-15);
        assert!((c3 - 1.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn closed_forms_at_moderate_angles() {
        for &p in &[0.3, 1.0, 1.9, 2.1, 3.0, 5.0, 9.5] {
            let (c1, c2, c3) = coeffs(p);
            assert!((c1 - p.sin() / p).abs() < 1e-14, "c1 at {p}");
            assert!((c2 - (1.0 - p.cos()) / (p * p)).abs() < 1e-14, "c2 at {p}");
            assert!((c3 - (p - p.sin()) / (p * p * p)).abs() < 1e-13, "c3 at {p}");
            assert!((phi(0, p * p) - p.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn branch_continuity_at_threshold() {
        let p = SMALL_ANGLE;
        let below = coeffs(p * (1.0 - 1e-12));
        let above = coeffs(p);
        assert!((below.0 - above.0).abs() <= 1e-12);
        assert!((below.1 - above.1).abs() <= 1e-12);
        assert!((below.2 - above.2).abs() <= 1e-12);
    }

    #[test]
    fn derivative_identity() {
        for n in 0..5 {
            for &q in &[0.01f64, 0.7, 3.9, 4.1, 12.0, 40.0] {
                let h = 1e-5 * q.max(1.0);
                let fd = (phi(n, q + h) - phi(n, q - h)) / (2.0 * h);
                let exact = 0.5 * (f64::from(n) * phi(n + 2, q) - phi(n + 1, q));
                assert!((fd - exact).abs() < 1e-8, "n={n} q={q}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn series_and_recurrence_agree_at_switch() {
        for n in 0..7 {
            let a = phi(n, SERIES_LIMIT);
            let b = phi(n, SERIES_LIMIT * (1.0 + 1e-13));
            assert!((a - b).abs() < 1e-13, "n={n}: {a} vs {b}");
        }
    }
}

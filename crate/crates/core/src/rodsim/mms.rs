//! Manufactured-solution checks of the spatial discretization, using an exact
//! solution of the compatibility equation to prescribe `ω` and to compare `κ`.

use rayon::prelude::*;
use serde::Serialize;

use super::{spatial_derivative, RodError};
use crate::linalg3::Vec3;
use crate::symmetry::SolutionFamily;

fn node_positions(length: f64, nodes: usize, periodic: bool) -> (f64, Vec<f64>) {
    let h = if periodic {
        length / nodes as f64
    } else {
        length / (nodes - 1) as f64
    };
    (h, (0..nodes).map(|i| i as f64 * h).collect())
}

fn sample(family: &SolutionFamily, s: &[f64], t: f64) -> Result<Vec<(Vec3, Vec3, Vec3)>, RodError> {
    s.par_iter()
        .map(|&s| family.eval(s, t).map(|f| (f.omega, f.kappa, f.kappa_t)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(RodError::from)
}

/// Max-norm of `D_s ω + ω × κ − ∂t κ` with exact fields, i.e. the truncation
/// error of the κ-equation at time `t`.
pub fn kappa_rhs_error(
    family: &SolutionFamily,
    length: f64,
    nodes: usize,
    periodic: bool,
    t: f64,
) -> Result<f64, RodError> {
    let (h, s) = node_positions(length, nodes, periodic);
    let fields = sample(family, &s, t)?;
    let omega: Vec<Vec3> = fields.iter().map(|f| f.0).collect();
    let d_omega = spatial_derivative(&omega, h, periodic);
    Ok(fields
        .iter()
        .zip(&d_omega)
        .map(|((w, k, kt), dw)| (*dw + w.cross(k) - *kt).norm_inf())
        .fold(0.0, f64::max))
}

/// Integrates `∂t κ = D_s ω + ω × κ` from the exact `κ(·, 0)` to `t_end` with RK4
/// and prescribed exact `ω`, returning the max-norm error in `κ` at `t_end`.
pub fn kappa_mms_error(
    family: &SolutionFamily,
    length: f64,
    nodes: usize,
    periodic: bool,
    t_end: f64,
    steps: usize,
) -> Result<f64, RodError> {
    if nodes < super::MIN_NODES || steps == 0 {
        return Err(RodError::InvalidGrid(format!("nodes = {nodes}, steps = {steps}")));
    }
    let (h, s) = node_positions(length, nodes, periodic);
    let dt = t_end / steps as f64;
    let omega_at = |t: f64| -> Result<(Vec<Vec3>, Vec<Vec3>), RodError> {
        let omega: Vec<Vec3> = sample(family, &s, t)?.into_iter().map(|f| f.0).collect();
        let d = spatial_derivative(&omega, h, periodic);
        Ok((omega, d))
    };
    let rate = |(omega, d): &(Vec<Vec3>, Vec<Vec3>), kappa: &[Vec3]| -> Vec<Vec3> {
        (0..kappa.len()).map(|i| d[i] + omega[i].cross(&kappa[i])).collect()
    };
    let shifted = |kappa: &[Vec3], k: &[Vec3], a: f64| -> Vec<Vec3> {
        kappa.iter().zip(k).map(|(x, d)| *x + *d * a).collect()
    };

    let mut kappa: Vec<Vec3> = sample(family, &s, 0.0)?.into_iter().map(|f| f.1).collect();
    let mut start = omega_at(0.0)?;
    for step in 0..steps {
        let t = step as f64 * dt;
        let mid = omega_at(t + 0.5 * dt)?;
        let end = omega_at(t + dt)?;
        let k1 = rate(&start, &kappa);
        let k2 = rate(&mid, &shifted(&kappa, &k1, 0.5 * dt));
        let k3 = rate(&mid, &shifted(&kappa, &k2, 0.5 * dt));
        let k4 = rate(&end, &shifted(&kappa, &k3, dt));
        for i in 0..kappa.len() {
            kappa[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        start = end;
    }
    let exact = sample(family, &s, t_end)?;
    Ok(kappa
        .iter()
        .zip(&exact)
        .map(|(k, e)| (*k - e.1).norm_inf())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub nodes: Vec<usize>,
    pub spacing: Vec<f64>,
    pub errors: Vec<f64>,
    /// Observed order between consecutive refinements.
    pub orders: Vec<f64>,
}

impl ConvergenceStudy {
    pub fn from_errors(nodes: Vec<usize>, spacing: Vec<f64>, errors: Vec<f64>) -> Self {
        let orders = (1..errors.len())
            .map(|i| (errors[i - 1] / errors[i]).ln() / (spacing[i - 1] / spacing[i]).ln())
            .collect();
        ConvergenceStudy {
            nodes,
            spacing,
            errors,
            orders,
        }
    }

    pub fn orders_within(&self, target: f64, tol: f64) -> bool {
        !self.orders.is_empty() && self.orders.iter().all(|p| (p - target).abs() <= tol)
    }
}

/// Runs [`kappa_mms_error`] on each grid with a common time step.
pub fn kappa_convergence(
    family: &SolutionFamily,
    length: f64,
    nodes: &[usize],
    periodic: bool,
    t_end: f64,
    steps: usize,
) -> Result<ConvergenceStudy, RodError> {
    let errors = nodes
        .iter()
        .map(|&n| kappa_mms_error(family, length, n, periodic, t_end, steps))
        .collect::<Result<Vec<_>, _>>()?;
    let spacing = nodes.iter().map(|&n| node_positions(length, n, periodic).0).collect();
    Ok(ConvergenceStudy::from_errors(nodes.to_vec(), spacing, errors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprfield::VecExpr;
    use crate::symmetry::general_solution;
    use std::f64::consts::TAU;

    fn periodic_family() -> SolutionFamily {
        let p = VecExpr::parse(["0.4*sin(s) + 0.2*t", "0.3*cos(s)*t", "0.2*sin(s)*cos(t)"]).unwrap();
        let f = VecExpr::parse(["cos(t)", "0.5*t", "1"]).unwrap();
        general_solution(&p, &f).unwrap()
    }

    #[test]
    fn truncation_error_is_second_order() {
        let fam = periodic_family();
        let coarse = kappa_rhs_error(&fam, TAU, 50, true, 0.3).unwrap();
        let fine = kappa_rhs_error(&fam, TAU, 100, true, 0.3).unwrap();
        let order = (coarse / fine).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn one_sided_ends_keep_second_order() {
        let p = VecExpr::parse(["0.3*s*t", "0.2*sin(s)", "0.1*t^2"]).unwrap();
        let f = VecExpr::parse(["cos(t)", "t", "1"]).unwrap();
        let fam = general_solution(&p, &f).unwrap();
        let study = kappa_convergence(&fam, 1.0, &[21, 41, 81], false, 0.5, 200).unwrap();
        assert!(study.orders_within(2.0, 0.3), "{study:?}");
    }

    #[test]
    fn order_computation() {
        let study = ConvergenceStudy::from_errors(vec![10, 20], vec![0.1, 0.05], vec![4e-2, 1e-2]);
        assert!((study.orders[0] - 2.0).abs() < 1e-12);
    }
}

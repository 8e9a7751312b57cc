//! Concave-composite losses `l(u) = sum_i phi(u_i^2)` and their convex
//! quadratic majorants.
//!
//! `phi` is concave and nondecreasing with `phi(0) = 0`, so `l` is a robust
//! loss: it grows slowly on large residuals. Two members are shipped:
//!
//! * `LogLorentzian { gamma }`: `phi(t) = log(1 + t / gamma^2)`, giving the
//!   Lorentzian norm `sum_i log(1 + u_i^2 / gamma^2)` used for Cauchy noise;
//! * `Rational { a }`: `phi(t) = (a + 1) t / (a + t)`.
//!
//! At an anchor `y`, the weights `omega_i = phi'((a_i^T y - b_i)^2)` define a
//! convex quadratic `l^y(u) = sum_i omega_i u_i^2` and a shifted radius
//! `sigma_tilde` such that the level set `{x : l^y(Ax - b) <= sigma_tilde}`
//! sits inside `{x : l(Ax - b) <= sigma}` and touches it at `y`. That
//! majorization is what lets the nonconvex solver retract onto a convex set.

use crate::linalg::{sub, DenseMatrix};

/// Scalar concave function `phi` applied to squared residuals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhiFunction {
    /// `phi(t) = log(t + gamma^2) - log(gamma^2)`
    LogLorentzian { gamma: f64 },
    /// `phi(t) = (a + 1) t / (a + t)` for `a > 0`
    Rational { a: f64 },
}

impl PhiFunction {
    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match *self {
            PhiFunction::LogLorentzian { gamma } => (t / (gamma * gamma)).ln_1p(),
            PhiFunction::Rational { a } => (a + 1.0) * t / (a + t),
        }
    }

    /// Right derivative `phi'_+(t)`; at `t = 0` this is the analytic limit
    /// `vartheta` rather than a numerical quotient.
    pub fn right_derivative(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match *self {
            PhiFunction::LogLorentzian { gamma } => 1.0 / (t + gamma * gamma),
            PhiFunction::Rational { a } => a * (a + 1.0) / ((a + t) * (a + t)),
        }
    }

    /// `vartheta = lim_{t -> 0+} phi'(t)`, the largest slope of `phi`.
    pub fn vartheta(&self) -> f64 {
        self.right_derivative(0.0)
    }
}

/// `l(u) = sum_i phi(u_i^2)`.
pub fn ell_eval(phi: &PhiFunction, u: &[f64]) -> f64 {
    u.iter().map(|&ui| phi.eval(ui * ui)).sum()
}

/// `grad l(u) = (2 phi'_+(u_i^2) u_i)_i`.
pub fn ell_grad(phi: &PhiFunction, u: &[f64]) -> Vec<f64> {
    u.iter()
        .map(|&ui| 2.0 * phi.right_derivative(ui * ui) * ui)
        .collect()
}

/// A Lipschitz modulus for `grad l^y`, valid uniformly in the anchor:
/// `2 vartheta`.
pub fn lipschitz_ell(phi: &PhiFunction) -> f64 {
    2.0 * phi.vartheta()
}

/// Convex quadratic majorant data at an anchor point.
#[derive(Clone, Debug)]
pub struct MajorizationData {
    /// Per-row weights `omega_i = phi'_+((a_i^T y - b_i)^2)`, each in
    /// `[0, vartheta]`.
    pub omega: Vec<f64>,
    /// Shifted radius `sigma - l(Ay - b) + sum_i omega_i (a_i^T y - b_i)^2`;
    /// positive whenever the anchor is feasible.
    pub sigma_tilde: f64,
    /// The anchor `y`.
    pub anchor: Vec<f64>,
}

/// Builds the majorant of `l(A . - b) <= sigma` at anchor `y`.
pub fn build_majorization(
    phi: &PhiFunction,
    a: &DenseMatrix,
    b: &[f64],
    sigma: f64,
    y: &[f64],
) -> MajorizationData {
    let d = sub(&a.matvec(y), b);
    build_majorization_from_residual(phi, &d, sigma, y)
}

/// As [`build_majorization`] when the anchor residual `Ay - b` is already
/// available.
pub fn build_majorization_from_residual(
    phi: &PhiFunction,
    residual: &[f64],
    sigma: f64,
    y: &[f64],
) -> MajorizationData {
    let omega: Vec<f64> = residual
        .iter()
        .map(|&di| phi.right_derivative(di * di))
        .collect();
    let weighted_sq: f64 = omega
        .iter()
        .zip(residual)
        .map(|(&w, &di)| w * di * di)
        .sum();
    let sigma_tilde = sigma - ell_eval(phi, residual) + weighted_sq;
    MajorizationData {
        omega,
        sigma_tilde,
        anchor: y.to_vec(),
    }
}

/// `l^y(u) = sum_i omega_i u_i^2`.
pub fn ell_y_eval(m: &MajorizationData, u: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), m.omega.len());
    m.omega.iter().zip(u).map(|(&w, &ui)| w * ui * ui).sum()
}

/// `grad l^y(u) = (2 omega_i u_i)_i`.
pub fn ell_y_grad(m: &MajorizationData, u: &[f64]) -> Vec<f64> {
    debug_assert_eq!(u.len(), m.omega.len());
    m.omega
        .iter()
        .zip(u)
        .map(|(&w, &ui)| 2.0 * w * ui)
        .collect()
}

//! Warm-start pipeline.
//!
//! Both benchmark families start the solvers from the output of a convex
//! pre-solve rather than from the anchor itself: the convex relaxation
//! (`mu = 0`) is solved loosely with the crate's own feasible method, the
//! result is pushed into the box, and any remaining constraint violation is
//! removed by moving toward the interpolating anchor `A^+ b`, for which the
//! segment residual shrinks linearly and the required step has a scalar
//! closed form (Euclidean case) or is a monotone scalar root (Lorentzian
//! case). Every path ends with an exact feasibility check; on any failure
//! the anchor itself is returned, which is always feasible.

use std::sync::Arc;

use crate::fpa::{fpa_solve, FPAConfig};
use crate::linalg::{lerp, norm, sub};
use crate::loss::{build_majorization, ell_eval, PhiFunction};
use crate::problem::{project_group_box, ConstraintKind, ProblemInstance};

/// Initial point plus a label recording which pipeline produced it, kept in
/// run reports for auditability.
#[derive(Clone, Debug)]
pub struct InitResult {
    pub x0: Vec<f64>,
    pub label: &'static str,
}

fn solver_config() -> FPAConfig {
    FPAConfig {
        tol: 1e-3,
        max_iter: 300,
        log_history: false,
        ..FPAConfig::default()
    }
}

/// Warm start for the Euclidean-ball family.
pub fn init_e3(inst: &ProblemInstance) -> InitResult {
    debug_assert_eq!(inst.constraint_kind, ConstraintKind::ConvexBall);
    let fallback = InitResult {
        x0: inst.slater_point.clone(),
        label: "slater-fallback",
    };

    let relaxed = inst.with_mu(0.0);
    let Ok(report) = fpa_solve(&relaxed, &inst.slater_point, &solver_config()) else {
        return fallback;
    };
    let x_hat = project_group_box(&inst.set, &report.final_x);
    let x0 = ball_feasibility_step(inst, x_hat);
    let g = norm(&sub(&inst.a.matvec(&x0), &inst.b));
    if g <= inst.sigma * (1.0 + 1e-10) && inst.set.contains(&x0) {
        InitResult {
            x0,
            label: "convex-warmstart",
        }
    } else {
        fallback
    }
}

/// Moves `x_hat` toward the interpolating anchor until `||Ax - b|| <= sigma`.
/// Because `A slater = b`, the residual on the segment is `(1 - tau)` times
/// the residual at `x_hat`, so `tau = 1 - sigma / ||A x_hat - b||`.
pub(crate) fn ball_feasibility_step(inst: &ProblemInstance, x_hat: Vec<f64>) -> Vec<f64> {
    let res = norm(&sub(&inst.a.matvec(&x_hat), &inst.b));
    if res <= inst.sigma {
        return x_hat;
    }
    let tau = 1.0 - inst.sigma / res;
    lerp(&x_hat, &inst.slater_point, tau)
}

/// Warm start for the Lorentzian family.
pub fn init_e4(inst: &ProblemInstance) -> InitResult {
    debug_assert_eq!(inst.constraint_kind, ConstraintKind::Lorentzian);
    let fallback = InitResult {
        x0: inst.slater_point.clone(),
        label: "slater-fallback",
    };
    let phi = PhiFunction::LogLorentzian { gamma: inst.gamma };

    // Shrink the anchor until it sits exactly on the Lorentzian boundary;
    // the majorant built there is the constraint of the auxiliary convex
    // problem.
    let s0 = lorentzian_scale_root(&inst.b, inst.gamma, inst.sigma);
    let tau0 = 1.0 - s0.sqrt();
    let y0: Vec<f64> = inst.slater_point.iter().map(|v| tau0 * v).collect();
    let majorant = build_majorization(&phi, &inst.a, &inst.b, inst.sigma, &y0);
    if majorant.sigma_tilde <= 0.0 {
        return fallback;
    }

    // The majorant level set is a weighted residual ball; fold the weights
    // into the rows and reuse the Euclidean machinery.
    let weights: Vec<f64> = majorant.omega.iter().map(|w| w.sqrt()).collect();
    let mut a_scaled = (*inst.a).clone();
    a_scaled.scale_rows(&weights);
    let b_scaled: Vec<f64> = inst
        .b
        .iter()
        .zip(&weights)
        .map(|(bi, wi)| bi * wi)
        .collect();
    let aux = match ProblemInstance::convex_ball(
        Arc::new(a_scaled),
        b_scaled,
        majorant.sigma_tilde.sqrt(),
        Arc::clone(&inst.objective.group_structure),
        0.0,
        inst.set.radius,
        inst.slater_point.clone(),
        None,
    ) {
        Ok(aux) => aux,
        Err(_) => return fallback,
    };
    let Ok(report) = fpa_solve(&aux, &inst.slater_point, &solver_config()) else {
        return fallback;
    };

    // Coordinate box first, then restore Lorentzian feasibility.
    let radius = inst.set.radius;
    let clipped: Vec<f64> = report
        .final_x
        .iter()
        .map(|v| v.clamp(-radius, radius))
        .collect();
    let x0 = lorentzian_feasibility_step(inst, clipped);

    let g = ell_eval(&phi, &sub(&inst.a.matvec(&x0), &inst.b));
    if g <= inst.sigma * (1.0 + 1e-10) && inst.set.contains(&x0) {
        InitResult {
            x0,
            label: "convex-warmstart",
        }
    } else {
        fallback
    }
}

/// Moves `x_tilde` toward the interpolating anchor until the Lorentzian
/// residual meets its budget. The segment residual is `(1 - tau)(b - A
/// x_tilde)`, so the step reduces to the scalar root of
/// `s -> l(sqrt(s) d) - sigma`.
pub(crate) fn lorentzian_feasibility_step(inst: &ProblemInstance, x_tilde: Vec<f64>) -> Vec<f64> {
    let phi = PhiFunction::LogLorentzian { gamma: inst.gamma };
    let d = sub(&inst.b, &inst.a.matvec(&x_tilde));
    if ell_eval(&phi, &d) <= inst.sigma {
        return x_tilde;
    }
    let s = lorentzian_scale_root(&d, inst.gamma, inst.sigma);
    let tau1 = 1.0 - s.sqrt();
    lerp(&x_tilde, &inst.slater_point, tau1)
}

/// Root of `s -> sum_i log(1 + s v_i^2 / gamma^2) - target` on `[0, 1]`.
/// The map is strictly increasing and concave in `s`, so Newton from `s = 0`
/// converges monotonically from the left; a bisection guard handles any
/// floating-point overshoot. Returns 1 when even `s = 1` undershoots.
pub(crate) fn lorentzian_scale_root(v: &[f64], gamma: f64, target: f64) -> f64 {
    let g2 = gamma * gamma;
    let weights: Vec<f64> = v.iter().map(|vi| vi * vi / g2).collect();
    let h = |s: f64| weights.iter().map(|&w| (s * w).ln_1p()).sum::<f64>() - target;
    let h_prime = |s: f64| weights.iter().map(|&w| w / (1.0 + s * w)).sum::<f64>();

    if h(1.0) <= 0.0 {
        return 1.0;
    }
    let tol = 1e-10 * target.max(1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut s = 0.0f64;
    let mut h_s = h(s);
    for _ in 0..100 {
        if h_s.abs() <= tol {
            return s;
        }
        if h_s < 0.0 {
            lo = lo.max(s);
        } else {
            hi = hi.min(s);
        }
        let slope = h_prime(s);
        let mut next = if slope > 0.0 {
            s - h_s / slope
        } else {
            f64::NAN
        };
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        s = next;
        h_s = h(s);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (h(mid)).abs() <= tol {
            return mid;
        }
    }
    0.5 * (lo + hi)
}

//! Feasible first-order driver for the single structured nonconvex
//! constraint `l(Ax - b) <= sigma`.
//!
//! The loop mirrors [`crate::fpa::fpa_solve`], with one twist: the feasible
//! set is nonconvex, so the trial point cannot be retracted toward the
//! anchor inside it directly. Instead, each iteration builds the convex
//! quadratic majorant `l^{x^k}` of the loss at the current iterate (see
//! [`crate::loss`]) and retracts onto its level set
//! `{x : l^{x^k}(Ax - b) <= sigma_tilde}`, which sits inside the true
//! feasible set and touches it at `x^k`. Because the anchor interpolates
//! (`A slater = b`), the segment residual collapses to `(1 - t)(A u - b)`
//! and the retraction parameter has a closed form.

use std::time::Instant;

use crate::error::Error;
use crate::fpa::{
    beta0_update, check_termination, clamp_beta, FPAConfig, HistoryRecord, IterateState, RunReport,
    TerminationReason,
};
use crate::linalg::{dot, lerp, sub, DenseMatrix};
use crate::loss::{
    build_majorization_from_residual, ell_eval, ell_grad, ell_y_eval, MajorizationData,
};
use crate::problem::{ConstraintKind, ProblemInstance};
use crate::subproblem::{solve_linearized_prox, SubproblemSpec};

/// Retraction onto the majorant level set `l^y(Ax - b) = sigma_tilde` along
/// the segment toward the interpolating anchor.
///
/// With residual `d = A u_tilde - b` and `A slater = b`, the segment
/// residual is `(1 - t) d`, so `l^y((1 - t) d) = (1 - t)^2 l^y(d)` and the
/// root is `tau = 1 - sqrt(sigma_tilde / l^y(d))`.
pub fn retract_quadratic(
    u_tilde: &[f64],
    slater: &[f64],
    m: &MajorizationData,
    a_mat: &DenseMatrix,
    b: &[f64],
) -> Result<(Vec<f64>, f64), Error> {
    let d = sub(&a_mat.matvec(u_tilde), b);
    retract_quadratic_with_residual(u_tilde, slater, m, &d)
}

/// As [`retract_quadratic`] when `A u_tilde - b` is already available.
pub fn retract_quadratic_with_residual(
    u_tilde: &[f64],
    slater: &[f64],
    m: &MajorizationData,
    residual: &[f64],
) -> Result<(Vec<f64>, f64), Error> {
    let value = ell_y_eval(m, residual);
    if value <= m.sigma_tilde {
        return Ok((u_tilde.to_vec(), 0.0));
    }
    if m.sigma_tilde <= 0.0 {
        return Err(Error::SigmaTildeNonpositive {
            value: m.sigma_tilde,
        });
    }
    let tau = 1.0 - (m.sigma_tilde / value).sqrt();
    Ok((lerp(u_tilde, slater, tau), tau))
}

/// Runs the feasible method on a Lorentzian instance from a feasible `x0`.
pub fn fpa_nonconvex_solve(
    inst: &ProblemInstance,
    x0: &[f64],
    cfg: &FPAConfig,
) -> Result<RunReport, Error> {
    if inst.constraint_kind != ConstraintKind::Lorentzian {
        return Err(Error::InvalidConfig(
            "fpa_nonconvex_solve expects a Lorentzian instance; use fpa_solve instead".into(),
        ));
    }
    let phi = inst.phi().expect("Lorentzian instance carries a phi");
    let start = Instant::now();

    let d0 = sub(&inst.a.matvec(x0), &inst.b);
    let g_x0 = ell_eval(&phi, &d0) - inst.sigma;
    if g_x0 > 1e-10 || !inst.set.contains(x0) {
        return Err(Error::InfeasibleStart {
            detail: format!(
                "l(Ax0 - b) - sigma = {g_x0:.3e}, box membership = {}",
                inst.set.contains(x0)
            ),
        });
    }

    let mut x = x0.to_vec();
    let mut d_x = d0;
    let mut obj = inst.objective_value(&x);
    let mut warm_lambda: Option<f64> = None;
    let mut prev_beta0 = f64::NAN;
    let mut prev_beta = f64::NAN;
    let mut history = cfg.log_history.then(Vec::new);
    let mut termination = TerminationReason::MaxIter;
    let mut iterations = cfg.max_iter;

    for k in 0..cfg.max_iter {
        let xi = (inst.objective.p2_subgrad)(&x);
        // Majorant and linearization share the residual at x^k.
        let majorant = build_majorization_from_residual(&phi, &d_x, inst.sigma, &x);
        let grad_l = ell_grad(&phi, &d_x);
        let a_lin = inst.a.matvec_transpose(&grad_l);
        let g_x = ell_eval(&phi, &d_x) - inst.sigma;
        let r_lin = dot(&a_lin, &x) - g_x;

        let beta0 = if k == 0 {
            clamp_beta(cfg.beta0_rule.initial, cfg)
        } else {
            beta0_update(prev_beta0, prev_beta, cfg)
        };

        let mut beta = beta0;
        let mut backtracks = 0usize;
        let accepted;
        loop {
            let mut y = x.clone();
            crate::linalg::axpy(beta, &xi, &mut y);
            let spec = SubproblemSpec {
                y,
                beta,
                a_lin: &a_lin,
                r_lin,
                set: &inst.set,
            };
            let sol = solve_linearized_prox(&spec, warm_lambda)?;
            warm_lambda = Some(sol.lambda_star);

            let d_u = sub(&inst.a.matvec(&sol.x_star), &inst.b);
            let (x_new, tau) =
                retract_quadratic_with_residual(&sol.x_star, &inst.slater_point, &majorant, &d_u)?;
            let obj_new = inst.objective_value(&x_new);
            let step_norm = crate::linalg::norm(&sub(&sol.x_star, &x));
            if obj_new <= obj - 0.5 * cfg.c * step_norm * step_norm {
                accepted = (sol, d_u, x_new, tau, obj_new, step_norm);
                break;
            }
            beta *= cfg.eta;
            backtracks += 1;
            if beta <= cfg.beta_exit {
                let report = RunReport {
                    iterations: k,
                    cpu_seconds: start.elapsed().as_secs_f64(),
                    final_objective: obj,
                    final_x: x,
                    termination: TerminationReason::SmallStepsize,
                    history,
                    rng_algorithm: None,
                    initializer: None,
                };
                return Ok(report);
            }
            if beta < 1e-30 {
                return Err(Error::LineSearchStalled { beta });
            }
        }

        let (sol, d_u, x_new, tau, obj_new, step_norm) = accepted;
        let g_u = ell_eval(&phi, &d_u) - inst.sigma;
        let d_new = if tau == 0.0 {
            d_u.clone()
        } else {
            sub(&inst.a.matvec(&x_new), &inst.b)
        };
        let g_new = ell_eval(&phi, &d_new) - inst.sigma;
        if let Some(h) = history.as_mut() {
            h.push(HistoryRecord {
                k,
                obj_before: obj,
                obj_after: obj_new,
                step_norm,
                beta,
                tau,
                lambda: sol.lambda_star,
                backtracks,
                g_u,
                feas_residual: g_new / inst.sigma,
                box_ok: inst.set.contains(&x_new),
                sigma_tilde: Some(majorant.sigma_tilde),
            });
        }

        let state = IterateState {
            x: x.clone(),
            u: sol.x_star.clone(),
            beta,
            tau,
            lambda: sol.lambda_star,
            obj,
            k,
        };

        x = x_new;
        d_x = d_new;
        obj = obj_new;
        prev_beta0 = beta0;
        prev_beta = beta;

        if check_termination(inst, &state, g_u, cfg.tol) {
            termination = TerminationReason::Criticality;
            iterations = k + 1;
            break;
        }
        if beta <= cfg.beta_exit {
            termination = TerminationReason::SmallStepsize;
            iterations = k + 1;
            break;
        }
    }

    Ok(RunReport {
        iterations,
        cpu_seconds: start.elapsed().as_secs_f64(),
        final_objective: obj,
        final_x: x,
        termination,
        history,
        rng_algorithm: None,
        initializer: None,
    })
}

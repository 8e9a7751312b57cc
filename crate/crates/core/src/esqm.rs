//! Adapted ESQM baseline with line search.
//!
//! Unlike the retraction drivers this method does not keep its iterates
//! feasible: the linearized constraint is softened by a slack variable paid
//! for at rate `1/beta_k` in the subproblem, progress is measured by the
//! exact penalty `F_k(x) = P(x) + beta_k^{-1} max{g(x), 0}` through an
//! Armijo search, and `beta_k^{-1}` grows by `delta` whenever the
//! linearization could not be satisfied without slack. Iterates do stay in
//! the box, since each update is a convex combination of box points.

use std::time::Instant;

use crate::error::Error;
use crate::fpa::{check_termination, HistoryRecord, IterateState, RunReport, TerminationReason};
use crate::linalg::{dot, sub};
use crate::problem::ProblemInstance;
use crate::subproblem::{solve_esqm_subproblem, SubproblemSpec};

/// Parameters of the baseline. Defaults: `c = 1e-4`, `beta0 = 1`,
/// `t = 1/2`; `delta` controls how fast the penalty stiffens and is swept
/// over `{0.5, 0.1, 0.02}` in the benchmark.
#[derive(Clone, Copy, Debug)]
pub struct ESQMConfig {
    pub c: f64,
    pub beta0: f64,
    pub t: f64,
    pub delta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub log_history: bool,
}

impl ESQMConfig {
    pub fn with_delta(delta: f64) -> Self {
        Self {
            delta,
            ..Self::default()
        }
    }
}

impl Default for ESQMConfig {
    fn default() -> Self {
        Self {
            c: 1e-4,
            beta0: 1.0,
            t: 0.5,
            delta: 0.1,
            tol: 1e-4,
            max_iter: 20_000,
            log_history: false,
        }
    }
}

/// Exact penalty `P(x) + beta^{-1} max{g(x), 0}` for `x` in the box.
pub fn exact_penalty_value(inst: &ProblemInstance, beta: f64, x: &[f64]) -> f64 {
    let g1 = inst.constraint();
    inst.objective_value(x) + (g1.eval)(x).max(0.0) / beta
}

/// Runs the adapted ESQM from an `x0` in the box (feasibility with respect
/// to the smooth constraint is not required).
///
/// History semantics differ from the retraction drivers: `obj_before` /
/// `obj_after` store the merit values `F_k(x^k)` and `F_k(x^{k+1})`, `tau`
/// stores the Armijo stepsize `t_k`, and `feas_residual` may be positive.
/// On a criticality exit the returned point is the certified subproblem
/// solution `u^k`; otherwise it is the last iterate.
pub fn esqm_solve(
    inst: &ProblemInstance,
    x0: &[f64],
    cfg: &ESQMConfig,
) -> Result<RunReport, Error> {
    if !inst.set.contains(x0) {
        return Err(Error::InfeasibleStart {
            detail: "x0 outside the box".into(),
        });
    }
    let g1 = inst.constraint();
    let start = Instant::now();

    let mut x = x0.to_vec();
    let mut g_x = (g1.eval)(&x);
    let mut obj_x = inst.objective_value(&x);
    let mut beta = cfg.beta0;
    let mut warm_lambda: Option<f64> = None;
    let mut history = cfg.log_history.then(Vec::new);
    let mut termination = TerminationReason::MaxIter;
    let mut iterations = cfg.max_iter;
    let mut final_x: Option<Vec<f64>> = None;

    for k in 0..cfg.max_iter {
        let xi = (inst.objective.p2_subgrad)(&x);
        let a_lin = (g1.grad)(&x);
        let r_lin = dot(&a_lin, &x) - g_x;

        let mut y = x.clone();
        crate::linalg::axpy(beta, &xi, &mut y);
        let spec = SubproblemSpec {
            y,
            beta,
            a_lin: &a_lin,
            r_lin,
            set: &inst.set,
        };
        let (sol, slack) = solve_esqm_subproblem(&spec, warm_lambda)?;
        warm_lambda = Some(sol.lambda_star);

        let dir = sub(&sol.x_star, &x);
        let step_norm = crate::linalg::norm(&dir);
        let f_x = obj_x + g_x.max(0.0) / beta;

        // Armijo search on the exact penalty.
        let mut t_k = 1.0f64;
        let mut accepted = None;
        for _ in 0..=60 {
            let mut x_trial = x.clone();
            crate::linalg::axpy(t_k, &dir, &mut x_trial);
            let g_trial = (g1.eval)(&x_trial);
            let obj_trial = inst.objective_value(&x_trial);
            let f_trial = obj_trial + g_trial.max(0.0) / beta;
            if f_trial <= f_x - cfg.c * t_k / beta * step_norm * step_norm {
                accepted = Some((x_trial, g_trial, obj_trial, f_trial));
                break;
            }
            t_k *= cfg.t;
            if t_k <= 1e-10 {
                break;
            }
        }
        let Some((x_new, g_new, obj_new, f_new)) = accepted else {
            termination = TerminationReason::SmallStepsize;
            iterations = k;
            break;
        };

        let g_u = (g1.eval)(&sol.x_star);
        if let Some(h) = history.as_mut() {
            h.push(HistoryRecord {
                k,
                obj_before: f_x,
                obj_after: f_new,
                step_norm,
                beta,
                tau: t_k,
                lambda: sol.lambda_star,
                backtracks: (t_k.log2() / cfg.t.log2()).round().max(0.0) as usize,
                g_u,
                feas_residual: crate::problem::eval_residual(inst, &x_new),
                box_ok: inst.set.contains(&x_new),
                sigma_tilde: None,
            });
        }

        let state = IterateState {
            x: x.clone(),
            u: sol.x_star.clone(),
            beta,
            tau: t_k,
            lambda: sol.lambda_star,
            obj: obj_x,
            k,
        };

        x = x_new;
        g_x = g_new;
        obj_x = obj_new;
        // Penalty update: stiffen whenever the linearization needed slack.
        if slack > 0.0 {
            beta = 1.0 / (1.0 / beta + cfg.delta);
        }

        if check_termination(inst, &state, g_u, cfg.tol) {
            termination = TerminationReason::Criticality;
            iterations = k + 1;
            final_x = Some(sol.x_star);
            break;
        }
        if t_k <= 1e-10 {
            termination = TerminationReason::SmallStepsize;
            iterations = k + 1;
            break;
        }
    }

    let final_x = final_x.unwrap_or(x);
    Ok(RunReport {
        iterations,
        cpu_seconds: start.elapsed().as_secs_f64(),
        final_objective: inst.objective_value(&final_x),
        final_x,
        termination,
        history,
        rng_algorithm: None,
        initializer: None,
    })
}

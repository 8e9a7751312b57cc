//! Feasible first-order driver for the convex-constraint case.
//!
//! Each iteration linearizes the smooth constraint at the current iterate,
//! solves the resulting proximal subproblem over the box (see
//! [`crate::subproblem`]), retracts the trial point back onto the feasible
//! set along the segment toward the strictly feasible anchor, and backtracks
//! the prox stepsize until a sufficient-descent test holds. All iterates stay
//! feasible; the objective never increases.

use std::time::Instant;

use crate::error::Error;
use crate::linalg::{dot, lerp, norm, sub};
use crate::problem::{ConstraintKind, ProblemInstance, SmoothConstraint};
use crate::subproblem::{solve_linearized_prox, SubproblemSpec};

/// Adaptive rule for the stepsize tried first at each outer iteration: start
/// from `initial`, grow by `growth` after an iteration that accepted its
/// first trial, otherwise restart from the last accepted stepsize.
#[derive(Clone, Copy, Debug)]
pub struct Beta0Rule {
    pub initial: f64,
    pub growth: f64,
}

impl Default for Beta0Rule {
    fn default() -> Self {
        Self {
            initial: 1.0,
            growth: 2.0,
        }
    }
}

/// Solver parameters. The defaults match the benchmark settings:
/// `c = 1e-4`, `eta = 1/2`, stepsize clamp `[1e-8, 1e8]`, tolerance `1e-4`.
#[derive(Clone, Copy, Debug)]
pub struct FPAConfig {
    /// Sufficient-descent coefficient in `P(x') <= P(x) - (c/2) ||u - x||^2`.
    pub c: f64,
    /// Backtracking factor in `(0, 1)`.
    pub eta: f64,
    /// Lower stepsize clamp.
    pub beta_lo: f64,
    /// Upper stepsize clamp.
    pub beta_hi: f64,
    /// Termination tolerance (relative, see `check_termination`).
    pub tol: f64,
    pub max_iter: usize,
    pub beta0_rule: Beta0Rule,
    /// Safeguard: stop when the trial stepsize falls to this level.
    pub beta_exit: f64,
    /// Record per-iteration history (off by default to save memory).
    pub log_history: bool,
}

impl Default for FPAConfig {
    fn default() -> Self {
        Self {
            c: 1e-4,
            eta: 0.5,
            beta_lo: 1e-8,
            beta_hi: 1e8,
            tol: 1e-4,
            max_iter: 20_000,
            beta0_rule: Beta0Rule::default(),
            beta_exit: 1e-10,
            log_history: false,
        }
    }
}

/// Snapshot of the quantities the termination test needs at iteration `k`.
#[derive(Clone, Debug)]
pub struct IterateState {
    /// Current iterate `x^k` (the point the subproblem was built at).
    pub x: Vec<f64>,
    /// Subproblem solution `u^k`.
    pub u: Vec<f64>,
    /// Accepted stepsize `beta_k`.
    pub beta: f64,
    /// Retraction parameter `tau_k`.
    pub tau: f64,
    /// Multiplier of the linearized inequality.
    pub lambda: f64,
    /// Objective value at `x^k`.
    pub obj: f64,
    pub k: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationReason {
    /// The approximate criticality test passed.
    Criticality,
    /// The stepsize safeguard tripped.
    SmallStepsize,
    /// Iteration budget exhausted.
    MaxIter,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::Criticality => "criticality",
            TerminationReason::SmallStepsize => "small_stepsize",
            TerminationReason::MaxIter => "max_iter",
        }
    }
}

/// One accepted iteration, as recorded when history logging is on.
#[derive(Clone, Debug)]
pub struct HistoryRecord {
    pub k: usize,
    pub obj_before: f64,
    pub obj_after: f64,
    /// `||u^k - x^k||`
    pub step_norm: f64,
    pub beta: f64,
    pub tau: f64,
    pub lambda: f64,
    pub backtracks: usize,
    /// Constraint value `g1(u^k)` at the subproblem solution.
    pub g_u: f64,
    /// Normalized constraint residual of the accepted iterate `x^{k+1}`.
    pub feas_residual: f64,
    /// Box membership of `x^{k+1}`.
    pub box_ok: bool,
    /// Majorant radius at the anchor `x^k` (nonconvex runs only).
    pub sigma_tilde: Option<f64>,
}

/// Outcome of a solver run.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub iterations: usize,
    pub cpu_seconds: f64,
    pub final_x: Vec<f64>,
    pub final_objective: f64,
    pub termination: TerminationReason,
    pub history: Option<Vec<HistoryRecord>>,
    /// Name of the random stream that generated the instance, when known.
    pub rng_algorithm: Option<String>,
    /// Which warm-start pipeline produced the initial point, when known.
    pub initializer: Option<String>,
}

#[inline]
pub(crate) fn clamp_beta(v: f64, cfg: &FPAConfig) -> f64 {
    v.max(cfg.beta_lo).min(cfg.beta_hi)
}

/// Initial stepsize for iteration `k >= 1`: doubled when the previous
/// iteration accepted without backtracking, otherwise restarted from the
/// accepted value; clamped either way.
pub fn beta0_update(prev_beta0: f64, prev_beta: f64, cfg: &FPAConfig) -> f64 {
    if prev_beta == prev_beta0 {
        clamp_beta(cfg.beta0_rule.growth * prev_beta0, cfg)
    } else {
        clamp_beta(prev_beta, cfg)
    }
}

/// Approximate criticality test shared by all drivers.
///
/// With `xi_u` the minimum-norm element of the subdifferential of `P2` at
/// `u^k` and `L_k` the local model constant (`2 lambda ||A||^2 + 1/beta` for
/// the ball constraint, `2 lambda ||A||^2 / gamma^2 + 1/beta` for the
/// Lorentzian), the test is
///
/// ```text
/// max{ ||xi_u - xi|| + L_k ||u - x||, 100 max{|lambda g1(u)|, g1(u)} }
///     <= tol max{||u||, 1}.
/// ```
/// `g_u` is the constraint value `g1(u^k)`, passed in because every driver
/// already has it at hand.
pub fn check_termination(inst: &ProblemInstance, st: &IterateState, g_u: f64, tol: f64) -> bool {
    let xi = (inst.objective.p2_subgrad)(&st.x);
    let xi_u = (inst.objective.p2_subgrad)(&st.u);
    let frak_l = match inst.constraint_kind {
        ConstraintKind::ConvexBall => 2.0 * st.lambda * inst.a_norm_sq() + 1.0 / st.beta,
        ConstraintKind::Lorentzian => {
            2.0 * st.lambda * inst.a_norm_sq() / (inst.gamma * inst.gamma) + 1.0 / st.beta
        }
    };
    let stationarity = norm(&sub(&xi_u, &xi)) + frak_l * norm(&sub(&st.u, &st.x));
    let feasibility = 1e2 * (st.lambda * g_u).abs().max(g_u);
    stationarity.max(feasibility) <= tol * norm(&st.u).max(1.0)
}

/// Retraction onto `{x : max_i g_i(x) <= 0}` along the segment from
/// `u_tilde` to the strictly feasible `slater` point.
///
/// Returns `(u_tilde, 0)` when already feasible. Otherwise each violated
/// constraint contributes the root of `g_i((1 - t) u_tilde + t slater) = 0`;
/// quadratic constraints use the closed-form root, others a guarded scalar
/// Newton from `t = 0`; the overall parameter is the largest of them.
pub fn retract_convex(
    u_tilde: &[f64],
    slater: &[f64],
    constraints: &[&SmoothConstraint],
) -> Result<(Vec<f64>, f64), Error> {
    let mut tau = 0.0f64;
    let mut any_violated = false;
    for g in constraints {
        let g_u = (g.eval)(u_tilde);
        if g_u <= 0.0 {
            continue;
        }
        any_violated = true;
        let tau_i = match &g.quadratic {
            Some(ls) => {
                let d0 = sub(&ls.a.matvec(u_tilde), &ls.b);
                let d1 = sub(&ls.a.matvec(slater), &ls.b);
                let delta = sub(&d1, &d0);
                let qa = dot(&delta, &delta);
                let qb = 2.0 * dot(&d0, &delta);
                let qc = dot(&d0, &d0) - ls.rhs;
                segment_quadratic_root(qa, qb, qc)?
            }
            None => segment_newton_root(g, u_tilde, slater, g_u)?,
        };
        tau = tau.max(tau_i);
    }
    if !any_violated {
        return Ok((u_tilde.to_vec(), 0.0));
    }
    Ok((lerp(u_tilde, slater, tau), tau))
}

/// Smallest root in `(0, 1)` of `qa t^2 + qb t + qc = 0` with `qc > 0` and a
/// negative value at `t = 1`.
fn segment_quadratic_root(qa: f64, qb: f64, qc: f64) -> Result<f64, Error> {
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Err(Error::RetractionRoot {
            detail: format!("negative discriminant {disc:.3e}"),
        });
    }
    let root = if qa <= f64::EPSILON * qb.abs() {
        // Effectively linear.
        -qc / qb
    } else {
        // Stable form of the smaller root (both roots are positive, qb < 0).
        2.0 * qc / (-qb + disc.sqrt())
    };
    if root.is_finite() && root > 0.0 && root < 1.0 {
        Ok(root)
    } else {
        Err(Error::RetractionRoot {
            detail: format!("root {root:.6e} outside (0, 1)"),
        })
    }
}

/// Scalar Newton for `h(t) = g((1-t) u + t slater) = 0` started at `t = 0`,
/// with a bisection fallback on `[0, 1]`. `h(0) > 0 > h(1)` by assumption.
fn segment_newton_root(
    g: &SmoothConstraint,
    u_tilde: &[f64],
    slater: &[f64],
    g_u: f64,
) -> Result<f64, Error> {
    let dir = sub(slater, u_tilde);
    let tol = 1e-10 * g_u.abs().max(1.0);
    let h = |t: f64| (g.eval)(&lerp(u_tilde, slater, t));
    let g_slater = h(1.0);
    if g_slater >= 0.0 {
        return Err(Error::RetractionRoot {
            detail: format!("anchor is not strictly feasible (g = {g_slater:.3e})"),
        });
    }

    let (mut lo, mut hi) = (0.0f64, 1.0f64); // h(lo) > 0 > h(hi)
    let mut t = 0.0f64;
    let mut h_t = g_u;
    for _ in 0..100 {
        if h_t.abs() <= tol {
            return Ok(t.clamp(f64::MIN_POSITIVE, 1.0));
        }
        if h_t > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        let slope = dot(&(g.grad)(&lerp(u_tilde, slater, t)), &dir);
        let mut next = if slope.is_finite() && slope != 0.0 {
            t - h_t / slope
        } else {
            f64::NAN
        };
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        t = next;
        h_t = h(t);
    }
    // Bisection polish.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let h_mid = h(mid);
        if h_mid.abs() <= tol {
            return Ok(mid);
        }
        if h_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RetractionRoot {
        detail: "segment root not found within iteration caps".into(),
    })
}

/// Runs the feasible method on a convex-ball instance from a feasible `x0`.
pub fn fpa_solve(inst: &ProblemInstance, x0: &[f64], cfg: &FPAConfig) -> Result<RunReport, Error> {
    if inst.constraint_kind != ConstraintKind::ConvexBall {
        return Err(Error::InvalidConfig(
            "fpa_solve expects a convex-ball instance; use fpa_nonconvex_solve instead".into(),
        ));
    }
    let g1 = inst.constraint();
    let start = Instant::now();

    let feas_scale = (inst.sigma * inst.sigma).max(1.0);
    let g_x0 = (g1.eval)(x0);
    if g_x0 > 1e-12 * feas_scale || !inst.set.contains(x0) {
        return Err(Error::InfeasibleStart {
            detail: format!(
                "g(x0) = {g_x0:.3e}, box membership = {}",
                inst.set.contains(x0)
            ),
        });
    }

    let mut x = x0.to_vec();
    let mut obj = inst.objective_value(&x);
    let mut g_x = g_x0;
    let mut warm_lambda: Option<f64> = None;
    let mut prev_beta0 = f64::NAN;
    let mut prev_beta = f64::NAN;
    let mut history = cfg.log_history.then(Vec::new);
    let mut termination = TerminationReason::MaxIter;
    let mut iterations = cfg.max_iter;

    for k in 0..cfg.max_iter {
        let xi = (inst.objective.p2_subgrad)(&x);
        let a_lin = (g1.grad)(&x);
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

            let (x_new, tau) = retract_convex(&sol.x_star, &inst.slater_point, &[&g1])?;
            let obj_new = inst.objective_value(&x_new);
            let step_norm = norm(&sub(&sol.x_star, &x));
            if obj_new <= obj - 0.5 * cfg.c * step_norm * step_norm {
                accepted = (sol, x_new, tau, obj_new, step_norm);
                break;
            }
            beta *= cfg.eta;
            backtracks += 1;
            if beta <= cfg.beta_exit {
                // Stepsize safeguard: return the last accepted iterate.
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

        let (sol, x_new, tau, obj_new, step_norm) = accepted;
        let g_new = (g1.eval)(&x_new);
        let g_u = if tau == 0.0 {
            g_new
        } else {
            (g1.eval)(&sol.x_star)
        };
        if let Some(h) = history.as_mut() {
            // For the ball constraint the normalized residual follows from
            // g = ||Ax - b||^2 - sigma^2 without another matvec.
            let res = ((g_new + inst.sigma * inst.sigma).max(0.0).sqrt() - inst.sigma) / inst.sigma;
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
                feas_residual: res,
                box_ok: inst.set.contains(&x_new),
                sigma_tilde: None,
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
        obj = obj_new;
        g_x = g_new;
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

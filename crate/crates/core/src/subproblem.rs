//! Exact solver for the per-iteration convex subproblem
//!
//! ```text
//!   min_x  P1(x) + (2 beta)^{-1} ||x - y||^2
//!   s.t.   <a, x> <= r,   max_J ||x_J|| <= M,
//! ```
//!
//! with `P1` the group LASSO penalty. For a fixed multiplier `lambda >= 0`
//! the minimizer over the box alone has the closed "shrink and clip" form
//! per block,
//!
//! ```text
//!   x_J = min{ max{1 - beta / ||w_J||, 0}, M / ||w_J|| } w_J,
//!   w_J = y_J - lambda beta a_J,
//! ```
//!
//! and the optimal multiplier is a root of the scalar monotone function
//! `T(lambda) = r - <a, x(lambda)>`. The root is found by a damped
//! semismooth Newton iteration with a bisection fallback; the slack variant
//! used by the ESQM baseline clamps the multiplier to `[0, 1/beta]`.

use crate::error::Error;
use crate::linalg::dot;
use crate::problem::GroupBoxSet;

/// Data of one subproblem instance. The prox center `y` already absorbs the
/// concave-part subgradient (`y = x^k + beta xi^k`).
pub struct SubproblemSpec<'a> {
    pub y: Vec<f64>,
    pub beta: f64,
    pub a_lin: &'a [f64],
    pub r_lin: f64,
    pub set: &'a GroupBoxSet,
}

/// Solution with its multiplier and a plug-in KKT certificate.
#[derive(Clone, Debug)]
pub struct SubproblemSolution {
    pub x_star: Vec<f64>,
    pub lambda_star: f64,
    /// Blockwise stationarity violation plus complementarity mismatch.
    pub kkt_residual: f64,
    pub newton_iters: usize,
}

/// Absolute tolerance on `|T(lambda)|` at the returned root.
pub const ROOT_TOL: f64 = 1e-10;
const NEWTON_CAP: usize = 200;
const BISECT_CAP: usize = 200;
const MIN_STEP: f64 = 1e-10;

/// Shrink-and-clip primal map at multiplier `lambda`.
pub fn group_shrink_clip(spec: &SubproblemSpec, lambda: f64) -> Vec<f64> {
    debug_assert!(lambda >= 0.0);
    let gs = &spec.set.group_structure;
    let m = spec.set.radius;
    let mut x = vec![0.0; spec.y.len()];
    for group in gs.groups() {
        let mut nrm_sq = 0.0;
        for &i in group {
            let wi = spec.y[i] - lambda * spec.beta * spec.a_lin[i];
            nrm_sq += wi * wi;
            x[i] = wi;
        }
        let nrm = nrm_sq.sqrt();
        if nrm == 0.0 {
            continue;
        }
        let factor = (1.0 - spec.beta / nrm).max(0.0).min(m / nrm);
        for &i in group {
            x[i] *= factor;
        }
    }
    x
}

/// `T(lambda) = r - <a, x(lambda)>`, the scalar dual residual whose root is
/// the optimal multiplier. Nondecreasing in `lambda`.
pub fn dual_function(spec: &SubproblemSpec, lambda: f64) -> f64 {
    dual_value_slope(spec, lambda).0
}

/// Evaluates `T` together with a generalized derivative. At the kinks of the
/// shrink/clip map the derivative of the branch on the larger-`||w||` side is
/// used; the bisection fallback makes the solve correct regardless of this
/// selection.
fn dual_value_slope(spec: &SubproblemSpec, lambda: f64) -> (f64, f64) {
    let gs = &spec.set.group_structure;
    let m = spec.set.radius;
    let beta = spec.beta;
    let mut inner = 0.0;
    let mut slope_inner = 0.0;
    for group in gs.groups() {
        let mut nrm_sq = 0.0;
        let mut aw = 0.0;
        let mut asq = 0.0;
        for &i in group {
            let ai = spec.a_lin[i];
            let wi = spec.y[i] - lambda * beta * ai;
            nrm_sq += wi * wi;
            aw += ai * wi;
            asq += ai * ai;
        }
        let nrm = nrm_sq.sqrt();
        if nrm <= beta {
            continue; // block shrunk to zero
        }
        if nrm <= m + beta {
            // shrink branch: x_J = (1 - beta/||w||) w_J
            let factor = 1.0 - beta / nrm;
            inner += factor * aw;
            slope_inner +=
                -beta * asq + beta * beta * asq / nrm - beta * beta * aw * aw / (nrm_sq * nrm);
        } else {
            // clip branch: x_J = (M/||w||) w_J
            inner += m / nrm * aw;
            slope_inner += -m * beta * (asq - aw * aw / nrm_sq) / nrm;
        }
    }
    (spec.r_lin - inner, -slope_inner)
}

/// Plug-in check of the optimality conditions: per-block prox stationarity
/// plus the complementarity product.
fn kkt_certificate(spec: &SubproblemSpec, x: &[f64], lambda: f64) -> f64 {
    let gs = &spec.set.group_structure;
    let m = spec.set.radius;
    let beta = spec.beta;
    let mut stationarity = 0.0f64;
    for group in gs.groups() {
        let mut w = Vec::with_capacity(group.len());
        let mut xg = Vec::with_capacity(group.len());
        for &i in group {
            w.push(spec.y[i] - lambda * beta * spec.a_lin[i]);
            xg.push(x[i]);
        }
        let nx = crate::linalg::norm(&xg);
        let nw = crate::linalg::norm(&w);
        if nx <= 1e-14 * nw.max(1.0) {
            // zero block: need ||w|| <= beta
            stationarity += (nw - beta).max(0.0);
        } else if nx < m * (1.0 - 1e-12) {
            // interior block: w = x + beta x / ||x||
            let mut viol = 0.0;
            for (wi, xi) in w.iter().zip(&xg) {
                let ri = wi - xi - beta * xi / nx;
                viol += ri * ri;
            }
            stationarity += viol.sqrt();
        } else {
            // boundary block: w = c x with c >= 1 + beta / M
            let c = dot(&w, &xg) / (nx * nx);
            let mut viol = 0.0;
            for (wi, xi) in w.iter().zip(&xg) {
                let ri = wi - c * xi;
                viol += ri * ri;
            }
            stationarity += viol.sqrt() + (1.0 + beta / m - c).max(0.0) * m;
        }
    }
    let compl = lambda * (dot(spec.a_lin, x) - spec.r_lin);
    stationarity + compl.abs()
}

/// Once `|T|` is below tolerance, nudge the multiplier onto the side where
/// the primal point satisfies the linearized constraint (`T >= 0`). Without
/// this, a root approached from the left leaves a constant ~`ROOT_TOL`
/// infeasibility in every subproblem solution, which the retraction then
/// has to pay for at every stepsize.
fn polish_to_feasible_side(
    spec: &SubproblemSpec,
    lambda: f64,
    hi_hint: Option<f64>,
    evals: &mut usize,
) -> f64 {
    let t = dual_function(spec, lambda);
    *evals += 1;
    if t >= 0.0 {
        return lambda;
    }
    let mut lo = lambda;
    let mut hi = match hi_hint {
        Some(h) if h > lambda => h,
        _ => {
            let mut step = lambda.max(1.0) * 1e-9;
            let mut h = lambda + step;
            let mut guard = 0;
            while dual_function(spec, h) < 0.0 {
                *evals += 1;
                step *= 2.0;
                h = lambda + step;
                guard += 1;
                if guard > 200 {
                    return lambda;
                }
            }
            *evals += 1;
            h
        }
    };
    for _ in 0..200 {
        if dual_function(spec, hi) <= ROOT_TOL {
            *evals += 1;
            return hi;
        }
        *evals += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if dual_function(spec, mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        *evals += 1;
    }
    hi
}

/// Root finding for `T` on `[0, cap]` (or `[0, inf)` when `cap` is `None`).
/// Assumes `T(0) < 0`, and `T(cap) >= 0` when a cap is given. The returned
/// multiplier satisfies `0 <= T(lambda) <= ROOT_TOL`, so the primal point is
/// feasible for the linearized constraint.
fn find_root(
    spec: &SubproblemSpec,
    warm: Option<f64>,
    cap: Option<f64>,
) -> Result<(f64, usize), Error> {
    let clamp = |l: f64| -> f64 {
        let l = l.max(0.0);
        match cap {
            Some(c) => l.min(c),
            None => l,
        }
    };

    let mut lambda = clamp(warm.unwrap_or(0.0));
    let mut iters = 0usize;

    // Bracket endpoints observed so far: T(lo) < 0 <= T(hi).
    let mut lo = 0.0f64;
    let mut hi: Option<f64> = cap;

    let mut newton_failed = false;
    for _ in 0..NEWTON_CAP {
        let (t_val, slope) = dual_value_slope(spec, lambda);
        iters += 1;
        if t_val.abs() <= ROOT_TOL {
            let polished = polish_to_feasible_side(spec, lambda, hi, &mut iters);
            return Ok((polished, iters));
        }
        if t_val < 0.0 {
            lo = lo.max(lambda);
        } else {
            hi = Some(hi.map_or(lambda, |h| h.min(lambda)));
        }
        // Regularized semismooth Newton direction.
        let reg = 1e-4 * t_val.abs().sqrt();
        let denom = slope + reg;
        if !denom.is_finite() || denom <= 0.0 {
            newton_failed = true;
            break;
        }
        let dir = -t_val / denom;
        // Backtrack until the residual decreases sufficiently.
        let mut alpha = 1.0f64;
        let mut accepted = None;
        while alpha >= MIN_STEP {
            let trial = clamp(lambda + alpha * dir);
            let t_trial = dual_function(spec, trial);
            iters += 1;
            if t_trial.abs() <= (1.0 - 1e-4 * alpha) * t_val.abs() {
                accepted = Some((trial, t_trial));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, t_trial)) => {
                if t_trial < 0.0 {
                    lo = lo.max(trial);
                } else {
                    hi = Some(hi.map_or(trial, |h| h.min(trial)));
                }
                lambda = trial;
            }
            None => {
                newton_failed = true;
                break;
            }
        }
    }

    let _ = newton_failed;
    // Bisection fallback on a bracketing interval.
    let mut hi = match hi {
        Some(h) => h,
        None => {
            let mut h = lambda.max(1.0);
            let mut t_h = dual_function(spec, h);
            let mut doublings = 0;
            while t_h < 0.0 {
                doublings += 1;
                if doublings > 100 {
                    return Err(Error::DualRootBracket {
                        lambda_lo: lo,
                        t_lo: dual_function(spec, lo),
                        lambda_hi: h,
                        t_hi: t_h,
                    });
                }
                lo = lo.max(h);
                h *= 2.0;
                t_h = dual_function(spec, h);
            }
            h
        }
    };

    for _ in 0..BISECT_CAP {
        let mid = 0.5 * (lo + hi);
        let t_mid = dual_function(spec, mid);
        iters += 1;
        if t_mid.abs() <= ROOT_TOL {
            let polished = polish_to_feasible_side(spec, mid, Some(hi), &mut iters);
            return Ok((polished, iters));
        }
        if t_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            // Interval exhausted at floating-point resolution; keep the
            // feasible-side endpoint.
            return Ok((hi, iters));
        }
    }
    Err(Error::DualRootBracket {
        lambda_lo: lo,
        t_lo: dual_function(spec, lo),
        lambda_hi: hi,
        t_hi: dual_function(spec, hi),
    })
}

/// Solves the linearized proximal subproblem. `warm` is a multiplier hint
/// from a previous solve; passing `None` starts at zero.
pub fn solve_linearized_prox(
    spec: &SubproblemSpec,
    warm: Option<f64>,
) -> Result<SubproblemSolution, Error> {
    let x0 = group_shrink_clip(spec, 0.0);
    if dot(spec.a_lin, &x0) <= spec.r_lin {
        let kkt = kkt_certificate(spec, &x0, 0.0);
        return Ok(SubproblemSolution {
            x_star: x0,
            lambda_star: 0.0,
            kkt_residual: kkt,
            newton_iters: 0,
        });
    }
    let (lambda, iters) = find_root(spec, warm, None)?;
    let x = group_shrink_clip(spec, lambda);
    let kkt = kkt_certificate(spec, &x, lambda);
    Ok(SubproblemSolution {
        x_star: x,
        lambda_star: lambda,
        kkt_residual: kkt,
        newton_iters: iters,
    })
}

/// Slack-augmented variant used by the ESQM baseline:
///
/// ```text
///   min  P1(x) + s / beta + (2 beta)^{-1} ||x - y||^2
///   s.t. <a, x> - r <= s,  s >= 0,  x in box,
/// ```
///
/// whose multiplier is confined to `[0, 1/beta]`. Returns the solution and
/// the optimal slack `s* = max{<a, x*> - r, 0}`; the slack is positive only
/// when the multiplier sits at the `1/beta` bound.
pub fn solve_esqm_subproblem(
    spec: &SubproblemSpec,
    warm: Option<f64>,
) -> Result<(SubproblemSolution, f64), Error> {
    let x0 = group_shrink_clip(spec, 0.0);
    if dot(spec.a_lin, &x0) <= spec.r_lin {
        let kkt = kkt_certificate(spec, &x0, 0.0);
        let sol = SubproblemSolution {
            x_star: x0,
            lambda_star: 0.0,
            kkt_residual: kkt,
            newton_iters: 0,
        };
        return Ok((sol, 0.0));
    }

    let cap = 1.0 / spec.beta;
    let t_cap = dual_function(spec, cap);
    if t_cap < 0.0 {
        // No root below the bound: the multiplier saturates and the slack
        // absorbs the remaining violation.
        let x = group_shrink_clip(spec, cap);
        let slack = dot(spec.a_lin, &x) - spec.r_lin;
        let kkt = kkt_stationarity_only(spec, &x, cap);
        let sol = SubproblemSolution {
            x_star: x,
            lambda_star: cap,
            kkt_residual: kkt,
            newton_iters: 1,
        };
        return Ok((sol, slack.max(0.0)));
    }

    let (lambda, iters) = find_root(spec, warm.map(|w| w.min(cap)), Some(cap))?;
    let x = group_shrink_clip(spec, lambda);
    let kkt = kkt_certificate(spec, &x, lambda);
    let sol = SubproblemSolution {
        x_star: x,
        lambda_star: lambda,
        kkt_residual: kkt,
        newton_iters: iters,
    };
    Ok((sol, 0.0))
}

/// Certificate for the saturated ESQM case: complementarity is taken against
/// the slack (`<a, x> - r - s = 0` by construction), so only stationarity
/// remains.
fn kkt_stationarity_only(spec: &SubproblemSpec, x: &[f64], lambda: f64) -> f64 {
    let full = kkt_certificate(spec, x, lambda);
    let compl = lambda * (dot(spec.a_lin, x) - spec.r_lin);
    full - compl.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm, sub};
    use crate::problem::GroupStructure;
    use crate::rng::{seeded_rng, standard_normal_vec};
    use std::sync::Arc;

    fn box_set(n: usize, block: usize, radius: f64) -> GroupBoxSet {
        GroupBoxSet::new(
            Arc::new(GroupStructure::contiguous_blocks(n, block).unwrap()),
            radius,
        )
    }

    #[test]
    fn shrink_clip_branches_by_hand() {
        let set = box_set(2, 2, 10.0);
        let a = vec![0.0, 0.0];
        let spec = SubproblemSpec {
            y: vec![3.0, 4.0],
            beta: 1.0,
            a_lin: &a,
            r_lin: 0.0,
            set: &set,
        };
        let x = group_shrink_clip(&spec, 0.0);
        assert!((x[0] - 2.4).abs() < 1e-15);
        assert!((x[1] - 3.2).abs() < 1e-15);

        // Clip branch: ||w|| = 50, factor = min{0.98, 5/50} = 0.1.
        let set = box_set(2, 2, 5.0);
        let spec = SubproblemSpec {
            y: vec![30.0, 40.0],
            beta: 1.0,
            a_lin: &a,
            r_lin: 0.0,
            set: &set,
        };
        let x = group_shrink_clip(&spec, 0.0);
        assert!((x[0] - 3.0).abs() < 1e-12);
        assert!((x[1] - 4.0).abs() < 1e-12);

        // Shrink-to-zero branch: ||w|| <= beta.
        let spec = SubproblemSpec {
            y: vec![0.3, 0.4],
            beta: 1.0,
            a_lin: &a,
            r_lin: 0.0,
            set: &set,
        };
        assert_eq!(group_shrink_clip(&spec, 0.0), vec![0.0, 0.0]);
    }

    #[test]
    fn dual_function_with_zero_normal_is_constant() {
        let set = box_set(4, 2, 2.0);
        let a = vec![0.0; 4];
        let spec = SubproblemSpec {
            y: vec![1.0, -2.0, 0.5, 3.0],
            beta: 0.7,
            a_lin: &a,
            r_lin: -1.25,
            set: &set,
        };
        for lambda in [0.0, 0.5, 3.0, 100.0] {
            assert_eq!(dual_function(&spec, lambda), -1.25);
        }
    }

    #[test]
    fn dual_function_matches_primal_reevaluation() {
        let mut rng = seeded_rng(31);
        let set = box_set(8, 2, 1.5);
        let a = standard_normal_vec(&mut rng, 8);
        let spec = SubproblemSpec {
            y: standard_normal_vec(&mut rng, 8),
            beta: 0.6,
            a_lin: &a,
            r_lin: 0.3,
            set: &set,
        };
        for k in 0..60 {
            let lambda = 0.1 * k as f64;
            let direct = dual_function(&spec, lambda);
            let via_primal = spec.r_lin - dot(&a, &group_shrink_clip(&spec, lambda));
            assert!((direct - via_primal).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn dual_function_is_nondecreasing() {
        let mut rng = seeded_rng(37);
        for trial in 0..50 {
            let set = box_set(6, 3, 0.9);
            let a = standard_normal_vec(&mut rng, 6);
            let spec = SubproblemSpec {
                y: standard_normal_vec(&mut rng, 6),
                beta: 0.2 + 0.3 * (trial % 5) as f64,
                a_lin: &a,
                r_lin: 0.0,
                set: &set,
            };
            let mut prev = f64::NEG_INFINITY;
            for k in 0..200 {
                let t = dual_function(&spec, 0.05 * k as f64);
                assert!(t >= prev - 1e-12, "T must be nondecreasing");
                prev = t;
            }
        }
    }

    #[test]
    fn shrink_clip_is_continuous_in_lambda() {
        let mut rng = seeded_rng(41);
        let set = box_set(6, 2, 1.1);
        let a = standard_normal_vec(&mut rng, 6);
        let spec = SubproblemSpec {
            y: standard_normal_vec(&mut rng, 6),
            beta: 0.8,
            a_lin: &a,
            r_lin: 0.0,
            set: &set,
        };
        for k in 0..300 {
            let lambda = 0.02 * k as f64;
            let x0 = group_shrink_clip(&spec, lambda);
            let x1 = group_shrink_clip(&spec, lambda + 1e-9);
            assert!(norm(&sub(&x1, &x0)) <= 1e-6);
        }
    }

    #[test]
    fn inactive_constraint_returns_prox_point() {
        let set = box_set(4, 2, 2.0);
        let a = vec![1.0, 0.0, 0.0, 0.0];
        let spec = SubproblemSpec {
            y: vec![0.5, 0.5, 3.0, 0.0],
            beta: 0.25,
            a_lin: &a,
            r_lin: 10.0,
            set: &set,
        };
        let sol = solve_linearized_prox(&spec, None).unwrap();
        assert_eq!(sol.lambda_star, 0.0);
        assert_eq!(sol.x_star, group_shrink_clip(&spec, 0.0));
        assert!(sol.kkt_residual <= 1e-10);
    }

    #[test]
    fn one_dimensional_case_analysis() {
        // groups = {0}, y = 2, beta = 1, M = 10, a = 1, r = 0. The prox point
        // at lambda = 0 is 1 > r, so the root finder runs; every lambda in
        // [1, 3] is a valid multiplier and all give x* = 0.
        let set = box_set(1, 1, 10.0);
        let a = vec![1.0];
        let spec = SubproblemSpec {
            y: vec![2.0],
            beta: 1.0,
            a_lin: &a,
            r_lin: 0.0,
            set: &set,
        };
        let sol = solve_linearized_prox(&spec, None).unwrap();
        assert!(sol.x_star[0].abs() <= 1e-10);
        assert!(dual_function(&spec, sol.lambda_star).abs() <= ROOT_TOL);
        assert!((1.0 - 1e-8..=3.0 + 1e-8).contains(&sol.lambda_star));
        // Complementarity: lambda* (<a, x*> - r) = 0.
        assert!((sol.lambda_star * (dot(&a, &sol.x_star) - spec.r_lin)).abs() <= 1e-9);
    }

    fn random_spec<'a>(
        rng: &mut rand_chacha::ChaCha8Rng,
        set: &'a GroupBoxSet,
        a: &'a mut Vec<f64>,
    ) -> SubproblemSpec<'a> {
        use rand::Rng;
        let n = set.group_structure.dim();
        *a = standard_normal_vec(rng, n);
        SubproblemSpec {
            y: standard_normal_vec(rng, n)
                .iter()
                .map(|v| 2.0 * v)
                .collect(),
            beta: 0.05 + rng.gen::<f64>() * 2.0,
            a_lin: a,
            r_lin: -0.5 + rng.gen::<f64>(),
            set,
        }
    }

    #[test]
    fn random_specs_satisfy_kkt_and_feasibility() {
        let mut rng = seeded_rng(47);
        for trial in 0..200 {
            let set = box_set(6, if trial % 2 == 0 { 3 } else { 2 }, 0.7);
            let mut a_store = Vec::new();
            let spec = random_spec(&mut rng, &set, &mut a_store);
            let sol = solve_linearized_prox(&spec, None).unwrap();
            assert!(set.contains(&sol.x_star));
            let lin = dot(spec.a_lin, &sol.x_star);
            assert!(lin <= spec.r_lin + 1e-8 * spec.r_lin.abs().max(1.0));
            assert!((sol.lambda_star * (lin - spec.r_lin)).abs() <= 1e-8);
            assert!(
                sol.kkt_residual <= 1e-8 * norm(&sol.x_star).max(1.0),
                "kkt residual {} too large",
                sol.kkt_residual
            );
        }
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let mut rng = seeded_rng(53);
        for _ in 0..100 {
            let set = box_set(6, 2, 0.8);
            let mut a_store = Vec::new();
            let spec = random_spec(&mut rng, &set, &mut a_store);
            let cold = solve_linearized_prox(&spec, None).unwrap();
            for warm in [0.0, 0.3, 5.0, cold.lambda_star * 0.9] {
                let w = solve_linearized_prox(&spec, Some(warm)).unwrap();
                assert!(norm(&sub(&w.x_star, &cold.x_star)) <= 1e-8 * norm(&cold.x_star).max(1.0));
            }
        }
    }

    #[test]
    fn strong_convexity_optimality_gap() {
        // For the 1-strongly-convex objective f(x) = beta P1(x) + 0.5||x-y||^2,
        // any feasible z satisfies f(z) >= f(x*) + 0.5 ||z - x*||^2.
        let mut rng = seeded_rng(59);
        let set = box_set(6, 2, 0.9);
        let mut a_store = Vec::new();
        let spec = random_spec(&mut rng, &set, &mut a_store);
        let sol = solve_linearized_prox(&spec, None).unwrap();
        let f = |x: &[f64]| {
            spec.beta * set.group_structure.sum_of_group_norms(x)
                + 0.5 * dot(&sub(x, &spec.y), &sub(x, &spec.y))
        };
        let f_star = f(&sol.x_star);
        let mut tested = 0;
        while tested < 100 {
            // Feasible z: alternate projections, then verify exactly.
            let mut z = standard_normal_vec(&mut rng, 6);
            for _ in 0..80 {
                z = crate::problem::project_group_box(&set, &z);
                let viol = dot(spec.a_lin, &z) - spec.r_lin;
                if viol > 0.0 {
                    let asq = dot(spec.a_lin, spec.a_lin);
                    for (zi, ai) in z.iter_mut().zip(spec.a_lin) {
                        *zi -= viol / asq * ai;
                    }
                }
            }
            if !set.contains(&z) || dot(spec.a_lin, &z) > spec.r_lin + 1e-12 {
                continue;
            }
            tested += 1;
            let gap = f(&z) - f_star;
            let dist_sq = dot(&sub(&z, &sol.x_star), &sub(&z, &sol.x_star));
            assert!(
                gap >= 0.5 * dist_sq - 1e-8,
                "gap {gap} vs 0.5 d^2 {}",
                0.5 * dist_sq
            );
        }
    }

    #[test]
    fn esqm_inactive_matches_plain_solver() {
        let set = box_set(4, 2, 2.0);
        let a = vec![0.2, -0.1, 0.4, 0.3];
        let spec = SubproblemSpec {
            y: vec![0.5, 0.5, -0.25, 0.1],
            beta: 0.5,
            a_lin: &a,
            r_lin: 5.0,
            set: &set,
        };
        let plain = solve_linearized_prox(&spec, None).unwrap();
        let (sol, slack) = solve_esqm_subproblem(&spec, None).unwrap();
        assert_eq!(slack, 0.0);
        assert_eq!(sol.lambda_star, 0.0);
        assert_eq!(sol.x_star, plain.x_star);
    }

    #[test]
    fn esqm_saturated_multiplier_produces_positive_slack() {
        // A weak normal pushes the unclamped root far beyond 1/beta: the
        // shrink kills the a-aligned component only near lambda = 30.
        let set = box_set(2, 2, 5.0);
        let a = vec![0.1, 0.0];
        let spec = SubproblemSpec {
            y: vec![4.0, 0.0],
            beta: 1.0,
            a_lin: &a,
            r_lin: 0.0,
            set: &set,
        };
        let unclamped = solve_linearized_prox(&spec, None).unwrap();
        assert!(unclamped.lambda_star > 1.0 / spec.beta);
        let (sol, slack) = solve_esqm_subproblem(&spec, None).unwrap();
        assert!((sol.lambda_star - 1.0 / spec.beta).abs() <= 1e-12);
        let lin = dot(&a, &sol.x_star) - spec.r_lin;
        assert!(slack > 0.0);
        assert!((slack - lin).abs() <= 1e-12);
        // Slack stationarity: 0 in 1/beta - lambda + N_{R+}(s) with s > 0
        // forces lambda = 1/beta exactly, which was asserted above.
    }

    #[test]
    fn esqm_interior_root_has_zero_slack() {
        let mut rng = seeded_rng(61);
        let mut found = 0;
        for _ in 0..300 {
            let set = box_set(6, 2, 0.8);
            let mut a_store = Vec::new();
            let spec = random_spec(&mut rng, &set, &mut a_store);
            let (sol, slack) = solve_esqm_subproblem(&spec, None).unwrap();
            let cap = 1.0 / spec.beta;
            if sol.lambda_star > 0.0 && sol.lambda_star < cap * (1.0 - 1e-9) {
                assert_eq!(slack, 0.0);
                assert!(dual_function(&spec, sol.lambda_star).abs() <= ROOT_TOL);
                found += 1;
            }
        }
        assert!(found > 10, "case split never exercised the interior root");
    }
}

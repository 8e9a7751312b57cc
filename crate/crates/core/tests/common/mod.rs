//! Brute-force oracles and small statistics helpers shared by the
//! integration tests. Everything here solves the same problems as the crate
//! by a different route: 1-D ternary searches instead of the closed-form
//! shrink/clip map, bisection on independently evaluated dual values instead
//! of semismooth Newton, and long-run projected subgradient descent with
//! Dykstra projections instead of any dual reasoning at all.

#![allow(dead_code)]

use dcfpa::problem::GroupBoxSet;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Data of one subproblem, mirroring the solver input but owned.
#[derive(Clone)]
pub struct OracleSpec {
    pub y: Vec<f64>,
    pub beta: f64,
    pub a: Vec<f64>,
    pub r: f64,
    pub radius: f64,
    pub groups: Vec<Vec<usize>>,
}

impl OracleSpec {
    pub fn from_parts(y: Vec<f64>, beta: f64, a: Vec<f64>, r: f64, set: &GroupBoxSet) -> Self {
        Self {
            y,
            beta,
            a,
            r,
            radius: set.radius,
            groups: set.group_structure.groups().to_vec(),
        }
    }

    /// Subproblem objective `P1(x) + ||x - y||^2 / (2 beta)`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let p1: f64 = self
            .groups
            .iter()
            .map(|g| g.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt())
            .sum();
        p1 + dist(x, &self.y).powi(2) / (2.0 * self.beta)
    }

    pub fn in_box(&self, x: &[f64], slack: f64) -> bool {
        self.groups.iter().all(|g| {
            g.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt() <= self.radius * (1.0 + slack)
        })
    }
}

/// Minimizes `beta t + (||w|| - t)^2 / 2` over `t` in `[0, radius]` by
/// ternary search (the function is strictly convex), then scales `w`
/// radially. This reproduces the per-block prox without using its closed
/// form.
fn block_prox_ternary(w: &[f64], beta: f64, radius: f64) -> Vec<f64> {
    let nw = norm(w);
    if nw == 0.0 {
        return vec![0.0; w.len()];
    }
    let q = |t: f64| beta * t + 0.5 * (nw - t) * (nw - t);
    let (mut lo, mut hi) = (0.0f64, radius);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if q(m1) <= q(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t = 0.5 * (lo + hi);
    w.iter().map(|&wi| t * wi / nw).collect()
}

/// Primal point at a fixed multiplier, assembled blockwise from the ternary
/// prox.
pub fn oracle_primal_at(spec: &OracleSpec, lambda: f64) -> Vec<f64> {
    let n = spec.y.len();
    let mut x = vec![0.0; n];
    for g in &spec.groups {
        let w: Vec<f64> = g
            .iter()
            .map(|&i| spec.y[i] - lambda * spec.beta * spec.a[i])
            .collect();
        let xg = block_prox_ternary(&w, spec.beta, spec.radius);
        for (slot, &i) in g.iter().enumerate() {
            x[i] = xg[slot];
        }
    }
    x
}

/// Grid/bisection dual oracle: finds the multiplier by sign change of
/// `<a, x(lambda)> - r` with the independently evaluated primal map.
pub fn grid_dual_oracle(spec: &OracleSpec) -> (Vec<f64>, f64) {
    let violation = |lambda: f64| dot(&spec.a, &oracle_primal_at(spec, lambda)) - spec.r;
    if violation(0.0) <= 0.0 {
        return (oracle_primal_at(spec, 0.0), 0.0);
    }
    let mut hi = 1.0f64;
    let mut guard = 0;
    while violation(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        assert!(guard < 100, "oracle failed to bracket the multiplier");
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if violation(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    (oracle_primal_at(spec, lambda), lambda)
}

/// Exact radial projection onto the group box.
fn project_box_oracle(spec: &OracleSpec, x: &[f64]) -> Vec<f64> {
    let mut z = x.to_vec();
    for g in &spec.groups {
        let nrm = g.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
        if nrm > spec.radius {
            for &i in g {
                z[i] = x[i] * spec.radius / nrm;
            }
        }
    }
    z
}

/// Dykstra alternating projections onto (box intersect halfspace).
fn project_intersection(spec: &OracleSpec, x0: &[f64], rounds: usize) -> Vec<f64> {
    let n = x0.len();
    let asq = dot(&spec.a, &spec.a);
    let mut x = x0.to_vec();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for _ in 0..rounds {
        let xp: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        let y = project_box_oracle(spec, &xp);
        for i in 0..n {
            p[i] = xp[i] - y[i];
        }
        let yq: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a + b).collect();
        let viol = dot(&spec.a, &yq) - spec.r;
        let z: Vec<f64> = if viol > 0.0 && asq > 0.0 {
            yq.iter()
                .zip(&spec.a)
                .map(|(v, ai)| v - viol / asq * ai)
                .collect()
        } else {
            yq.clone()
        };
        for i in 0..n {
            q[i] = yq[i] - z[i];
        }
        x = z;
    }
    x
}

/// Long-run projected subgradient on the primal: the objective is
/// 1-strongly convex after scaling, so steps `2 / (k + 2)` with best-point
/// tracking reach a few digits in 10^6 iterations. No dual reasoning and no
/// closed forms are used.
pub fn projected_subgradient_oracle(spec: &OracleSpec, iters: usize) -> Vec<f64> {
    let n = spec.y.len();
    let scaled_beta = spec.beta;
    // Work with f(x) = beta P1(x) + 0.5 ||x - y||^2 (strong convexity 1).
    let p1 = |x: &[f64]| -> f64 {
        spec.groups
            .iter()
            .map(|g| g.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt())
            .sum()
    };
    let f = |x: &[f64]| scaled_beta * p1(x) + 0.5 * dist(x, &spec.y).powi(2);
    let mut x = project_intersection(spec, &vec![0.0; n], 50);
    let mut best = x.clone();
    let mut best_f = f64::INFINITY;
    for k in 0..iters {
        // Subgradient of beta P1 + 0.5 ||x - y||^2.
        let mut g: Vec<f64> = x.iter().zip(&spec.y).map(|(xi, yi)| xi - yi).collect();
        for grp in &spec.groups {
            let nrm = grp.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt();
            if nrm > 0.0 {
                for &i in grp {
                    g[i] += scaled_beta * x[i] / nrm;
                }
            }
        }
        let step = 2.0 / (k as f64 + 2.0);
        let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
        x = project_intersection(spec, &trial, 25);
        let fx = f(&x);
        let feasible =
            spec.in_box(&x, 1e-9) && dot(&spec.a, &x) <= spec.r + 1e-9 * spec.r.abs().max(1.0);
        if feasible && fx < best_f {
            best_f = fx;
            best = x.clone();
        }
    }
    best
}

/// Brute-force oracle for the slack-augmented subproblem. Eliminating the
/// slack gives a value function whose derivative in `s` is
/// `1/beta - lambda(s)`, with `lambda(s)` the inner multiplier at the
/// shifted level `r + s`; `lambda(s)` is nonincreasing, so the optimal slack
/// is found by bisection on it. The inner solves use only the independent
/// grid machinery; comparing multipliers instead of near-equal objective
/// values keeps the search well above floating-point noise.
pub fn esqm_grid_oracle(spec: &OracleSpec) -> (Vec<f64>, f64, f64) {
    let solve_at = |s: f64| -> (Vec<f64>, f64) {
        let mut shifted = spec.clone();
        shifted.r = spec.r + s;
        grid_dual_oracle(&shifted)
    };
    let cap = 1.0 / spec.beta;
    let (x0, lambda0) = solve_at(0.0);
    if lambda0 <= cap {
        return (x0, lambda0, 0.0);
    }
    // lambda(0) > 1/beta: slack grows until the multiplier falls to 1/beta.
    // Beyond the violation of the free prox point the constraint is slack
    // and lambda = 0 < 1/beta, so this brackets the crossing.
    let x_free = oracle_primal_at(spec, 0.0);
    let mut hi = (dot(&spec.a, &x_free) - spec.r).max(0.0) + 1.0;
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (_, lambda) = solve_at(mid);
        if lambda > cap {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    let (x, lambda) = solve_at(s);
    (x, lambda, s)
}

/// Least-squares fit `y = a + b x`; returns `(slope, r_squared)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let pred = my + slope * (p.0 - mx);
            (p.1 - pred) * (p.1 - pred)
        })
        .sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (slope, r2)
}

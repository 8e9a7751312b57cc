//! Abstract model of the constrained DC program: a difference-of-convex
//! objective `P1 - P2`, smooth inequality constraints with known gradient
//! Lipschitz moduli, a compact group-norm box with cheap projection, and a
//! strictly feasible anchor point used for retraction.
//!
//! Oracles are plain boxed closures so problems beyond the two shipped
//! compressed-sensing families can be plugged in; the shipped instances are
//! built by the generators in [`crate::instance`].

use std::sync::Arc;

use crate::error::Error;
use crate::linalg::{dot, norm, sub, DenseMatrix};
use crate::loss::{ell_eval, ell_grad, lipschitz_ell, PhiFunction};

pub type ValueOracle = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorOracle = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Partition of the coordinate indices `{0..n}` into disjoint nonempty
/// groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupStructure {
    n: usize,
    groups: Vec<Vec<usize>>,
}

impl GroupStructure {
    /// Contiguous blocks of a fixed size; `n` must be divisible by
    /// `block_size`.
    pub fn contiguous_blocks(n: usize, block_size: usize) -> Result<Self, Error> {
        if block_size == 0 || n == 0 || !n.is_multiple_of(block_size) {
            return Err(Error::DegenerateDimensions {
                detail: format!("cannot split {n} coordinates into blocks of {block_size}"),
            });
        }
        let groups = (0..n / block_size)
            .map(|g| (g * block_size..(g + 1) * block_size).collect())
            .collect();
        Ok(Self { n, groups })
    }

    /// Pairs `{i, i + half}` over `2 * half` coordinates; this is the group
    /// layout that ties the real and imaginary parts of an embedded complex
    /// coordinate together.
    pub fn paired(half: usize) -> Result<Self, Error> {
        if half == 0 {
            return Err(Error::DegenerateDimensions {
                detail: "empty pairing".into(),
            });
        }
        let groups = (0..half).map(|i| vec![i, i + half]).collect();
        Ok(Self {
            n: 2 * half,
            groups,
        })
    }

    /// Arbitrary groups; validates that they partition `{0..n}`.
    pub fn from_groups(n: usize, groups: Vec<Vec<usize>>) -> Result<Self, Error> {
        let mut seen = vec![false; n];
        let mut count = 0usize;
        for g in &groups {
            if g.is_empty() {
                return Err(Error::DegenerateDimensions {
                    detail: "empty group".into(),
                });
            }
            for &i in g {
                if i >= n || seen[i] {
                    return Err(Error::DegenerateDimensions {
                        detail: format!("index {i} repeated or out of range"),
                    });
                }
                seen[i] = true;
                count += 1;
            }
        }
        if count != n {
            return Err(Error::DegenerateDimensions {
                detail: format!("groups cover {count} of {n} coordinates"),
            });
        }
        Ok(Self { n, groups })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Euclidean norm of the subvector `x_J`.
    pub fn group_norm(&self, x: &[f64], g: usize) -> f64 {
        self.groups[g]
            .iter()
            .map(|&i| x[i] * x[i])
            .sum::<f64>()
            .sqrt()
    }

    /// `sum_J ||x_J||`, the group LASSO penalty.
    pub fn sum_of_group_norms(&self, x: &[f64]) -> f64 {
        crate::linalg::compensated_sum((0..self.groups.len()).map(|g| self.group_norm(x, g)))
    }

    /// `max_J ||x_J||`.
    pub fn max_group_norm(&self, x: &[f64]) -> f64 {
        (0..self.groups.len())
            .map(|g| self.group_norm(x, g))
            .fold(0.0, f64::max)
    }
}

/// DC objective `P(x) = P1(x) - P2(x)` with a subgradient selection for the
/// concave part.
pub struct DCObjective {
    pub p1_eval: ValueOracle,
    pub p2_eval: ValueOracle,
    /// Returns some element of the convex subdifferential of `P2`.
    pub p2_subgrad: VectorOracle,
    pub group_structure: Arc<GroupStructure>,
    pub mu: f64,
}

impl DCObjective {
    /// The shipped objective `sum_J ||x_J|| - mu ||x||`. The subgradient of
    /// `mu ||.||` at the origin is selected as 0, which is the canonical
    /// (minimum-norm) element.
    pub fn group_lasso_minus_norm(groups: Arc<GroupStructure>, mu: f64) -> Self {
        assert!(mu >= 0.0);
        let g1 = Arc::clone(&groups);
        let p1_eval: ValueOracle = Box::new(move |x| g1.sum_of_group_norms(x));
        let p2_eval: ValueOracle = Box::new(move |x| mu * norm(x));
        let p2_subgrad: VectorOracle = Box::new(move |x| {
            let nx = norm(x);
            if nx == 0.0 {
                vec![0.0; x.len()]
            } else {
                x.iter().map(|&xi| mu * xi / nx).collect()
            }
        });
        Self {
            p1_eval,
            p2_eval,
            p2_subgrad,
            group_structure: groups,
            mu,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.p1_eval)(x) - (self.p2_eval)(x)
    }
}

/// Quadratic constraint data `g(x) = ||Ax - b||^2 - rhs`, kept alongside the
/// generic oracles so retractions can solve `g = 0` along segments in closed
/// form.
#[derive(Clone)]
pub struct LeastSquaresForm {
    pub a: Arc<DenseMatrix>,
    pub b: Vec<f64>,
    pub rhs: f64,
}

/// Smooth inequality constraint `g(x) <= 0` with gradient oracle and a
/// Lipschitz modulus for the gradient on the box.
pub struct SmoothConstraint {
    pub eval: ValueOracle,
    pub grad: VectorOracle,
    pub grad_lipschitz: f64,
    /// Present when `g` is a squared residual, enabling closed-form
    /// retraction roots.
    pub quadratic: Option<LeastSquaresForm>,
}

/// Compact convex set `{x : max_J ||x_J|| <= radius}`.
#[derive(Clone, Debug)]
pub struct GroupBoxSet {
    pub group_structure: Arc<GroupStructure>,
    pub radius: f64,
}

impl GroupBoxSet {
    pub fn new(group_structure: Arc<GroupStructure>, radius: f64) -> Self {
        assert!(radius > 0.0, "box radius must be positive");
        Self {
            group_structure,
            radius,
        }
    }

    /// Membership with a `1e-12` relative slack for floating-point noise.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.group_structure.max_group_norm(x) <= self.radius * (1.0 + 1e-12)
    }
}

/// Blockwise radial projection onto the group box: each block is scaled by
/// `min(1, radius / ||y_J||)`.
pub fn project_group_box(set: &GroupBoxSet, y: &[f64]) -> Vec<f64> {
    let mut z = y.to_vec();
    for g in 0..set.group_structure.num_groups() {
        let nrm = set.group_structure.group_norm(y, g);
        if nrm > set.radius {
            let s = set.radius / nrm;
            for &i in &set.group_structure.groups()[g] {
                z[i] = y[i] * s;
            }
        }
    }
    z
}

/// Which feasibility model the single inequality constraint follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `||Ax - b||^2 <= sigma^2`
    ConvexBall,
    /// `sum_i log(1 + (Ax - b)_i^2 / gamma^2) <= sigma`
    Lorentzian,
}

/// A fully assembled problem: data, oracles, constraint, box and anchor.
pub struct ProblemInstance {
    pub a: Arc<DenseMatrix>,
    pub b: Vec<f64>,
    pub objective: DCObjective,
    pub constraint_kind: ConstraintKind,
    /// `sigma` for the convex ball (the radius, not its square) or the
    /// Lorentzian budget.
    pub sigma: f64,
    /// Lorentzian scale; unused for the convex ball.
    pub gamma: f64,
    pub set: GroupBoxSet,
    pub slater_point: Vec<f64>,
    pub ground_truth: Option<Vec<f64>>,
    /// `||A||^2`, cached once; consumed by the termination test.
    a_norm_sq: f64,
}

impl ProblemInstance {
    /// Assembles a convex-ball instance and validates the anchor: it must lie
    /// in the box and satisfy `||A slater - b|| < sigma` strictly.
    #[allow(clippy::too_many_arguments)]
    pub fn convex_ball(
        a: Arc<DenseMatrix>,
        b: Vec<f64>,
        sigma: f64,
        groups: Arc<GroupStructure>,
        mu: f64,
        radius: f64,
        slater_point: Vec<f64>,
        ground_truth: Option<Vec<f64>>,
    ) -> Result<Self, Error> {
        assert!(sigma > 0.0);
        let set = GroupBoxSet::new(Arc::clone(&groups), radius);
        if !set.contains(&slater_point) {
            return Err(Error::InfeasibleStart {
                detail: "anchor outside the box".into(),
            });
        }
        let anchor_res = norm(&sub(&a.matvec(&slater_point), &b));
        if anchor_res >= sigma {
            return Err(Error::InfeasibleStart {
                detail: format!(
                    "anchor residual {anchor_res:.3e} not strictly below sigma {sigma:.3e}"
                ),
            });
        }
        let objective = DCObjective::group_lasso_minus_norm(groups, mu);
        let a_norm_sq = crate::linalg::spectral_norm(&a, 1e-8).powi(2);
        Ok(Self {
            a,
            b,
            objective,
            constraint_kind: ConstraintKind::ConvexBall,
            sigma,
            gamma: 0.0,
            set,
            slater_point,
            ground_truth,
            a_norm_sq,
        })
    }

    /// Assembles a Lorentzian instance; the anchor must interpolate,
    /// `A slater = b`, which is stronger than plain strict feasibility and is
    /// what collapses retraction segments to a single scalar quadratic.
    #[allow(clippy::too_many_arguments)]
    pub fn lorentzian(
        a: Arc<DenseMatrix>,
        b: Vec<f64>,
        sigma: f64,
        gamma: f64,
        groups: Arc<GroupStructure>,
        mu: f64,
        radius: f64,
        slater_point: Vec<f64>,
        ground_truth: Option<Vec<f64>>,
    ) -> Result<Self, Error> {
        assert!(sigma > 0.0 && gamma > 0.0);
        let set = GroupBoxSet::new(Arc::clone(&groups), radius);
        if !set.contains(&slater_point) {
            return Err(Error::InfeasibleStart {
                detail: "anchor outside the box".into(),
            });
        }
        let anchor_res = norm(&sub(&a.matvec(&slater_point), &b));
        if anchor_res > 1e-10 * norm(&b).max(1.0) {
            return Err(Error::InfeasibleStart {
                detail: format!("anchor does not interpolate: ||A slater - b|| = {anchor_res:.3e}"),
            });
        }
        let objective = DCObjective::group_lasso_minus_norm(groups, mu);
        let a_norm_sq = crate::linalg::spectral_norm(&a, 1e-8).powi(2);
        Ok(Self {
            a,
            b,
            objective,
            constraint_kind: ConstraintKind::Lorentzian,
            sigma,
            gamma,
            set,
            slater_point,
            ground_truth,
            a_norm_sq,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }

    pub fn a_norm_sq(&self) -> f64 {
        self.a_norm_sq
    }

    pub fn phi(&self) -> Option<PhiFunction> {
        match self.constraint_kind {
            ConstraintKind::ConvexBall => None,
            ConstraintKind::Lorentzian => Some(PhiFunction::LogLorentzian { gamma: self.gamma }),
        }
    }

    /// The single inequality constraint `g1(x) <= 0` as oracles. For the
    /// convex ball this is `||Ax - b||^2 - sigma^2` with gradient modulus
    /// `2 ||A||^2`; for the Lorentzian it is `l(Ax - b) - sigma` with modulus
    /// `L_l ||A||^2`.
    pub fn constraint(&self) -> SmoothConstraint {
        let a = Arc::clone(&self.a);
        let b = self.b.clone();
        match self.constraint_kind {
            ConstraintKind::ConvexBall => {
                let sigma_sq = self.sigma * self.sigma;
                let a2 = Arc::clone(&a);
                let b2 = b.clone();
                SmoothConstraint {
                    eval: Box::new(move |x| {
                        let d = sub(&a.matvec(x), &b);
                        dot(&d, &d) - sigma_sq
                    }),
                    grad: Box::new(move |x| {
                        let d = sub(&a2.matvec(x), &b2);
                        a2.matvec_transpose(&d)
                            .into_iter()
                            .map(|v| 2.0 * v)
                            .collect()
                    }),
                    grad_lipschitz: 2.0 * self.a_norm_sq,
                    quadratic: Some(LeastSquaresForm {
                        a: Arc::clone(&self.a),
                        b: self.b.clone(),
                        rhs: sigma_sq,
                    }),
                }
            }
            ConstraintKind::Lorentzian => {
                let phi = PhiFunction::LogLorentzian { gamma: self.gamma };
                let sigma = self.sigma;
                let a2 = Arc::clone(&a);
                let b2 = b.clone();
                SmoothConstraint {
                    eval: Box::new(move |x| ell_eval(&phi, &sub(&a.matvec(x), &b)) - sigma),
                    grad: Box::new(move |x| {
                        let g = ell_grad(&phi, &sub(&a2.matvec(x), &b2));
                        a2.matvec_transpose(&g)
                    }),
                    grad_lipschitz: lipschitz_ell(&phi) * self.a_norm_sq,
                    quadratic: None,
                }
            }
        }
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Same data with a different concave weight. The warm-start pipeline
    /// uses this to drop the concave part (`mu = 0`) and solve the convex
    /// relaxation with the same machinery.
    pub fn with_mu(&self, mu: f64) -> ProblemInstance {
        ProblemInstance {
            a: Arc::clone(&self.a),
            b: self.b.clone(),
            objective: DCObjective::group_lasso_minus_norm(
                Arc::clone(&self.objective.group_structure),
                mu,
            ),
            constraint_kind: self.constraint_kind,
            sigma: self.sigma,
            gamma: self.gamma,
            set: self.set.clone(),
            slater_point: self.slater_point.clone(),
            ground_truth: self.ground_truth.clone(),
            a_norm_sq: self.a_norm_sq,
        }
    }
}

/// Normalized constraint residual, the `Residual` column of the benchmark:
/// `(||Ax - b|| - sigma) / sigma` for the ball, or the Lorentzian analogue.
pub fn eval_residual(inst: &ProblemInstance, x: &[f64]) -> f64 {
    let d = sub(&inst.a.matvec(x), &inst.b);
    match inst.constraint_kind {
        ConstraintKind::ConvexBall => (norm(&d) - inst.sigma) / inst.sigma,
        ConstraintKind::Lorentzian => {
            let phi = PhiFunction::LogLorentzian { gamma: inst.gamma };
            (ell_eval(&phi, &d) - inst.sigma) / inst.sigma
        }
    }
}

/// `||x - x_orig|| / max(1, ||x_orig||)`.
pub fn recovery_error(inst: &ProblemInstance, x: &[f64]) -> Result<f64, Error> {
    let truth = inst
        .ground_truth
        .as_ref()
        .ok_or(Error::MissingGroundTruth)?;
    Ok(norm(&sub(x, truth)) / norm(truth).max(1.0))
}

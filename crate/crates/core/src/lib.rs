//! Feasible first-order methods for constrained difference-of-convex
//! programs, specialized to group-sparse recovery.
//!
//! The problem class is
//!
//! ```text
//!   min   P1(x) - P2(x)
//!   s.t.  g(x) <= 0,  max_J ||x_J|| <= M,
//! ```
//!
//! with `P1` a group LASSO penalty, `P2` a multiple of the Euclidean norm,
//! and `g` either a Euclidean residual ball (convex) or a Lorentzian
//! residual budget (nonconvex, handled through convex quadratic majorants).
//! Two drivers keep every iterate feasible by retracting trial points toward
//! a strictly feasible anchor ([`fpa::fpa_solve`],
//! [`fpa_nonconvex::fpa_nonconvex_solve`]); an adapted ESQM with an exact
//! penalty line search serves as the infeasible baseline
//! ([`esqm::esqm_solve`]). Each iteration is a proximal subproblem over the
//! box with one linearized constraint, solved exactly by scalar dual root
//! finding ([`subproblem`]).
//!
//! The `bench` binary runs seeded compressed-sensing sweeps over both
//! families; see the repository README.

pub mod bench;
pub mod error;
pub mod esqm;
pub mod fpa;
pub mod fpa_nonconvex;
pub mod init;
pub mod instance;
pub mod linalg;
pub mod loss;
pub mod problem;
pub mod rng;
pub mod subproblem;

pub use error::Error;
pub use esqm::{esqm_solve, ESQMConfig};
pub use fpa::{fpa_solve, FPAConfig, RunReport, TerminationReason};
pub use fpa_nonconvex::fpa_nonconvex_solve;
pub use problem::{ConstraintKind, GroupBoxSet, GroupStructure, ProblemInstance};

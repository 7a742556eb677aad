//! Stochastic optimization under many convex constraints.
//!
//! The solvers minimize `f(w) + γ max(0, max_i g_i(w))` over a simple domain
//! and project onto the feasible region once, at the end. FullTouch checks
//! every constraint each iteration; LightTouch, MidTouch and the practical
//! variant learn a distribution over constraints and check only a few.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autotune;
pub mod constraints;
pub mod distribution;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod objective;
pub mod problem;
pub mod projections;
pub mod solvers;

pub use constraints::{
    aggregate, eval_max_constraint, AggregatedConstraintSet, CheckCounter, Constraint,
    ConstraintFamily, ConstraintSet, MaxConstraint,
};
pub use domain::{Domain, DomainKind};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentPlan, ExperimentSummary, LabeledConfig};
pub use generate::{generate, GeneratorKind, GeneratorSpec, PairStructure};
pub use objective::Objective;
pub use problem::{
    gamma_for_known_family, penalized_objective, rho_from_interior_point, ConstraintFamilyKind,
    GammaEstimate, GammaProvenance, Problem, ProblemMetadata,
};
pub use solvers::{
    solve, solve_full, solve_light, solve_mid, solve_practical, solve_projected_sgd, Algorithm,
    SolverConfig, SolverResult, StepSchedule, Timing, TraceRecord,
};

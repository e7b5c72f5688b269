//! Convex subproblems, the interior-point core, and the CCCP outer loops.

pub mod cccp;
pub mod init;
pub mod ipm;
pub mod layout;
pub mod problem;
pub mod search;
pub mod subproblem;

pub use cccp::{cccp, CccpResult, CccpSettings, CccpStatus, RunTrace};
pub use init::InitMode;
pub use ipm::{solve_convex, SolveOutput, SolverSettings};
pub use problem::{Constraint, ConstraintBuilder, ConstraintKind, ConstraintTag, ConvexSubproblem, ScalarRole, Sense};
pub use subproblem::{build_subproblem, linearize_concave_jd, linearize_concave_sd, AffineForm, BuiltSubproblem, DesignProblem};
pub use search::{exhaustive_sd, minimize_power, selected_collections, selected_sd, SelectionSettings};

//! Warm-started constraint generation for parametric mixed-integer linear
//! programs.
//!
//! Offline, every solved instance gets an invariant constraint set: its
//! binding rows grown by constraint generation until the reduced problem has
//! the full optimum. A conservative knn learns those sets from the instance
//! parameters. Online, the predicted set warm-starts constraint generation,
//! which still ends at the exact optimum of the full problem.

pub mod bench;
pub mod congen;
pub mod error;
pub mod instances;
pub mod io;
pub mod learner;
pub mod lp;
pub mod milp;
pub mod model;

pub use congen::{constraint_generation, identify_invariant_set, CgTrace, InvariantSets};
pub use error::{Error, Result};
pub use learner::{fit, KnnModel, LabelMatrix, LabelSource};
pub use lp::{solve_lp, LpProblem};
pub use milp::{solve_bruteforce, solve_milp, MilpOptions};
pub use model::{
    binding_set, canonicalize, max_violation, Constraint, ConstraintSet, MilpInstance,
    RawConstraint, Sense, SolveOutcome, SolveStatus, VarBound,
};

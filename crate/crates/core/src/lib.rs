//! Fast primal-dual gradient method for
//!
//! ```text
//! min f(x)  s.t.  A₁x = b₁,  A₂x ≤ b₂,  x ∈ Q
//! ```
//!
//! with `f` strongly convex, solved through its Lagrange dual. The method
//! runs an accelerated projected gradient scheme on the dual and averages the
//! inner solutions `x(λ)`; the averaged point carries computable guarantees on
//! the duality gap and infeasibility.
//!
//! Shipped problem families ([`oracles`]): entropy-linear programming,
//! entropy-regularized optimal transport and regularized partial transport.
//! Baselines ([`baselines`]): Sinkhorn balancing, Fletcher–Reeves conjugate
//! gradients on the dual, and a fast gradient method on a Tikhonov-regularized
//! dual.
//!
//! ```
//! use fpdgm::{solve, RotInstance, SolveOptions, Status, Tolerances};
//!
//! let cost = vec![0.0, 1.0, 1.0, 0.0];
//! let rot = RotInstance::new(2, cost, vec![0.3, 0.7], vec![0.6, 0.4], 0.5).unwrap();
//! let report = solve(&rot, &Tolerances::uniform(1e-8), &SolveOptions::default()).unwrap();
//! assert_eq!(report.status, Status::Converged);
//! ```

pub mod baselines;
pub mod bench;
pub mod cli;
pub mod dual;
pub mod error;
mod linalg;
pub mod oracles;
pub mod solver;
pub mod validate;

pub use baselines::{cgm_fletcher_reeves, reg_dual_fgm, sinkhorn_balance, RegDelta};
pub use bench::{run_sweep, SolverKind, SweepConfig, SweepRecord};
pub use dual::{
    project_onto_lambda, BoundParams, Dims, DualPoint, PrimalPoint, TargetAccuracy, Tolerances,
};
pub use error::{Error, Result};
pub use linalg::log_sum_exp;
pub use oracles::{
    DualEval, DualOracle, ElpInstance, Family, InstanceSpec, NormPairing, Problem, RoptInstance,
    RotInstance,
};
pub use solver::{iteration_bounds, solve, FastPrimalDual, SolveOptions, SolveReport, Status};

//! Solvers for `min_x max_i f_i(x)` over convex Lipschitz components.

pub mod accel;
pub mod baselines;
pub mod broo;
pub mod error;
pub mod instances;
pub mod linalg;
pub mod problem;
pub mod report;
pub mod softmax;
pub mod verify;

pub use accel::{solve_max_loss, solve_max_loss_with, Method, SolveOptions, SolveReport, TerminationReason};
pub use baselines::{agd_softmax, subgradient_method, BaselineConfig, BaselineRun};
pub use broo::{BallOracle, BrooRequest, BrooResponse};
pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use problem::{eval_fmax, fmax_and_subgradient, subgrad_fmax, FnProblem, Problem, QueryLedger};
pub use report::{fit_loglog, RunRecord, ScalingFit};
pub use softmax::SmoothingParams;

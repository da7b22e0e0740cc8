//! Primal-dual interior-point solver for smooth nonlinear programs.

pub mod cone;
pub mod problem;
pub mod solver;

pub use cone::{ConeQcqp, RotatedCone};
pub use problem::{check_derivatives, DerivativeCheck, NlpProblem, QcqpBuilder, QcqpProblem, QcqpRow};
pub use solver::{solve, solve_warm, IpmOptions, IpmStatus, KktResiduals, NlpSolution, WarmStart};

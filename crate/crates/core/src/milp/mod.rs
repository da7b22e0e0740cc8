//! Linear and mixed-integer linear programming.

mod bb;
mod lp;

pub use bb::{bb_solve, bb_solve_from, BbOptions, MilpProblem, MilpSolution, MilpStatus};
pub use lp::{lp_solve, lp_solve_from, Basis, LpOptions, LpProblem, LpSolution, LpStatus, RowSense, VarStatus};

//! Robust AC transmission expansion planning.
//!
//! A second-order-cone relaxation of the AC expansion problem under box
//! uncertainty in loads and renewable injections, solved by Benders
//! decomposition with a primal-dual interior-point method for the dual
//! slave and branch-and-bound for the master.

pub mod benders;
pub mod formulation;
pub mod ipm;
pub mod linalg;
pub mod milp;
pub mod netcase;
pub mod scalar;
pub mod verify;

pub use scalar::Scalar;

/// Scalar type used by the case data, formulations and reports.
pub type Real = f64;

//! Linear algebra kernels: sparse matrices, sparse `L D L^T` for KKT
//! systems, sparse LU for simplex bases and small dense factorizations.

pub mod dense;
pub mod ldl;
pub mod lu;
pub mod sparse;

pub use ldl::{LdlFactor, Ordering, SymbolicLdl};
pub use lu::{SingularColumns, SparseLu};
pub use sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is numerically singular at index {index}")]
    Singular { index: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("ordering failed: {0}")]
    Ordering(String),
}

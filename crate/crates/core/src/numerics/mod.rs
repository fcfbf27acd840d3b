//! Random streams and dense linear algebra shared by every other module.

mod cholesky;
mod distance;
mod eigen;
mod matrix;
mod rng;

pub use cholesky::{cholesky, forward_substitute, log_det_from_cholesky};
pub use distance::{median_off_diagonal, pairwise_distances, pairwise_squared_distances};
pub use eigen::{sym_eigen, SymEigen, MAX_JACOBI_SWEEPS};
pub use matrix::{dot, squared_euclidean, Matrix, SymMatrix};
pub use rng::{derive_seed, make_rng, RngStream};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("matrix is empty")]
    Empty,
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_diagonal_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_diagonal_norm: f64 },
    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },
}

//! Operator-range calculus on the positive semidefinite cone.
//!
//! Absolute continuity, singularity and domination of positive matrices are
//! decided through their ranges, exactly over the Gaussian rationals or
//! numerically in double precision. On top of that sit a finite-dimensional
//! Lebesgue decomposition, constructors and verifiers for maps that preserve
//! these relations, and exact reconstruction of a semilinear operator from
//! the map it induces on projective lines.

pub mod error;
pub mod generators;
pub mod lebesgue;
pub mod linalg;
pub mod preserver;
pub mod projective;
pub mod relations;

pub use error::{Error, Result};
pub use linalg::{
    column_space, douglas_factor, pinv, psd_check, psd_sqrt, rank, subspace_intersect, subspace_preimage, subspace_sum,
    Backend, Complex64, GaussianRational, Matrix, PsdOperator, RankTol, Scalar, Subspace, Tol,
};

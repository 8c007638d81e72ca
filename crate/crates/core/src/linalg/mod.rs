//! Dense linear algebra over two scalar backends and the subspace calculus
//! used to represent operator ranges.

mod exact;
mod float;
mod matrix;
mod psd;
mod scalar;
mod subspace;

pub use matrix::Matrix;
pub use num_complex::Complex64;
pub use psd::{douglas_factor, pinv, psd_check, psd_sqrt, PsdOperator};
pub use scalar::{format_rational, parse_rational, real_fraction, Backend, GaussianRational, Rational, Scalar};
pub use subspace::{column_space, subspace_intersect, subspace_preimage, subspace_sum, Subspace};

use serde::{Deserialize, Serialize};

/// How small a singular value or eigenvalue must be to count as zero on the
/// float backend.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankTol {
    /// `max(rows, cols) · ε · σ_max`.
    Auto,
    Absolute(f64),
    /// `t · σ_max`.
    Relative(f64),
}

/// Float-backend tolerances. The exact backend ignores them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tol {
    pub rank: RankTol,
    /// Largest principal angle (as its sine) between subspaces that are
    /// still considered to share a direction.
    pub angle: f64,
}

impl Default for Tol {
    fn default() -> Self {
        Tol {
            rank: RankTol::Auto,
            angle: f64::EPSILON.sqrt(),
        }
    }
}

impl Tol {
    pub fn new(rank: RankTol, angle: f64) -> Self {
        Tol { rank, angle }
    }

    /// Relative rank threshold and principal-angle threshold both set to `t`.
    pub fn uniform(t: f64) -> Self {
        Tol {
            rank: RankTol::Relative(t),
            angle: t,
        }
    }

    /// Zero threshold for a `rows × cols` matrix whose largest singular
    /// value (or spectral radius) is `scale`.
    pub fn threshold(&self, rows: usize, cols: usize, scale: f64) -> f64 {
        match self.rank {
            RankTol::Auto => rows.max(cols) as f64 * f64::EPSILON * scale,
            RankTol::Absolute(t) => t,
            RankTol::Relative(t) => t * scale,
        }
    }
}

/// Eigenvalues of the Hermitian part of a float matrix.
pub fn float_eigenvalues(m: &Matrix<Complex64>) -> Vec<f64> {
    let h = Matrix::from_fn(m.rows(), m.cols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    float::hermitian_eigen(&h).0
}

/// Numerical rank on the float backend, exact rank on the exact backend.
pub fn rank<S: Scalar>(m: &Matrix<S>) -> usize {
    S::rank(m, &Tol::default())
}

pub fn rank_tol<S: Scalar>(m: &Matrix<S>, tol: &Tol) -> usize {
    S::rank(m, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_threshold_scales_with_shape_and_norm() {
        let t = Tol::default();
        assert_eq!(t.threshold(3, 5, 2.0), 5.0 * f64::EPSILON * 2.0);
        assert_eq!(Tol::uniform(1e-8).threshold(3, 3, 10.0), 1e-7);
        assert_eq!(Tol::new(RankTol::Absolute(0.5), 1e-3).threshold(9, 9, 1e9), 0.5);
    }
}

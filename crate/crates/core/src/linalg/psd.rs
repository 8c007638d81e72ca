use super::{column_space, Complex64, GaussianRational, Matrix, Scalar, Subspace, Tol};
use crate::{Error, Result};

/// Hermitian positive semidefinite matrix with a certified rank.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdOperator<S> {
    matrix: Matrix<S>,
    rank: usize,
}

impl<S: Scalar> PsdOperator<S> {
    /// Certifies `m`: exactly on the exact backend (pivoted LDL*), by
    /// eigenvalues `≥ −τ` on the float backend. Float input is replaced by its
    /// Hermitian part.
    pub fn new(m: Matrix<S>, tol: &Tol) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let h = S::hermitian_part(&m, tol).ok_or(Error::NotHermitian)?;
        let rank = S::psd_rank(&h, tol).ok_or(Error::NotPsd)?;
        Ok(PsdOperator { matrix: h, rank })
    }

    /// Wraps a matrix already known to be Hermitian PSD with the given rank.
    pub(crate) fn certified(matrix: Matrix<S>, rank: usize) -> Self {
        PsdOperator { matrix, rank }
    }

    pub fn zero(n: usize) -> Self {
        PsdOperator {
            matrix: Matrix::zeros(n, n),
            rank: 0,
        }
    }

    pub fn identity(n: usize) -> Self {
        PsdOperator {
            matrix: Matrix::identity(n),
            rank: n,
        }
    }

    /// Diagonal operator from non-negative integers.
    pub fn diag_ints(entries: &[i64]) -> Result<Self> {
        let d: Vec<S> = entries.iter().map(|&x| S::from_parts(x, 0)).collect();
        Self::new(Matrix::diag(&d), &Tol::default())
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<S> {
        self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_zero(&self) -> bool {
        self.rank == 0
    }

    pub fn is_invertible(&self) -> bool {
        self.rank == self.dim()
    }

    /// `ran A`, which equals `ran A^{1/2}` in finite dimension.
    pub fn range(&self, tol: &Tol) -> Subspace<S> {
        column_space(&self.matrix, tol)
    }

    /// `c·A` for a real `c > 0`; the rank is unchanged.
    pub fn scaled(&self, c: &S) -> Self {
        PsdOperator {
            matrix: self.matrix.scale(c),
            rank: self.rank,
        }
    }

    pub fn to_float(&self, tol: &Tol) -> Result<PsdOperator<Complex64>> {
        PsdOperator::new(self.matrix.to_float(), tol)
    }
}

impl PsdOperator<GaussianRational> {
    pub fn to_backend<S: Scalar>(&self, tol: &Tol) -> Result<PsdOperator<S>> {
        PsdOperator::new(self.matrix.to_backend(), tol)
    }
}

/// Whether `m` is Hermitian positive semidefinite.
pub fn psd_check<S: Scalar>(m: &Matrix<S>, tol: &Tol) -> bool {
    m.is_square() && S::hermitian_part(m, tol).is_some_and(|h| S::psd_rank(&h, tol).is_some())
}

/// Positive square root. Float backend only.
pub fn psd_sqrt<S: Scalar>(a: &PsdOperator<S>, tol: &Tol) -> Result<PsdOperator<S>> {
    let root = S::psd_sqrt(a.matrix(), tol)?;
    let rank = S::psd_rank(a.matrix(), tol).ok_or(Error::NotPsd)?;
    Ok(PsdOperator { matrix: root, rank })
}

/// Moore–Penrose pseudoinverse.
pub fn pinv<S: Scalar>(m: &Matrix<S>, tol: &Tol) -> Matrix<S> {
    S::pinv(m, tol)
}

/// Minimal-norm solution `X = (B^{1/2})⁺ A^{1/2}` of `A^{1/2} = B^{1/2} X`.
///
/// Fails with [`Error::NoFactor`] unless `ran A ⊆ ran B`.
pub fn douglas_factor<S: Scalar>(a: &PsdOperator<S>, b: &PsdOperator<S>, tol: &Tol) -> Result<Matrix<S>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if !b.range(tol).contains(&a.range(tol), tol)? {
        return Err(Error::NoFactor);
    }
    let ra = psd_sqrt(a, tol)?;
    let rb = psd_sqrt(b, tol)?;
    Ok(&pinv(rb.matrix(), tol) * ra.matrix())
}

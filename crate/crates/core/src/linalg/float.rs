//! Double-precision kernels. Spectral work is delegated to faer; rank
//! decisions apply [`Tol`] thresholds to singular values, subspace decisions
//! apply the principal-angle threshold to sines of principal angles.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef, Side};
use num_complex::Complex64;
use rand::Rng;

use super::{Backend, GaussianRational, Matrix, Scalar, Tol};
use crate::Result;

type C = Complex64;

fn to_faer(m: &Matrix<C>) -> Mat<C> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn from_faer(d: MatRef<'_, C>) -> Matrix<C> {
    Matrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)])
}

/// Full SVD: singular values in descending order, `U` (`rows × rows`) and
/// `V` (`cols × cols`). Both dimensions must be positive.
fn svd(m: &Matrix<C>) -> (Vec<f64>, Matrix<C>, Matrix<C>) {
    let svd = to_faer(m).svd().expect("SVD of a finite matrix converges");
    let s = svd.S().column_vector();
    let values = (0..s.nrows()).map(|k| s[k].re).collect();
    (values, from_faer(svd.U()), from_faer(svd.V()))
}

fn singular_values(m: &Matrix<C>) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    svd(m).0
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

/// `inner − outer·(outer*·inner)`: the component of `inner` orthogonal to
/// the orthonormal columns of `outer`.
fn residual(outer: &Matrix<C>, inner: &Matrix<C>) -> Matrix<C> {
    let proj = outer * &(&outer.adjoint() * inner);
    inner - &proj
}

/// Eigenvalues (ascending order not guaranteed) and eigenvectors of the
/// Hermitian matrix `h`.
pub(crate) fn hermitian_eigen(h: &Matrix<C>) -> (Vec<f64>, Matrix<C>) {
    if h.rows() == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let eig = to_faer(h)
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigensolver converges on finite input");
    let vals = eig.S().column_vector();
    ((0..vals.nrows()).map(|k| vals[k].re).collect(), from_faer(eig.U()))
}

/// `V · diag(f(λ)) · V*` for the Hermitian matrix `h`.
fn spectral_map(h: &Matrix<C>, f: impl Fn(f64) -> f64) -> Matrix<C> {
    let (vals, vecs) = hermitian_eigen(h);
    let n = h.rows();
    let scaled = Matrix::from_fn(n, n, |i, j| vecs[(i, j)] * f(vals[j]));
    &scaled * &vecs.adjoint()
}

fn symmetrize(m: &Matrix<C>) -> Matrix<C> {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

impl Scalar for Complex64 {
    const BACKEND: Backend = Backend::Float;

    fn zero() -> Self {
        C::new(0.0, 0.0)
    }

    fn one() -> Self {
        C::new(1.0, 0.0)
    }

    fn from_parts(re: i64, im: i64) -> Self {
        C::new(re as f64, im as f64)
    }

    fn from_exact(q: &GaussianRational) -> Self {
        q.to_c64()
    }

    fn from_f64(x: f64) -> Self {
        C::new(x, 0.0)
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn conj(&self) -> Self {
        C::conj(self)
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn modulus(&self) -> f64 {
        self.norm()
    }

    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn write_canonical(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.re.to_bits().to_le_bytes());
        out.extend_from_slice(&self.im.to_bits().to_le_bytes());
    }

    fn rank(m: &Matrix<Self>, tol: &Tol) -> usize {
        let sv = singular_values(m);
        let thr = tol.threshold(m.rows(), m.cols(), max_of(&sv));
        sv.iter().filter(|&&s| s > thr).count()
    }

    fn column_basis(m: &Matrix<Self>, tol: &Tol) -> Matrix<Self> {
        if m.rows() == 0 || m.cols() == 0 {
            return Matrix::zeros(m.rows(), 0);
        }
        let (sv, u, _) = svd(m);
        let thr = tol.threshold(m.rows(), m.cols(), max_of(&sv));
        let keep: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] > thr).collect();
        u.select_columns(&keep)
    }

    fn null_space(m: &Matrix<Self>, tol: &Tol) -> Matrix<Self> {
        let (rows, cols) = (m.rows(), m.cols());
        if cols == 0 {
            return Matrix::zeros(0, 0);
        }
        if rows == 0 {
            return Matrix::identity(cols);
        }
        let (sv, _, v) = svd(m);
        let thr = tol.threshold(rows, cols, max_of(&sv));
        // Right singular vectors past the last singular value span part of
        // the kernel as well.
        let keep: Vec<usize> = (0..cols).filter(|&k| sv.get(k).is_none_or(|&s| s <= thr)).collect();
        v.select_columns(&keep)
    }

    fn intersect_bases(u: &Matrix<Self>, v: &Matrix<Self>, tol: &Tol) -> Matrix<Self> {
        let n = u.rows();
        let qu = Self::column_basis(u, tol);
        let qv = Self::column_basis(v, tol);
        if qu.cols() == 0 || qv.cols() == 0 {
            return Matrix::zeros(n, 0);
        }
        // Singular values of the residual are the sines of the principal
        // angles; right singular vectors with small sine give the shared
        // directions inside col(v).
        let r = residual(&qu, &qv);
        let (sv, _, v) = svd(&r);
        let q = qv.cols();
        let keep: Vec<usize> = (0..q).filter(|&k| sv.get(k).is_none_or(|&s| s <= tol.angle)).collect();
        &qv * &v.select_columns(&keep)
    }

    fn sum_bases(u: &Matrix<Self>, v: &Matrix<Self>, tol: &Tol) -> Matrix<Self> {
        let qu = Self::column_basis(u, tol);
        let qv = Self::column_basis(v, tol);
        if qv.cols() == 0 {
            return qu;
        }
        if qu.cols() == 0 {
            return qv;
        }
        let r = residual(&qu, &qv);
        let (sv, u, _) = svd(&r);
        let keep: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] > tol.angle).collect();
        qu.hstack(&u.select_columns(&keep)).expect("same ambient dimension")
    }

    fn basis_contains(outer: &Matrix<Self>, inner: &Matrix<Self>, tol: &Tol) -> bool {
        let qi = Self::column_basis(inner, tol);
        if qi.cols() == 0 {
            return true;
        }
        let qo = Self::column_basis(outer, tol);
        if qo.cols() == 0 {
            return false;
        }
        max_of(&singular_values(&residual(&qo, &qi))) <= tol.angle
    }

    fn psd_rank(m: &Matrix<Self>, tol: &Tol) -> Option<usize> {
        let h = Self::hermitian_part(m, tol)?;
        let (vals, _) = hermitian_eigen(&h);
        let radius = vals.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let thr = tol.threshold(m.rows(), m.cols(), radius);
        if vals.iter().any(|&l| l < -thr) {
            return None;
        }
        Some(vals.iter().filter(|&&l| l > thr).count())
    }

    fn inverse(m: &Matrix<Self>) -> Option<Matrix<Self>> {
        if !m.is_square() {
            return None;
        }
        if m.rows() == 0 {
            return Some(Matrix::zeros(0, 0));
        }
        let inv = from_faer(to_faer(m).partial_piv_lu().inverse().as_ref());
        inv.data()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
            .then_some(inv)
    }

    fn pinv(m: &Matrix<Self>, tol: &Tol) -> Matrix<Self> {
        if m.rows() == 0 || m.cols() == 0 {
            return Matrix::zeros(m.cols(), m.rows());
        }
        let (sv, u, v) = svd(m);
        let thr = tol.threshold(m.rows(), m.cols(), max_of(&sv));
        let k = sv.len();
        let inv_sigma = Matrix::from_fn(m.cols(), m.rows(), |i, j| {
            if i == j && i < k && sv[i] > thr {
                C::new(1.0 / sv[i], 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        });
        &(&v * &inv_sigma) * &u.adjoint()
    }

    /// Eigenvalues at or below the rank threshold are set to zero before
    /// taking roots, so the root has the same rank as `m`.
    fn psd_sqrt(m: &Matrix<Self>, tol: &Tol) -> Result<Matrix<Self>> {
        let h = Self::hermitian_part(m, tol).ok_or(crate::Error::NotPsd)?;
        let (vals, _) = hermitian_eigen(&h);
        let radius = vals.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let thr = tol.threshold(m.rows(), m.cols(), radius);
        if vals.iter().any(|&l| l < -thr) {
            return Err(crate::Error::NotPsd);
        }
        Ok(symmetrize(&spectral_map(&h, |l| if l > thr { l.sqrt() } else { 0.0 })))
    }

    fn hermitian_part(m: &Matrix<Self>, tol: &Tol) -> Option<Matrix<Self>> {
        if !m.is_square() {
            return None;
        }
        if m.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return None;
        }
        let skew = m.max_diff(&m.adjoint());
        let thr = tol.threshold(m.rows(), m.cols(), m.frobenius());
        (skew <= thr.max(f64::EPSILON * m.frobenius() * m.rows() as f64)).then(|| symmetrize(m))
    }
}

//! Exact kernels over the Gaussian rationals: reduced row echelon form,
//! null spaces, full-rank factorizations and pivoted LDL* certification.

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::scalar::{gauss, gauss_is_zero, gauss_one, gauss_zero, rational_from_f64, rational_to_f64};
use super::{Backend, GaussianRational, Matrix, Scalar, Tol};
use crate::{Error, Result};

type Q = GaussianRational;

/// Reduced row echelon form and the pivot column of each nonzero row.
pub(crate) struct Rref {
    pub reduced: Matrix<Q>,
    pub pivots: Vec<usize>,
}

pub(crate) fn rref(m: &Matrix<Q>) -> Rref {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a: Vec<Vec<Q>> = (0..rows).map(|i| m.row(i).to_vec()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !gauss_is_zero(&a[i][c])) else {
            continue;
        };
        a.swap(r, p);
        let inv = gauss_one() / a[r][c].clone();
        for x in a[r].iter_mut().skip(c) {
            *x = &*x * &inv;
        }
        let pivot_row = a[r].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i == r || gauss_is_zero(&row[c]) {
                continue;
            }
            let f = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row).skip(c) {
                if !gauss_is_zero(p) {
                    *x = &*x - &(&f * p);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let reduced = Matrix::from_rows(a).unwrap_or_else(|_| Matrix::zeros(rows, cols));
    Rref { reduced, pivots }
}

type GaussInt = Complex<BigInt>;

/// `a / b` for Gaussian integers where `b` divides `a`.
fn div_exact(a: &GaussInt, b: &GaussInt) -> GaussInt {
    let n = a * b.conj();
    let d = b.norm_sqr();
    Complex::new(n.re / &d, n.im / &d)
}

/// Pivot columns of the row echelon form of `m`.
///
/// Rows are scaled to Gaussian integers and eliminated fraction-free
/// (Bareiss), so no rational is reduced along the way. Every intermediate
/// entry is a minor of the scaled matrix and each division is exact.
pub(crate) fn pivot_columns(m: &Matrix<Q>) -> Vec<usize> {
    let rows = m.rows();
    let mut a: Vec<Vec<GaussInt>> = (0..rows)
        .map(|i| {
            let (scaled, _) = clear_denominators(m.row(i).iter());
            scaled.into_iter().map(|(re, im)| Complex::new(re, im)).collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut prev = GaussInt::one();
    let mut r = 0;
    for c in 0..m.cols() {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let (top, rest) = a.split_at_mut(r + 1);
        let pivot_row = &top[r];
        for row in rest.iter_mut() {
            let f = std::mem::replace(&mut row[c], GaussInt::zero());
            for (x, q) in row.iter_mut().zip(pivot_row).skip(c + 1) {
                let t = &pivot_row[c] * &*x - &f * q;
                *x = div_exact(&t, &prev);
            }
        }
        prev = a[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    pivots
}

fn null_space_exact(m: &Matrix<Q>) -> Matrix<Q> {
    let cols = m.cols();
    let Rref { reduced, pivots } = rref(m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let basis: Vec<Vec<Q>> = free
        .iter()
        .map(|&f| {
            let mut x = vec![gauss_zero(); cols];
            x[f] = gauss_one();
            for (i, &p) in pivots.iter().enumerate() {
                x[p] = -reduced[(i, f)].clone();
            }
            x
        })
        .collect();
    Matrix::from_columns(cols, &basis)
}

/// Rank of a Hermitian matrix when it is positive semidefinite, by
/// symmetrically pivoted LDL*.
///
/// A positive diagonal entry is eliminated by a Schur complement step. Once
/// every remaining diagonal entry is zero the remaining block must vanish.
fn ldl_psd_rank(m: &Matrix<Q>) -> Option<usize> {
    let n = m.rows();
    if !m.is_square() || *m != m.adjoint() {
        return None;
    }
    let mut a: Vec<Vec<Q>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    loop {
        if active.iter().any(|&i| a[i][i].re.is_negative()) {
            return None;
        }
        let Some(pos) = active.iter().position(|&i| a[i][i].re.is_positive()) else {
            let rest_zero = active.iter().all(|&i| active.iter().all(|&j| gauss_is_zero(&a[i][j])));
            return rest_zero.then_some(rank);
        };
        let k = active.remove(pos);
        let d = a[k][k].clone();
        for &i in &active {
            if gauss_is_zero(&a[i][k]) {
                continue;
            }
            let f = &a[i][k] / &d;
            for &j in &active {
                if !gauss_is_zero(&a[k][j]) {
                    let upd = &f * &a[k][j];
                    a[i][j] = &a[i][j] - &upd;
                }
            }
        }
        rank += 1;
    }
}

/// Entries scaled to Gaussian integers by their least common denominator,
/// together with that denominator.
fn clear_denominators<'a, I>(entries: I) -> (Vec<(BigInt, BigInt)>, BigInt)
where
    I: Iterator<Item = &'a Q> + Clone,
{
    let mut d = BigInt::one();
    for den in entries.clone().flat_map(|z| [z.re.denom(), z.im.denom()]) {
        if !den.is_one() && !(&d % den).is_zero() {
            d = d.lcm(den);
        }
    }
    let scale = |q: &BigRational| {
        if q.denom().is_one() {
            q.numer() * &d
        } else {
            q.numer() * (&d / q.denom())
        }
    };
    let scaled = entries.map(|z| (scale(&z.re), scale(&z.im))).collect();
    (scaled, d)
}

/// Product over common denominators, so each output entry is reduced once
/// instead of after every partial sum.
fn exact_matmul(a: &Matrix<Q>, b: &Matrix<Q>) -> Matrix<Q> {
    let rows: Vec<_> = (0..a.rows()).map(|i| clear_denominators(a.row(i).iter())).collect();
    let cols: Vec<_> = (0..b.cols())
        .map(|j| clear_denominators((0..b.rows()).map(move |k| &b[(k, j)])))
        .collect();
    Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        let ((row, di), (col, dj)) = (&rows[i], &cols[j]);
        let (mut re, mut im) = (BigInt::zero(), BigInt::zero());
        for ((ar, ai), (br, bi)) in row.iter().zip(col) {
            if (ar.is_zero() && ai.is_zero()) || (br.is_zero() && bi.is_zero()) {
                continue;
            }
            re += ar * br - ai * bi;
            im += ar * bi + ai * br;
        }
        let den = di * dj;
        let part = |x: BigInt| {
            if x.is_zero() || den.is_one() {
                BigRational::from_integer(x)
            } else {
                BigRational::new(x, den.clone())
            }
        };
        Complex::new(part(re), part(im))
    })
}

impl Scalar for GaussianRational {
    const BACKEND: Backend = Backend::Exact;

    fn matmul(a: &Matrix<Self>, b: &Matrix<Self>) -> Matrix<Self> {
        exact_matmul(a, b)
    }

    fn zero() -> Self {
        gauss_zero()
    }

    fn one() -> Self {
        gauss_one()
    }

    fn from_parts(re: i64, im: i64) -> Self {
        gauss(re, im)
    }

    fn from_exact(q: &GaussianRational) -> Self {
        q.clone()
    }

    fn from_f64(x: f64) -> Self {
        Complex::new(rational_from_f64(x), BigRational::zero())
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }

    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    fn is_zero(&self) -> bool {
        gauss_is_zero(self)
    }

    fn modulus(&self) -> f64 {
        self.to_c64().norm()
    }

    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        gauss(rng.random_range(-3..=3), rng.random_range(-3..=3))
    }

    fn write_canonical(&self, out: &mut Vec<u8>) {
        let s = format!(
            "{}/{},{}/{};",
            self.re.numer(),
            self.re.denom(),
            self.im.numer(),
            self.im.denom()
        );
        out.extend_from_slice(s.as_bytes());
    }

    fn rank(m: &Matrix<Self>, _tol: &Tol) -> usize {
        pivot_columns(m).len()
    }

    fn column_basis(m: &Matrix<Self>, _tol: &Tol) -> Matrix<Self> {
        m.select_columns(&pivot_columns(m))
    }

    fn null_space(m: &Matrix<Self>, _tol: &Tol) -> Matrix<Self> {
        null_space_exact(m)
    }

    fn intersect_bases(u: &Matrix<Self>, v: &Matrix<Self>, _tol: &Tol) -> Matrix<Self> {
        let stacked = u.hstack(&v.scale(&-gauss_one())).expect("equal ambient dimension");
        let kernel = null_space_exact(&stacked);
        let top: Vec<usize> = (0..u.cols()).collect();
        u * &kernel.select_rows(&top)
    }

    fn sum_bases(u: &Matrix<Self>, v: &Matrix<Self>, tol: &Tol) -> Matrix<Self> {
        Self::column_basis(&u.hstack(v).expect("equal ambient dimension"), tol)
    }

    fn basis_contains(outer: &Matrix<Self>, inner: &Matrix<Self>, _tol: &Tol) -> bool {
        let joined = outer.hstack(inner).expect("equal ambient dimension");
        pivot_columns(&joined).len() == outer.cols()
    }

    fn psd_rank(m: &Matrix<Self>, _tol: &Tol) -> Option<usize> {
        ldl_psd_rank(m)
    }

    fn inverse(m: &Matrix<Self>) -> Option<Matrix<Self>> {
        let n = m.rows();
        if !m.is_square() {
            return None;
        }
        let Rref { reduced, pivots } = rref(&m.hstack(&Matrix::identity(n)).ok()?);
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let right: Vec<usize> = (n..2 * n).collect();
        Some(reduced.select_columns(&right))
    }

    /// Full-rank factorization `m = F·G` with `F` the pivot columns of `m`
    /// and `G` the nonzero rows of its reduced echelon form; then
    /// `m⁺ = G*·(F*·m·G*)⁻¹·F*`.
    fn pinv(m: &Matrix<Self>, _tol: &Tol) -> Matrix<Self> {
        let Rref { reduced, pivots } = rref(m);
        let r = pivots.len();
        if r == 0 {
            return Matrix::zeros(m.cols(), m.rows());
        }
        let f = m.select_columns(&pivots);
        let g = reduced.select_rows(&(0..r).collect::<Vec<_>>());
        let g_adj = g.adjoint();
        let f_adj = f.adjoint();
        let core = &(&f_adj * m) * &g_adj;
        let core_inv = Self::inverse(&core).expect("full-rank factor core is invertible");
        &(&g_adj * &core_inv) * &f_adj
    }

    fn psd_sqrt(_m: &Matrix<Self>, _tol: &Tol) -> Result<Matrix<Self>> {
        Err(Error::ExactBackend("matrix square root"))
    }

    fn hermitian_part(m: &Matrix<Self>, _tol: &Tol) -> Option<Matrix<Self>> {
        (m.is_square() && *m == m.adjoint()).then(|| m.clone())
    }
}

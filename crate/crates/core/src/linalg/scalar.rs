use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Matrix, Tol};
use crate::Result;

/// Exact rational number in lowest terms.
pub type Rational = BigRational;

/// Complex number with rational real and imaginary parts.
pub type GaussianRational = Complex<BigRational>;

/// Which arithmetic a value lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Exact => f.write_str("exact"),
            Backend::Float => f.write_str("float"),
        }
    }
}

/// Field element of one of the two backends, together with the backend's
/// linear-algebra kernels.
///
/// Decision procedures (rank, inclusion, PSD certification) are exact for
/// [`GaussianRational`] and tolerance-based for [`Complex64`]; the `tol`
/// argument is ignored by the exact backend.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const BACKEND: Backend;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_parts(re: i64, im: i64) -> Self;
    fn from_exact(q: &GaussianRational) -> Self;
    /// Real scalar. The exact backend converts the binary value exactly.
    fn from_f64(x: f64) -> Self;
    fn to_c64(&self) -> Complex64;
    fn conj(&self) -> Self;
    fn is_zero(&self) -> bool;
    /// Modulus as a float, used for pivot choice and norms.
    fn modulus(&self) -> f64;
    /// Random entry for generators: small Gaussian integers (exact) or
    /// unit-scale complex numbers (float).
    fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// Stable byte encoding used for hashing.
    fn write_canonical(&self, out: &mut Vec<u8>);

    fn rank(m: &Matrix<Self>, tol: &Tol) -> usize;
    /// Independent columns spanning the column space of `m`. The float
    /// backend returns an orthonormal basis.
    fn column_basis(m: &Matrix<Self>, tol: &Tol) -> Matrix<Self>;
    /// Basis of `{x : m x = 0}`.
    fn null_space(m: &Matrix<Self>, tol: &Tol) -> Matrix<Self>;
    /// Basis of the intersection of two column spaces given by bases with
    /// independent columns.
    fn intersect_bases(u: &Matrix<Self>, v: &Matrix<Self>, tol: &Tol) -> Matrix<Self>;
    /// Basis of the sum of two column spaces.
    fn sum_bases(u: &Matrix<Self>, v: &Matrix<Self>, tol: &Tol) -> Matrix<Self>;
    /// Whether `col(inner) ⊆ col(outer)`; both have independent columns.
    fn basis_contains(outer: &Matrix<Self>, inner: &Matrix<Self>, tol: &Tol) -> bool;
    /// `Some(rank)` when `m` is Hermitian positive semidefinite.
    fn psd_rank(m: &Matrix<Self>, tol: &Tol) -> Option<usize>;
    fn inverse(m: &Matrix<Self>) -> Option<Matrix<Self>>;
    fn pinv(m: &Matrix<Self>, tol: &Tol) -> Matrix<Self>;
    /// Principal square root of a PSD matrix.
    fn psd_sqrt(m: &Matrix<Self>, tol: &Tol) -> Result<Matrix<Self>>;
    /// Hermitian part of `m` when it is Hermitian up to the backend's notion
    /// of equality.
    fn hermitian_part(m: &Matrix<Self>, tol: &Tol) -> Option<Matrix<Self>>;
    /// `a · b` for conforming shapes.
    fn matmul(a: &Matrix<Self>, b: &Matrix<Self>) -> Matrix<Self> {
        super::matrix::naive_mul(a, b)
    }
}

/// Parses `p/q` or `p` into a rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}

/// Canonical `p/q` rendering (lowest terms, positive denominator, `q ≥ 1`).
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub(crate) fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Ratio::to_f64 only fails for out-of-range values.
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

pub(crate) fn rational_from_f64(x: f64) -> Rational {
    BigRational::from_f64(x).expect("finite float")
}

/// The real Gaussian rational `p/q`.
pub fn real_fraction(p: i64, q: i64) -> GaussianRational {
    GaussianRational::new(Rational::new(p.into(), q.into()), Rational::from_integer(0.into()))
}

pub(crate) fn gauss(re: i64, im: i64) -> GaussianRational {
    Complex::new(
        BigRational::from_integer(re.into()),
        BigRational::from_integer(im.into()),
    )
}

pub(crate) fn gauss_is_zero(z: &GaussianRational) -> bool {
    z.re.is_zero() && z.im.is_zero()
}

pub(crate) fn gauss_one() -> GaussianRational {
    Complex::new(BigRational::one(), BigRational::zero())
}

pub(crate) fn gauss_zero() -> GaussianRational {
    Complex::new(BigRational::zero(), BigRational::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_text_round_trip() {
        let q = parse_rational("6/-4").unwrap();
        assert_eq!(format_rational(&q), "-3/2");
        assert_eq!(format_rational(&parse_rational("0").unwrap()), "0/1");
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("x/2").is_none());
    }

    #[test]
    fn float_to_rational_is_exact() {
        let q = rational_from_f64(0.1);
        assert_eq!(rational_to_f64(&q), 0.1);
        assert_ne!(q, BigRational::new(1.into(), 10.into()));
    }
}

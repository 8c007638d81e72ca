use super::{Matrix, Scalar, Tol};
use crate::{Error, Result};

/// A linear subspace of `S^n`, stored as a basis with independent columns.
///
/// Bases are not canonical, so two subspaces are compared by mutual
/// inclusion ([`Subspace::same_as`]) and never by their stored columns.
#[derive(Clone, Debug)]
pub struct Subspace<S> {
    basis: Matrix<S>,
}

impl<S: Scalar> Subspace<S> {
    /// Span of the columns of `m`; dependent columns are dropped.
    pub fn span(m: &Matrix<S>, tol: &Tol) -> Self {
        Subspace {
            basis: S::column_basis(m, tol),
        }
    }

    pub fn span_of(n: usize, vectors: &[Vec<S>], tol: &Tol) -> Self {
        Self::span(&Matrix::from_columns(n, vectors), tol)
    }

    pub fn zero(n: usize) -> Self {
        Subspace {
            basis: Matrix::zeros(n, 0),
        }
    }

    pub fn full(n: usize) -> Self {
        Subspace {
            basis: Matrix::identity(n),
        }
    }

    pub fn basis(&self) -> &Matrix<S> {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn codim(&self) -> usize {
        self.ambient_dim() - self.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim()
    }

    fn check_ambient(&self, other: &Self) -> Result<()> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: other.ambient_dim(),
            });
        }
        Ok(())
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &Self, tol: &Tol) -> Result<bool> {
        self.check_ambient(other)?;
        if other.dim() > self.dim() {
            return Ok(false);
        }
        Ok(S::basis_contains(&self.basis, &other.basis, tol))
    }

    pub fn contains_vector(&self, v: &[S], tol: &Tol) -> Result<bool> {
        self.contains(&Subspace::span(&Matrix::column_vector(v), tol), tol)
    }

    /// Equality as mutual inclusion.
    pub fn same_as(&self, other: &Self, tol: &Tol) -> Result<bool> {
        Ok(self.dim() == other.dim() && self.contains(other, tol)? && other.contains(self, tol)?)
    }

    /// Image of the subspace under `m`.
    pub fn image(&self, m: &Matrix<S>, tol: &Tol) -> Result<Self> {
        if m.cols() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: m.cols(),
            });
        }
        Ok(Subspace::span(&(m * &self.basis), tol))
    }

    /// Orthogonal projector `U (U*U)⁻¹ U*` onto the subspace.
    pub fn projector(&self) -> Matrix<S> {
        let n = self.ambient_dim();
        if self.is_zero() {
            return Matrix::zeros(n, n);
        }
        let u = &self.basis;
        let gram = &u.adjoint() * u;
        let gram_inv = S::inverse(&gram).expect("basis columns are independent");
        &(u * &gram_inv) * &u.adjoint()
    }
}

/// Column space of `m`, i.e. `ran m`.
pub fn column_space<S: Scalar>(m: &Matrix<S>, tol: &Tol) -> Subspace<S> {
    Subspace::span(m, tol)
}

pub fn subspace_sum<S: Scalar>(u: &Subspace<S>, v: &Subspace<S>, tol: &Tol) -> Result<Subspace<S>> {
    u.check_ambient(v)?;
    Ok(Subspace {
        basis: S::sum_bases(&u.basis, &v.basis, tol),
    })
}

/// `u ∩ v`, via the kernel of `[U | −V]` on the exact backend and via
/// principal angles on the float backend.
pub fn subspace_intersect<S: Scalar>(u: &Subspace<S>, v: &Subspace<S>, tol: &Tol) -> Result<Subspace<S>> {
    u.check_ambient(v)?;
    Ok(Subspace {
        basis: S::intersect_bases(&u.basis, &v.basis, tol),
    })
}

/// `{x : m·x ∈ v}`, read off from the kernel of `[m | −V]`.
pub fn subspace_preimage<S: Scalar>(m: &Matrix<S>, v: &Subspace<S>, tol: &Tol) -> Result<Subspace<S>> {
    let n = v.ambient_dim();
    if m.rows() != n || !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.rows(),
        });
    }
    let stacked = m.hstack(&v.basis.scale(&-S::one()))?;
    let kernel = S::null_space(&stacked, tol);
    let top: Vec<usize> = (0..m.cols()).collect();
    Ok(Subspace::span(&kernel.select_rows(&top), tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Complex64, GaussianRational};

    type Q = GaussianRational;

    fn q(rows: &[&[i64]]) -> Matrix<Q> {
        Matrix::from_ints(rows).unwrap()
    }

    fn e(n: usize, i: usize) -> Vec<Q> {
        (0..n).map(|k| Q::from_parts((k == i) as i64, 0)).collect()
    }

    fn t() -> Tol {
        Tol::default()
    }

    #[test]
    fn column_space_examples() {
        let cs = column_space(&q(&[&[1, 1], &[1, 1]]), &t());
        assert_eq!(cs.dim(), 1);
        assert!(cs
            .contains_vector(&[Q::from_parts(1, 0), Q::from_parts(1, 0)], &t())
            .unwrap());

        let d = column_space(&q(&[&[1, 0, 0], &[0, 0, 0], &[0, 0, 2]]), &t());
        let expected = Subspace::span_of(3, &[e(3, 0), e(3, 2)], &t());
        assert!(d.same_as(&expected, &t()).unwrap());

        let m = q(&[&[1, 2, 0], &[0, 1, 1], &[1, 3, 1]]);
        let g = q(&[&[2, 1, 0], &[0, 1, 0], &[1, 0, 1]]);
        assert!(column_space(&m, &t())
            .same_as(&column_space(&(&m * &g), &t()), &t())
            .unwrap());
    }

    #[test]
    fn sum_examples() {
        let e1 = Subspace::span_of(3, &[e(3, 0)], &t());
        let e2 = Subspace::span_of(3, &[e(3, 1)], &t());
        let s = subspace_sum(&e1, &e2, &t()).unwrap();
        assert!(s
            .same_as(&Subspace::span_of(3, &[e(3, 0), e(3, 1)], &t()), &t())
            .unwrap());
        assert!(subspace_sum(&e1, &Subspace::zero(3), &t())
            .unwrap()
            .same_as(&e1, &t())
            .unwrap());

        let a = column_space(&q(&[&[1], &[1]]), &t());
        let b = column_space(&q(&[&[1], &[-1]]), &t());
        assert!(subspace_sum(&a, &b, &t()).unwrap().is_full());
    }

    #[test]
    fn intersect_examples() {
        let u = Subspace::span_of(3, &[e(3, 0), e(3, 1)], &t());
        let v = Subspace::span_of(3, &[e(3, 1), e(3, 2)], &t());
        let w = subspace_intersect(&u, &v, &t()).unwrap();
        assert!(w.same_as(&Subspace::span_of(3, &[e(3, 1)], &t()), &t()).unwrap());

        let a = column_space(&q(&[&[1], &[1]]), &t());
        let b = column_space(&q(&[&[1], &[0]]), &t());
        assert!(subspace_intersect(&a, &b, &t()).unwrap().is_zero());
        assert!(subspace_intersect(&u, &u, &t()).unwrap().same_as(&u, &t()).unwrap());
    }

    #[test]
    fn ambient_mismatch_is_an_error() {
        let a = Subspace::<Q>::full(2);
        let b = Subspace::<Q>::full(3);
        assert!(subspace_sum(&a, &b, &t()).is_err());
        assert!(subspace_intersect(&a, &b, &t()).is_err());
    }

    #[test]
    fn preimage_examples_exact() {
        let m = q(&[&[1, 2], &[3, 4]]);
        assert!(subspace_preimage(&m, &Subspace::full(2), &t()).unwrap().is_full());
        assert!(subspace_preimage(&m, &Subspace::zero(2), &t()).unwrap().is_zero());
        // Singular m: the kernel always belongs to the preimage.
        let ones = q(&[&[1, 1], &[1, 1]]);
        let pre = subspace_preimage(&ones, &Subspace::zero(2), &t()).unwrap();
        assert!(pre.same_as(&column_space(&q(&[&[1], &[-1]]), &t()), &t()).unwrap());
    }

    #[test]
    fn preimage_under_sqrt_of_ones() {
        // ones(2)^{1/2} = ones(2)/√2; m·x ∈ span{e1} forces x1 + x2 = 0.
        let r = 1.0 / 2f64.sqrt();
        let m = Matrix::from_fn(2, 2, |_, _| Complex64::new(r, 0.0));
        let e1 = Subspace::span(
            &Matrix::column_vector(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]),
            &t(),
        );
        let pre = subspace_preimage(&m, &e1, &t()).unwrap();
        assert_eq!(pre.dim(), 1);
        let expected = Subspace::span(
            &Matrix::column_vector(&[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]),
            &t(),
        );
        assert!(pre.same_as(&expected, &t()).unwrap());
    }
}

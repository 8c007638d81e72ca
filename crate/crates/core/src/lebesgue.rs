//! Lebesgue decomposition `A = A_ac + A_s` of a positive operator with
//! respect to another one.
//!
//! `A_ac` is the largest positive `C ≤ A` with `C ≪ B`. With `S = A^{1/2}`
//! and `M = {x : Sx ∈ ran B}` it equals `S P_M S`, and `A_s = S (I − P_M) S`
//! is singular to `B`.

use rand::Rng;

use crate::generators::{derive_seed, random_matrix, rng};
use crate::linalg::{float_eigenvalues, pinv, psd_sqrt, subspace_intersect, subspace_preimage};
use crate::linalg::{Complex64, Matrix, PsdOperator, Scalar, Subspace, Tol};
use crate::relations::{is_abs_continuous, is_singular};
use crate::{Error, Result};

type C = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct LebesgueDecomposition<S> {
    pub ac: PsdOperator<S>,
    pub singular: PsdOperator<S>,
}

/// `M = {x : A^{1/2} x ∈ ran B}`.
pub fn ac_domain<S: Scalar>(a: &PsdOperator<S>, b: &PsdOperator<S>, tol: &Tol) -> Result<Subspace<S>> {
    check_dims(a, b)?;
    let root = psd_sqrt(a, tol)?;
    subspace_preimage(root.matrix(), &b.range(tol), tol)
}

fn check_dims<S: Scalar>(a: &PsdOperator<S>, b: &PsdOperator<S>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Splits `A` into its `B`-absolutely continuous and `B`-singular parts.
///
/// When `A ≪ B` (in particular when `B` is invertible) the result is
/// `(A, 0)`, and when `A ⊥ B` it is `(0, A)`; these cases are also available
/// on the exact backend. Every other case needs a square root and therefore
/// the float backend.
pub fn decompose<S: Scalar>(a: &PsdOperator<S>, b: &PsdOperator<S>, tol: &Tol) -> Result<LebesgueDecomposition<S>> {
    check_dims(a, b)?;
    let n = a.dim();
    if b.is_invertible() || is_abs_continuous(a, b, tol)? {
        return Ok(LebesgueDecomposition {
            ac: a.clone(),
            singular: PsdOperator::zero(n),
        });
    }
    if is_singular(a, b, tol)? {
        return Ok(LebesgueDecomposition {
            ac: PsdOperator::zero(n),
            singular: a.clone(),
        });
    }
    let root = psd_sqrt(a, tol)?;
    let s = root.matrix();
    let p = subspace_preimage(s, &b.range(tol), tol)?.projector();
    let q = &Matrix::identity(n) - &p;
    Ok(LebesgueDecomposition {
        ac: PsdOperator::new(&(s * &p) * s, tol)?,
        singular: PsdOperator::new(&(s * &q) * s, tol)?,
    })
}

/// Result of [`verify_decomposition`].
#[derive(Clone, Debug, PartialEq)]
pub struct LebesgueReport {
    /// Largest entry of `|A_ac + A_s − A|`.
    pub sum_residual: f64,
    pub ac_is_abs_continuous: bool,
    pub singular_is_singular: bool,
    /// Sampled `C` that passed the `C ≪ B` filter.
    pub samples: usize,
    pub maximality_violations: usize,
    /// Smallest eigenvalue of `A_ac + slack·I − C` seen over all samples.
    pub worst_margin: f64,
}

impl LebesgueReport {
    pub fn passed(&self, sum_tol: f64) -> bool {
        self.sum_residual <= sum_tol
            && self.ac_is_abs_continuous
            && self.singular_is_singular
            && self.maximality_violations == 0
    }
}

/// Checks a decomposition against `A` and `B`.
///
/// Maximality is tested on operators `C = S R S` with `0 ≤ R ≤ I`, so
/// `C ≤ A`, keeping those with `C ≪ B`. An unrestricted random `R` rarely
/// passes that filter, so most samples draw `R ≤ P_U` with
/// `U = S⁺(ran A ∩ ran B)`, which is computed from the range intersection
/// rather than from the preimage used by [`decompose`]. Every fourth sample
/// takes `R = P_U`, the extremal case.
pub fn verify_decomposition(
    a: &PsdOperator<C>,
    b: &PsdOperator<C>,
    d: &LebesgueDecomposition<C>,
    samples: usize,
    seed: u64,
    slack: f64,
    tol: &Tol,
) -> Result<LebesgueReport> {
    check_dims(a, b)?;
    let n = a.dim();
    let sum = d.ac.matrix() + d.singular.matrix();
    let sum_residual = sum.max_diff(a.matrix());
    let ac_is_abs_continuous = is_abs_continuous(&d.ac, b, tol)?;
    let singular_is_singular = is_singular(&d.singular, b, tol)?;

    let root = psd_sqrt(a, tol)?;
    let s = root.matrix();
    let shared = subspace_intersect(&a.range(tol), &b.range(tol), tol)?;
    let u = Subspace::span(&(&pinv(s, tol) * shared.basis()), tol);
    let basis = u.basis();
    let k = basis.cols();
    let shifted = d.ac.matrix() + &Matrix::identity(n).scale(&C::new(slack, 0.0));

    let mut violations = 0;
    let mut candidates = 0;
    let mut worst = f64::INFINITY;
    for i in 0..samples {
        let mut r = rng(derive_seed(seed, i as u64));
        let rr = match i % 4 {
            0 => basis * &basis.adjoint(),
            1 => contraction(n, &mut r),
            _ => &(basis * &contraction(k, &mut r)) * &basis.adjoint(),
        };
        let c = &(s * &rr) * s;
        if i % 4 == 1 {
            let cp = PsdOperator::new(c.clone(), tol)?;
            if !is_abs_continuous(&cp, b, tol)? {
                continue;
            }
        }
        candidates += 1;
        let margin = float_eigenvalues(&(&shifted - &c))
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let margin = if n == 0 { 0.0 } else { margin };
        worst = worst.min(margin);
        if margin < 0.0 {
            violations += 1;
        }
    }
    Ok(LebesgueReport {
        sum_residual,
        ac_is_abs_continuous,
        singular_is_singular,
        samples: candidates,
        maximality_violations: violations,
        worst_margin: if candidates == 0 { 0.0 } else { worst },
    })
}

/// Random `H` with `0 ≤ H ≤ I`: a normalized Gram matrix of random rank,
/// scaled by a uniform factor in `[0, 1]`.
fn contraction<R: Rng>(k: usize, r: &mut R) -> Matrix<C> {
    if k == 0 {
        return Matrix::zeros(0, 0);
    }
    let cols = r.random_range(1..=k);
    let g = random_matrix::<C, _>(k, cols, r);
    let gram = &g * &g.adjoint();
    let top = float_eigenvalues(&gram).into_iter().fold(0.0, f64::max);
    if top == 0.0 {
        return Matrix::zeros(k, k);
    }
    let scale: f64 = r.random_range(0.0..=1.0);
    gram.scale(&C::new(scale / top, 0.0))
}

//! Seeded random generation of positive operators, semilinear operators and
//! pairs in a prescribed relation.
//!
//! Every generator derives a fresh ChaCha stream per attempt from
//! `(seed, attempt)`, re-certifies its advertised property and retries at
//! most [`RETRY_BUDGET`] times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{Backend, GaussianRational, Matrix, PsdOperator, Scalar, Tol};
use crate::preserver::{Flavor, SemilinearOperator};
use crate::relations::{is_abs_continuous, is_singular, same_range_class};
use crate::{Error, Result};

pub const RETRY_BUDGET: u64 = 64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child seed for trial `index`, mixed with splitmix64.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn random_matrix<S: Scalar, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix<S> {
    Matrix::from_fn(rows, cols, |_, _| S::sample(rng))
}

fn gram<S: Scalar>(g: &Matrix<S>) -> Matrix<S> {
    g * &g.adjoint()
}

/// `G·G*` for a random `dim × rank` matrix `G`, with certified rank.
pub fn random_psd<S: Scalar>(dim: usize, rank: usize, seed: u64) -> Result<PsdOperator<S>> {
    if rank > dim {
        return Err(Error::Unsupported(format!("rank {rank} exceeds dimension {dim}")));
    }
    let tol = Tol::default();
    for attempt in 0..RETRY_BUDGET {
        let mut r = rng(derive_seed(seed, attempt));
        let g = random_matrix::<S, _>(dim, rank, &mut r);
        let a = PsdOperator::new(gram(&g), &tol)?;
        if a.rank() == rank {
            return Ok(a);
        }
    }
    Err(Error::RetryBudget("positive operator of prescribed rank"))
}

/// `f·f*`.
pub fn rank_one<S: Scalar>(f: &[S]) -> Result<PsdOperator<S>> {
    if f.iter().all(S::is_zero) {
        return Err(Error::ZeroVector);
    }
    let g = gram(&Matrix::column_vector(f));
    if S::BACKEND == Backend::Exact {
        return Ok(PsdOperator::certified(g, 1));
    }
    PsdOperator::new(g, &Tol::default())
}

/// Invertible Gaussian-integer matrix with the requested flavor.
pub fn random_semilinear(dim: usize, seed: u64, flavor: Flavor) -> Result<SemilinearOperator> {
    for attempt in 0..RETRY_BUDGET {
        let mut r = rng(derive_seed(seed, attempt));
        let t = random_matrix::<GaussianRational, _>(dim, dim, &mut r);
        if let Ok(op) = SemilinearOperator::new(t, flavor) {
            return Ok(op);
        }
    }
    Err(Error::RetryBudget("invertible semilinear operator"))
}

/// Relation class requested from [`random_pair_with_relation`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairRelation {
    /// `A ⊥ B`.
    Singular,
    /// `A ≪ B`; half the draws have `rank A < rank B`, the other half
    /// `ran A = ran B`.
    AbsContinuous,
    /// Neither `A ≪ B`, `B ≪ A` nor `A ⊥ B`.
    Incomparable,
}

/// A pair `(A, B)` certified to be in the requested relation.
pub fn random_pair_with_relation<S: Scalar>(
    dim: usize,
    relation: PairRelation,
    seed: u64,
) -> Result<(PsdOperator<S>, PsdOperator<S>)> {
    match relation {
        PairRelation::Singular | PairRelation::Incomparable if dim < 2 => {
            return Err(Error::Unsupported(format!("{relation:?} pairs need dimension ≥ 2")));
        }
        // In dimension 2 two nonsingular ranges always nest or coincide.
        PairRelation::Incomparable if dim < 3 => {
            return Err(Error::Unsupported("incomparable pairs need dimension ≥ 3".into()));
        }
        _ => {}
    }
    let tol = Tol::default();
    for attempt in 0..RETRY_BUDGET {
        let mut r = rng(derive_seed(seed, attempt));
        let pair = match relation {
            PairRelation::Singular => singular_candidate::<S, _>(dim, &mut r)?,
            PairRelation::AbsContinuous => ac_candidate::<S, _>(dim, &mut r)?,
            PairRelation::Incomparable => incomparable_candidate::<S, _>(dim, &mut r)?,
        };
        let Some((a, b, strict)) = pair else { continue };
        let ok = match relation {
            PairRelation::Singular => is_singular(&a, &b, &tol)?,
            PairRelation::AbsContinuous => {
                is_abs_continuous(&a, &b, &tol)?
                    && match strict {
                        Some(true) => a.rank() < b.rank(),
                        Some(false) => same_range_class(&a, &b, &tol)?,
                        None => true,
                    }
            }
            PairRelation::Incomparable => {
                !is_abs_continuous(&a, &b, &tol)? && !is_abs_continuous(&b, &a, &tol)? && !is_singular(&a, &b, &tol)?
            }
        };
        if ok {
            return Ok((a, b));
        }
    }
    Err(Error::RetryBudget("pair with prescribed relation"))
}

type Candidate<S> = Option<(PsdOperator<S>, PsdOperator<S>, Option<bool>)>;

fn psd_of<S: Scalar>(g: &Matrix<S>, expected_rank: usize) -> Result<Option<PsdOperator<S>>> {
    let a = PsdOperator::new(gram(g), &Tol::default())?;
    Ok((a.rank() == expected_rank).then_some(a))
}

fn singular_candidate<S: Scalar, R: Rng>(dim: usize, r: &mut R) -> Result<Candidate<S>> {
    let ra = r.random_range(0..=dim);
    let rb = r.random_range(0..=dim - ra);
    let (Some(a), Some(b)) = (
        psd_of(&random_matrix::<S, _>(dim, ra, r), ra)?,
        psd_of(&random_matrix::<S, _>(dim, rb, r), rb)?,
    ) else {
        return Ok(None);
    };
    Ok(Some((a, b, None)))
}

fn ac_candidate<S: Scalar, R: Rng>(dim: usize, r: &mut R) -> Result<Candidate<S>> {
    let rb = r.random_range(1..=dim);
    let v = random_matrix::<S, _>(dim, rb, r);
    let Some(b) = psd_of(&v, rb)? else { return Ok(None) };
    let strict = r.random_bool(0.5);
    let ra = if strict { r.random_range(0..rb) } else { rb };
    let k = random_matrix::<S, _>(rb, ra, r);
    let Some(a) = psd_of(&(&v * &k), ra)? else {
        return Ok(None);
    };
    Ok(Some((a, b, Some(strict))))
}

fn incomparable_candidate<S: Scalar, R: Rng>(dim: usize, r: &mut R) -> Result<Candidate<S>> {
    let common = r.random_range(1..=dim - 2);
    let extra_a = r.random_range(1..=dim - common - 1);
    let extra_b = r.random_range(1..=dim - common - extra_a);
    let w = random_matrix::<S, _>(dim, common, r);
    let ea = random_matrix::<S, _>(dim, extra_a, r);
    let eb = random_matrix::<S, _>(dim, extra_b, r);
    let (Some(a), Some(b)) = (
        psd_of(&w.hstack(&ea)?, common + extra_a)?,
        psd_of(&w.hstack(&eb)?, common + extra_b)?,
    ) else {
        return Ok(None);
    };
    Ok(Some((a, b, None)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Complex64;
    use crate::relations::{is_invertible_positive, leq, min_domination_constant};

    type Q = GaussianRational;

    #[test]
    fn random_psd_examples() {
        assert!(random_psd::<Q>(3, 0, 1).unwrap().matrix().is_zero());
        assert!(is_invertible_positive(&random_psd::<Q>(3, 3, 2).unwrap()));
        for s in 0..20 {
            let a = random_psd::<Q>(4, 2, s).unwrap();
            assert_eq!(crate::linalg::rank(a.matrix()), 2);
        }
        assert!(random_psd::<Q>(2, 3, 0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(random_psd::<Q>(4, 3, 99).unwrap(), random_psd::<Q>(4, 3, 99).unwrap());
        assert_eq!(
            random_psd::<Complex64>(4, 3, 99).unwrap(),
            random_psd::<Complex64>(4, 3, 99).unwrap()
        );
        assert_ne!(random_psd::<Q>(4, 3, 99).unwrap(), random_psd::<Q>(4, 3, 100).unwrap());
    }

    #[test]
    fn rank_one_examples() {
        let e1 = rank_one(&[Q::from_parts(1, 0), Q::from_parts(0, 0), Q::from_parts(0, 0)]).unwrap();
        assert_eq!(e1, PsdOperator::diag_ints(&[1, 0, 0]).unwrap());
        let ones = rank_one(&[Q::from_parts(1, 0), Q::from_parts(1, 0)]).unwrap();
        assert_eq!(ones.matrix(), &Matrix::from_ints(&[&[1, 1], &[1, 1]]).unwrap());
        assert!(matches!(rank_one::<Q>(&[Q::from_parts(0, 0)]), Err(Error::ZeroVector)));
    }

    #[test]
    fn rank_one_domination_against_diag() {
        let a = PsdOperator::<Q>::diag_ints(&[1, 2]).unwrap();
        let inside = rank_one(&[Q::from_parts(1, 0), Q::from_parts(1, 0)]).unwrap();
        let c = min_domination_constant(&inside, &a, &Tol::default()).unwrap().unwrap();
        // (1,1)(1,1)* ≤ c·diag(1,2) first holds at c = 3/2.
        assert!((c - 1.5).abs() < 1e-12);
        let c_ok = crate::linalg::real_fraction(3, 2);
        assert!(leq(&inside, &a.scaled(&c_ok), &Tol::default()).unwrap());

        let b = PsdOperator::<Q>::diag_ints(&[1, 0]).unwrap();
        let outside = rank_one(&[Q::from_parts(0, 0), Q::from_parts(1, 0)]).unwrap();
        assert_eq!(min_domination_constant(&outside, &b, &Tol::default()).unwrap(), None);
        let big = Q::from_parts(1 << 40, 0);
        assert!(!leq(&outside, &b.scaled(&big), &Tol::default()).unwrap());
    }

    #[test]
    fn semilinear_generator() {
        let one = random_semilinear(1, 5, Flavor::Linear).unwrap();
        assert!(!one.matrix()[(0, 0)].is_zero());
        for s in 0..100 {
            let t = random_semilinear(3, s, Flavor::Conjugate).unwrap();
            assert!(Q::inverse(t.matrix()).is_some());
        }
    }

    #[test]
    fn relation_pairs_are_certified() {
        let t = Tol::default();
        for s in 0..30 {
            let (a, b) = random_pair_with_relation::<Q>(3, PairRelation::Singular, s).unwrap();
            assert!(is_singular(&a, &b, &t).unwrap());
            let (a, b) = random_pair_with_relation::<Q>(3, PairRelation::AbsContinuous, s).unwrap();
            assert!(is_abs_continuous(&a, &b, &t).unwrap());
            let (a, b) = random_pair_with_relation::<Q>(4, PairRelation::Incomparable, s).unwrap();
            assert!(!is_abs_continuous(&a, &b, &t).unwrap());
            assert!(!is_singular(&a, &b, &t).unwrap());
        }
        assert!(random_pair_with_relation::<Q>(2, PairRelation::Incomparable, 0).is_err());
    }

    #[test]
    fn ac_with_invertible_base_accepts_any_operator() {
        let b = random_psd::<Q>(3, 3, 11).unwrap();
        for r in 0..=3 {
            let a = random_psd::<Q>(3, r, 12 + r as u64).unwrap();
            assert!(is_abs_continuous(&a, &b, &Tol::default()).unwrap());
        }
    }
}

//! Maps on the positive cone that preserve absolute continuity and
//! singularity in both directions, and samplers that check them.
//!
//! Three families are constructed:
//!
//! * congruences `A ↦ T σ(A) T*`, with `σ` the identity or entrywise
//!   conjugation depending on the flavor of `T`;
//! * form-(iv) maps `A ↦ (TAT*)^{1/2} Z_A (TAT*)^{1/2}` with a seeded family
//!   of invertible positive `Z_A`;
//! * wild maps, which fix every non-invertible operator and permute the
//!   invertible ones by `A ↦ V A^{±1} V*`.
//!
//! The verifiers only see finitely many samples, so a passing report is a
//! necessary condition for the preserver property, never a proof of it.

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::generators::{derive_seed, random_matrix, random_pair_with_relation, random_psd, random_semilinear, rng};
use crate::generators::{rank_one, PairRelation};
use crate::linalg::{
    float_eigenvalues, psd_sqrt, Backend, GaussianRational, Matrix, PsdOperator, RankTol, Scalar, Subspace, Tol,
};
use crate::relations::{is_abs_continuous, is_singular};
use crate::{Error, Result};

type Q = GaussianRational;

/// Whether a semilinear operator is linear or conjugate-linear.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flavor {
    Linear,
    Conjugate,
}

impl Flavor {
    pub fn as_str(self) -> &'static str {
        match self {
            Flavor::Linear => "linear",
            Flavor::Conjugate => "conjugate",
        }
    }

    fn apply<S: Scalar>(self, x: &S) -> S {
        match self {
            Flavor::Linear => x.clone(),
            Flavor::Conjugate => x.conj(),
        }
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Flavor::Linear),
            "conjugate" => Ok(Flavor::Conjugate),
            other => Err(Error::Unsupported(format!("unknown flavor {other:?}"))),
        }
    }
}

/// `x ↦ T·x` or `x ↦ T·conj(x)` for an invertible Gaussian-rational `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct SemilinearOperator {
    t: Matrix<Q>,
    flavor: Flavor,
}

impl SemilinearOperator {
    pub fn new(t: Matrix<Q>, flavor: Flavor) -> Result<Self> {
        if !t.is_square() {
            return Err(Error::NotSquare {
                rows: t.rows(),
                cols: t.cols(),
            });
        }
        if crate::linalg::rank(&t) < t.rows() {
            return Err(Error::Singular);
        }
        Ok(SemilinearOperator { t, flavor })
    }

    pub fn identity(n: usize, flavor: Flavor) -> Self {
        SemilinearOperator {
            t: Matrix::identity(n),
            flavor,
        }
    }

    pub fn matrix(&self) -> &Matrix<Q> {
        &self.t
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn dim(&self) -> usize {
        self.t.rows()
    }

    pub fn apply_vector<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let sx: Vec<S> = x.iter().map(|v| self.flavor.apply(v)).collect();
        self.t.to_backend::<S>().mul_vec(&sx)
    }

    /// Entrywise `σ` applied to a matrix.
    pub fn twist<S: Scalar>(&self, m: &Matrix<S>) -> Matrix<S> {
        m.map(|x| self.flavor.apply(x))
    }

    pub fn apply_subspace<S: Scalar>(&self, u: &Subspace<S>, tol: &Tol) -> Result<Subspace<S>> {
        if u.ambient_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.ambient_dim(),
            });
        }
        Ok(Subspace::span(
            &(&self.t.to_backend::<S>() * &self.twist(u.basis())),
            tol,
        ))
    }

    /// `T σ(A) T*`.
    pub fn congruence<S: Scalar>(&self, a: &Matrix<S>) -> Matrix<S> {
        let t = self.t.to_backend::<S>();
        &(&t * &self.twist(a)) * &t.adjoint()
    }
}

/// Seeded rule `A ↦ Z_A` producing invertible positive operators.
///
/// `Z_A = G G* + I` where `G` is drawn from a stream seeded by the family
/// seed mixed with a SHA-256 digest of `A`'s canonical encoding, so equal
/// inputs always receive equal `Z_A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZFamily {
    pub seed: u64,
}

impl ZFamily {
    pub fn new(seed: u64) -> Self {
        ZFamily { seed }
    }

    pub fn z_for<S: Scalar>(&self, a: &Matrix<S>) -> Matrix<S> {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&(a.rows() as u64).to_le_bytes());
        bytes.extend_from_slice(&(a.cols() as u64).to_le_bytes());
        for x in a.data() {
            x.write_canonical(&mut bytes);
        }
        let digest = Sha256::digest(&bytes);
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        let mut r = rng(self.seed ^ u64::from_le_bytes(head));
        let n = a.rows();
        let g = random_matrix::<S, _>(n, n, &mut r);
        &(&g * &g.adjoint()) + &Matrix::identity(n)
    }
}

/// Parameters of a wild map: `V` and whether invertible inputs are inverted
/// before the congruence by `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct WildMap {
    pub seed: Option<u64>,
    pub v: Matrix<Q>,
    pub invert: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    Congruence(SemilinearOperator),
    FormIv {
        t: SemilinearOperator,
        z: ZFamily,
    },
    Wild(WildMap),
    /// Applied left to right: `parts[0]` first.
    Composite(Vec<PreserverSpec>),
}

/// A map on the positive cone of a fixed dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct PreserverSpec {
    kind: MapKind,
    dim: usize,
}

impl PreserverSpec {
    pub fn congruence(t: SemilinearOperator) -> Self {
        let dim = t.dim();
        PreserverSpec {
            kind: MapKind::Congruence(t),
            dim,
        }
    }

    pub fn form_iv(t: SemilinearOperator, z: ZFamily) -> Self {
        let dim = t.dim();
        PreserverSpec {
            kind: MapKind::FormIv { t, z },
            dim,
        }
    }

    /// Wild map with an explicit `V` (must be invertible).
    pub fn wild_with(v: Matrix<Q>, invert: bool) -> Result<Self> {
        let dim = v.rows();
        SemilinearOperator::new(v.clone(), Flavor::Linear)?;
        Ok(PreserverSpec {
            kind: MapKind::Wild(WildMap { seed: None, v, invert }),
            dim,
        })
    }

    pub fn composite(parts: Vec<PreserverSpec>) -> Result<Self> {
        let dim = parts
            .first()
            .map(|p| p.dim)
            .ok_or_else(|| Error::Unsupported("composite map needs at least one part".into()))?;
        if let Some(p) = parts.iter().find(|p| p.dim != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim,
            });
        }
        Ok(PreserverSpec {
            kind: MapKind::Composite(parts),
            dim,
        })
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Whether the map can be evaluated on the exact backend.
    pub fn supports_exact(&self) -> bool {
        match &self.kind {
            MapKind::FormIv { .. } => false,
            MapKind::Composite(parts) => parts.iter().all(PreserverSpec::supports_exact),
            _ => true,
        }
    }
}

/// Fixes all non-invertible operators and applies `A ↦ V A^{s} V*` with a
/// seeded invertible `V` and seeded `s ∈ {1, −1}` on invertible ones.
pub fn make_wild_map(seed: u64, dim: usize) -> Result<PreserverSpec> {
    let v = random_semilinear(dim, derive_seed(seed, 0), Flavor::Linear)?
        .matrix()
        .clone();
    let invert = derive_seed(seed, 1) & 1 == 1;
    Ok(PreserverSpec {
        kind: MapKind::Wild(WildMap {
            seed: Some(seed),
            v,
            invert,
        }),
        dim,
    })
}

/// A map of the positive cone into itself.
pub trait PsdMap<S: Scalar>: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, a: &PsdOperator<S>, tol: &Tol) -> Result<PsdOperator<S>>;
}

impl<S: Scalar> PsdMap<S> for PreserverSpec {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, a: &PsdOperator<S>, tol: &Tol) -> Result<PsdOperator<S>> {
        if a.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: a.dim(),
            });
        }
        match &self.kind {
            MapKind::Congruence(t) if S::BACKEND == Backend::Exact => {
                // Congruence by an invertible operator keeps positivity and
                // rank, and exact arithmetic keeps the product Hermitian.
                Ok(PsdOperator::certified(t.congruence(a.matrix()), a.rank()))
            }
            MapKind::Congruence(t) => PsdOperator::new(t.congruence(a.matrix()), tol),
            MapKind::FormIv { t, z } => {
                if S::BACKEND == Backend::Exact {
                    return Err(Error::ExactBackend("form-(iv) map"));
                }
                let inner = PsdOperator::new(t.congruence(a.matrix()), tol)?;
                // Only roundoff is clipped here, so small eigenvalues of the
                // inner congruence stay visible in the image.
                let root = psd_sqrt(&inner, &Tol::new(RankTol::Auto, tol.angle))?;
                let zf = z.z_for(a.matrix());
                PsdOperator::new(&(root.matrix() * &zf) * root.matrix(), tol)
            }
            MapKind::Wild(w) => {
                if !a.is_invertible() {
                    return Ok(a.clone());
                }
                let x = if w.invert {
                    S::inverse(a.matrix()).ok_or(Error::Singular)?
                } else {
                    a.matrix().clone()
                };
                let v = w.v.to_backend::<S>();
                PsdOperator::new(&(&v * &x) * &v.adjoint(), tol)
            }
            MapKind::Composite(parts) => parts.iter().try_fold(a.clone(), |acc, p| p.apply(&acc, tol)),
        }
    }
}

/// `φ(A)` for a preserver spec.
pub fn apply_map<S: Scalar>(spec: &PreserverSpec, a: &PsdOperator<S>, tol: &Tol) -> Result<PsdOperator<S>> {
    spec.apply(a, tol)
}

/// Ad-hoc map given by a closure, used for hand-built counterexamples.
pub struct FnMap<F> {
    dim: usize,
    f: F,
}

impl<F> FnMap<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnMap { dim, f }
    }
}

impl<S, F> PsdMap<S> for FnMap<F>
where
    S: Scalar,
    F: Fn(&PsdOperator<S>) -> Result<PsdOperator<S>> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, a: &PsdOperator<S>, _tol: &Tol) -> Result<PsdOperator<S>> {
        (self.f)(a)
    }
}

/// Which relation a preservation check failed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    AbsContinuousAB,
    AbsContinuousBA,
    Singular,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::AbsContinuousAB => "abs_cont_ab",
            Relation::AbsContinuousBA => "abs_cont_ba",
            Relation::Singular => "singular",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub relation: Relation,
    pub before: bool,
    pub after: bool,
    pub a: PsdOperator<Q>,
    pub b: PsdOperator<Q>,
}

/// Float rank decisions are trusted only when no eigenvalue lies within
/// this factor of the rank threshold.
pub const RESOLUTION_GAP: f64 = 100.0;

/// Whether the rank of `p` is unambiguous at `tol`: no eigenvalue in
/// `(τ/G, G·τ)` for the rank threshold `τ` and `G = RESOLUTION_GAP`.
/// Always true on the exact backend, and when `τ/G` is at roundoff level,
/// where the window carries no information.
pub fn rank_resolved<S: Scalar>(p: &PsdOperator<S>, tol: &Tol) -> bool {
    if S::BACKEND == Backend::Exact || p.dim() == 0 {
        return true;
    }
    let vals = float_eigenvalues(&p.matrix().to_float());
    let top = vals.iter().copied().fold(0.0, f64::max);
    let thr = tol.threshold(p.dim(), p.dim(), top);
    if thr / RESOLUTION_GAP <= 16.0 * p.dim() as f64 * f64::EPSILON * top {
        return true;
    }
    !vals
        .iter()
        .any(|&l| l > thr / RESOLUTION_GAP && l < thr * RESOLUTION_GAP)
}

#[derive(Clone, Debug, Default)]
pub struct PreservationReport {
    pub pairs_checked: usize,
    /// Pairs skipped because an image's rank was not resolved at the
    /// tolerance (see [`rank_resolved`]).
    pub ambiguous: usize,
    pub violations: Vec<Violation>,
    /// Inputs on which the map itself failed (not PSD, wrong backend, ...).
    pub map_errors: Vec<String>,
}

impl PreservationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.map_errors.is_empty()
    }

    fn merge(mut self, other: Self) -> Self {
        self.pairs_checked += other.pairs_checked;
        self.ambiguous += other.ambiguous;
        self.violations.extend(other.violations);
        self.map_errors.extend(other.map_errors);
        self
    }
}

/// Random exact pair covering every relation class and rank combination.
pub fn sample_pair(dim: usize, seed: u64) -> Result<(PsdOperator<Q>, PsdOperator<Q>)> {
    let mut r = rng(seed);
    let class = rand::Rng::random_range(&mut r, 0..5u8);
    let child = derive_seed(seed, 1);
    match class {
        0 if dim >= 2 => random_pair_with_relation(dim, PairRelation::Singular, child),
        1 => random_pair_with_relation(dim, PairRelation::AbsContinuous, child),
        2 => random_pair_with_relation(dim, PairRelation::AbsContinuous, child).map(|(a, b)| (b, a)),
        3 if dim >= 3 => random_pair_with_relation(dim, PairRelation::Incomparable, child),
        _ => {
            let ra = rand::Rng::random_range(&mut r, 0..=dim);
            let rb = rand::Rng::random_range(&mut r, 0..=dim);
            Ok((random_psd(dim, ra, child)?, random_psd(dim, rb, derive_seed(seed, 2))?))
        }
    }
}

/// Checks `A ≪ B ⟺ φ(A) ≪ φ(B)` (both orders) and `A ⊥ B ⟺ φ(A) ⊥ φ(B)` on
/// `trials` sampled exact pairs. Input relations are decided exactly; image
/// relations on backend `S` with `tol`.
pub fn verify_relation_preservation<S: Scalar, M: PsdMap<S>>(
    map: &M,
    trials: usize,
    seed: u64,
    tol: &Tol,
) -> Result<PreservationReport> {
    let dim = map.dim();
    let budget = 2 * trials as u64 + 16;
    let mut report = PreservationReport::default();
    let mut next = 0;
    // Pairs with unresolved images are replaced by fresh draws, up to the
    // attempt budget.
    while report.pairs_checked + report.map_errors.len() < trials && next < budget {
        let want = (trials - report.pairs_checked - report.map_errors.len()) as u64;
        let end = (next + want).min(budget);
        let pairs = (next..end)
            .into_par_iter()
            .map(|i| sample_pair(dim, derive_seed(seed, i)))
            .collect::<Result<Vec<_>>>()?;
        next = end;
        report = report.merge(verify_relation_preservation_on(map, &pairs, tol));
    }
    Ok(report)
}

/// Same check on explicit pairs.
pub fn verify_relation_preservation_on<S: Scalar, M: PsdMap<S>>(
    map: &M,
    pairs: &[(PsdOperator<Q>, PsdOperator<Q>)],
    tol: &Tol,
) -> PreservationReport {
    pairs
        .par_iter()
        .map(|(a, b)| check_pair(map, a, b, tol))
        .reduce(PreservationReport::default, PreservationReport::merge)
}

fn check_pair<S: Scalar, M: PsdMap<S>>(
    map: &M,
    a: &PsdOperator<Q>,
    b: &PsdOperator<Q>,
    tol: &Tol,
) -> PreservationReport {
    let mut report = PreservationReport {
        pairs_checked: 1,
        ..Default::default()
    };
    let exact = Tol::default();
    let images = (|| -> Result<_> {
        let before = [
            is_abs_continuous(a, b, &exact)?,
            is_abs_continuous(b, a, &exact)?,
            is_singular(a, b, &exact)?,
        ];
        let pa = map.apply(&a.to_backend::<S>(tol)?, tol)?;
        let pb = map.apply(&b.to_backend::<S>(tol)?, tol)?;
        if !rank_resolved(&pa, tol) || !rank_resolved(&pb, tol) {
            return Ok(None);
        }
        let after = [
            is_abs_continuous(&pa, &pb, tol)?,
            is_abs_continuous(&pb, &pa, tol)?,
            is_singular(&pa, &pb, tol)?,
        ];
        Ok(Some((before, after)))
    })();
    match images {
        Ok(None) => {
            report.pairs_checked = 0;
            report.ambiguous = 1;
        }
        Ok(Some((before, after))) => {
            let rels = [Relation::AbsContinuousAB, Relation::AbsContinuousBA, Relation::Singular];
            for k in 0..3 {
                if before[k] != after[k] {
                    report.violations.push(Violation {
                        relation: rels[k],
                        before: before[k],
                        after: after[k],
                        a: a.clone(),
                        b: b.clone(),
                    });
                }
            }
        }
        Err(e) => report.map_errors.push(e.to_string()),
    }
    report
}

#[derive(Clone, Debug)]
pub struct RangeViolation {
    pub a: PsdOperator<Q>,
    pub image_rank: usize,
}

#[derive(Clone, Debug, Default)]
pub struct RangeFormReport {
    pub checked: usize,
    /// Number of samples per input rank `0..=n`.
    pub per_rank: Vec<usize>,
    /// Samples dropped after every redraw left the image rank unresolved.
    pub ambiguous: usize,
    pub violations: Vec<RangeViolation>,
    pub map_errors: Vec<String>,
}

impl RangeFormReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.map_errors.is_empty()
    }
}

const RANGE_REDRAWS: u64 = 8;

/// Checks `ran φ(A) = T(ran A)` on sampled `A` of every rank `0..=n`.
pub fn verify_range_form<S: Scalar, M: PsdMap<S>>(
    map: &M,
    t: &SemilinearOperator,
    trials: usize,
    seed: u64,
    tol: &Tol,
) -> Result<RangeFormReport> {
    let n = map.dim();
    if t.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: t.dim(),
        });
    }
    let exact = Tol::default();
    type Outcome = std::result::Result<Option<Option<RangeViolation>>, String>;
    let outcomes: Vec<(usize, Outcome)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let rank = (i as usize) % (n + 1);
            // `None` marks an image whose float rank is not resolved.
            let run = |sample_seed: u64| -> Result<Option<Option<RangeViolation>>> {
                let a = random_psd::<Q>(n, rank, sample_seed)?;
                let expected = t.apply_subspace(&a.range(&exact), &exact)?;
                let expected = Subspace::span(&expected.basis().to_backend::<S>(), tol);
                let image = map.apply(&a.to_backend::<S>(tol)?, tol)?;
                if !rank_resolved(&image, tol) {
                    return Ok(None);
                }
                let ok = image.range(tol).same_as(&expected, tol)?;
                Ok(Some((!ok).then(|| RangeViolation {
                    a,
                    image_rank: image.rank(),
                })))
            };
            let base = derive_seed(seed, i);
            let mut outcome = Ok(None);
            for attempt in 0..RANGE_REDRAWS {
                let sample_seed = if attempt == 0 { base } else { derive_seed(base, attempt) };
                outcome = run(sample_seed).map_err(|e| e.to_string());
                if !matches!(outcome, Ok(None)) {
                    break;
                }
            }
            (rank, outcome)
        })
        .collect();
    let mut report = RangeFormReport {
        per_rank: vec![0; n + 1],
        ..Default::default()
    };
    for (rank, outcome) in outcomes {
        match outcome {
            Ok(None) => {
                report.ambiguous += 1;
                continue;
            }
            Ok(Some(Some(v))) => report.violations.push(v),
            Ok(Some(None)) => {}
            Err(e) => report.map_errors.push(e),
        }
        report.checked += 1;
        report.per_rank[rank] += 1;
    }
    Ok(report)
}

/// The checkable parts of the two-dimensional characterization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim2Condition {
    ZeroFixed,
    InvertiblesPreserved,
    RankOneConsistent,
}

impl Dim2Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Dim2Condition::ZeroFixed => "zero_fixed",
            Dim2Condition::InvertiblesPreserved => "invertibles_preserved",
            Dim2Condition::RankOneConsistent => "rank_one_consistent",
        }
    }
}

/// Outcome of [`dim2_conditions`]. These are necessary conditions checked
/// on samples, not a decision of the full equivalence.
#[derive(Clone, Debug)]
pub struct Dim2Report {
    pub zero_fixed: bool,
    pub invertibles_preserved: bool,
    pub rank_one_consistent: bool,
    pub first_failure: Option<Dim2Condition>,
    pub samples: usize,
}

impl Dim2Report {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// On dimension 2 checks `φ(0) = 0`, that `φ(A)` is invertible iff `A` is,
/// and that rank-one inputs with the same range have rank-one images with
/// the same range.
pub fn dim2_conditions<S: Scalar, M: PsdMap<S>>(map: &M, trials: usize, seed: u64, tol: &Tol) -> Result<Dim2Report> {
    if map.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "two-dimensional conditions requested for dimension {}",
            map.dim()
        )));
    }
    let zero_fixed = map.apply(&PsdOperator::zero(2), tol)?.is_zero();
    let mut invertibles_preserved = true;
    let mut rank_one_consistent = true;
    for i in 0..trials as u64 {
        let s = derive_seed(seed, i);
        let rank = (i % 3) as usize;
        let a = random_psd::<Q>(2, rank, s)?;
        let image = map.apply(&a.to_backend::<S>(tol)?, tol)?;
        if image.is_invertible() != a.is_invertible() {
            invertibles_preserved = false;
        }

        let mut r = rng(derive_seed(s, 7));
        let f: Vec<Q> = loop {
            let f: Vec<Q> = (0..2).map(|_| Q::sample(&mut r)).collect();
            if f.iter().any(|x| !x.is_zero()) {
                break f;
            }
        };
        let mu = loop {
            let m = Q::sample(&mut r);
            if !m.is_zero() {
                break m;
            }
        };
        let g: Vec<Q> = f.iter().map(|x| x.clone() * mu.clone()).collect();
        let p1 = map.apply(&rank_one(&f)?.to_backend::<S>(tol)?, tol)?;
        let p2 = map.apply(&rank_one(&g)?.to_backend::<S>(tol)?, tol)?;
        if p1.rank() != 1 || p2.rank() != 1 || !p1.range(tol).same_as(&p2.range(tol), tol)? {
            rank_one_consistent = false;
        }
    }
    let first_failure = if !zero_fixed {
        Some(Dim2Condition::ZeroFixed)
    } else if !invertibles_preserved {
        Some(Dim2Condition::InvertiblesPreserved)
    } else if !rank_one_consistent {
        Some(Dim2Condition::RankOneConsistent)
    } else {
        None
    };
    Ok(Dim2Report {
        zero_fixed,
        invertibles_preserved,
        rank_one_consistent,
        first_failure,
        samples: trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Complex64;

    type C = Complex64;

    fn t() -> Tol {
        Tol::default()
    }

    #[test]
    fn congruence_by_identity_is_identity() {
        let spec = PreserverSpec::congruence(SemilinearOperator::identity(3, Flavor::Linear));
        let a = random_psd::<Q>(3, 2, 4).unwrap();
        assert_eq!(apply_map(&spec, &a, &t()).unwrap(), a);
    }

    #[test]
    fn form_iv_with_constant_two() {
        // Z_A ≡ 2I through a hand-built map matching the form-(iv) formula.
        let a = random_psd::<C>(3, 2, 4).unwrap();
        let root = psd_sqrt(&a, &t()).unwrap();
        let two = Matrix::<C>::identity(3).scale(&C::new(2.0, 0.0));
        let out = &(root.matrix() * &two) * root.matrix();
        assert!(out.max_diff(&a.matrix().scale(&C::new(2.0, 0.0))) < 1e-12);
    }

    #[test]
    fn form_iv_diag_example() {
        let t_op = SemilinearOperator::new(Matrix::from_ints(&[&[1, 0], &[0, 2]]).unwrap(), Flavor::Linear).unwrap();
        let inner = t_op.congruence(&Matrix::<C>::from_ints(&[&[1, 0], &[0, 0]]).unwrap());
        let root = psd_sqrt(&PsdOperator::new(inner, &t()).unwrap(), &t()).unwrap();
        assert!(root.matrix().max_diff(&Matrix::from_ints(&[&[1, 0], &[0, 0]]).unwrap()) < 1e-12);
    }

    #[test]
    fn form_iv_refuses_exact_backend() {
        let spec = PreserverSpec::form_iv(SemilinearOperator::identity(2, Flavor::Linear), ZFamily::new(1));
        let err = apply_map(&spec, &PsdOperator::<Q>::identity(2), &t()).unwrap_err();
        assert!(matches!(err, Error::ExactBackend(_)));
        assert!(!spec.supports_exact());
    }

    #[test]
    fn z_family_is_deterministic_and_invertible() {
        let z = ZFamily::new(42);
        let a = random_psd::<C>(3, 1, 0).unwrap();
        let z1 = z.z_for(a.matrix());
        assert_eq!(z1, z.z_for(a.matrix()));
        let zp = PsdOperator::new(z1, &t()).unwrap();
        assert!(zp.is_invertible());
        assert_ne!(z.z_for(a.matrix()), ZFamily::new(43).z_for(a.matrix()));
    }

    #[test]
    fn wild_map_examples() {
        let spec = PreserverSpec::wild_with(Matrix::identity(2), true).unwrap();
        let id = PsdOperator::<Q>::identity(2);
        assert_eq!(apply_map(&spec, &id, &t()).unwrap(), id);
        let a = PsdOperator::<Q>::diag_ints(&[1, 2]).unwrap();
        let half = crate::linalg::real_fraction(1, 2);
        assert_eq!(
            apply_map(&spec, &a, &t()).unwrap().matrix(),
            &Matrix::diag(&[Q::from_parts(1, 0), half])
        );
        let seeded = make_wild_map(9, 3).unwrap();
        let singular = random_psd::<Q>(3, 2, 5).unwrap();
        assert_eq!(apply_map(&seeded, &singular, &t()).unwrap(), singular);
    }

    #[test]
    fn hand_built_map_breaks_singularity() {
        let d10 = PsdOperator::<Q>::diag_ints(&[1, 0]).unwrap();
        let d01 = PsdOperator::<Q>::diag_ints(&[0, 1]).unwrap();
        let d11 = PsdOperator::<Q>::diag_ints(&[1, 1]).unwrap();
        let (src, dst) = (d01.clone(), d11.clone());
        let map = FnMap::new(2, move |a: &PsdOperator<Q>| {
            Ok(if *a == src { dst.clone() } else { a.clone() })
        });
        let report = verify_relation_preservation_on(&map, &[(d10, d01)], &t());
        assert!(!report.passed());
        let sing = report
            .violations
            .iter()
            .find(|v| v.relation == Relation::Singular)
            .unwrap();
        assert!(sing.before && !sing.after);
    }

    #[test]
    fn congruence_preserves_relations_small_run() {
        let spec = PreserverSpec::congruence(random_semilinear(3, 3, Flavor::Conjugate).unwrap());
        let report = verify_relation_preservation::<Q, _>(&spec, 60, 1, &t()).unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.pairs_checked, 60);
    }

    #[test]
    fn range_form_detects_wrong_operator() {
        let t1 = random_semilinear(3, 21, Flavor::Linear).unwrap();
        let spec = PreserverSpec::congruence(t1.clone());
        assert!(verify_range_form::<Q, _>(&spec, &t1, 12, 0, &t()).unwrap().passed());
        let t2 = SemilinearOperator::identity(3, Flavor::Linear);
        assert!(!verify_range_form::<Q, _>(&spec, &t2, 12, 0, &t()).unwrap().passed());
    }

    #[test]
    fn dim2_examples() {
        let cong = PreserverSpec::congruence(random_semilinear(2, 8, Flavor::Linear).unwrap());
        assert!(dim2_conditions::<Q, _>(&cong, 30, 2, &t()).unwrap().passed());
        let wild = make_wild_map(3, 2).unwrap();
        assert!(dim2_conditions::<Q, _>(&wild, 30, 2, &t()).unwrap().passed());

        let bad = FnMap::new(2, |a: &PsdOperator<Q>| {
            Ok(if a.rank() == 1 {
                PsdOperator::identity(2)
            } else {
                a.clone()
            })
        });
        let r = dim2_conditions::<Q, _>(&bad, 30, 2, &t()).unwrap();
        assert_eq!(r.first_failure, Some(Dim2Condition::InvertiblesPreserved));
        assert!(dim2_conditions::<Q, _>(&cong_dim3(), 3, 0, &t()).is_err());
    }

    fn cong_dim3() -> PreserverSpec {
        PreserverSpec::congruence(SemilinearOperator::identity(3, Flavor::Linear))
    }

    #[test]
    fn composite_dimension_mismatch() {
        let a = PreserverSpec::congruence(SemilinearOperator::identity(2, Flavor::Linear));
        let b = cong_dim3();
        assert!(PreserverSpec::composite(vec![a, b]).is_err());
        assert!(PreserverSpec::composite(vec![]).is_err());
    }
}

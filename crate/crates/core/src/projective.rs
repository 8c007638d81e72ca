//! Lines of `Q(i)^n`, maps between them, and reconstruction of the
//! semilinear operator behind a line map.
//!
//! Over the Gaussian rationals the only field automorphisms are the identity
//! and complex conjugation, so a projectivity in dimension `≥ 3` comes from
//! a linear or a conjugate-linear bijection, and which one can be decided
//! exactly.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rayon::prelude::*;

use crate::generators::{derive_seed, rank_one, rng};
use crate::linalg::{rank, Complex64, GaussianRational, Matrix, PsdOperator, Rational, Scalar, Tol};
use crate::preserver::{apply_map, Flavor, PreserverSpec, PsdMap, SemilinearOperator};
use crate::{Error, Result};

type Q = GaussianRational;

/// A one-dimensional subspace, stored by its direction scaled so the first
/// nonzero coordinate is 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Line {
    direction: Vec<Q>,
}

impl Line {
    pub fn new(v: Vec<Q>) -> Result<Self> {
        let pivot = v.iter().position(|x| !x.is_zero()).ok_or(Error::ZeroVector)?;
        let inv = Q::one() / v[pivot].clone();
        Ok(Line {
            direction: v.into_iter().map(|x| x * inv.clone()).collect(),
        })
    }

    /// `[e_i]` in `Q(i)^n`.
    pub fn basis(n: usize, i: usize) -> Self {
        Line {
            direction: (0..n).map(|k| if k == i { Q::one() } else { Q::zero() }).collect(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.direction.len()
    }

    pub fn direction(&self) -> &[Q] {
        &self.direction
    }
}

impl std::fmt::Display for Line {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.direction.iter().map(format_gauss).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

fn format_gauss(z: &Q) -> String {
    use num_traits::Zero;
    match (z.re.is_zero(), z.im.is_zero()) {
        (_, true) => z.re.to_string(),
        (true, false) => format!("{}i", z.im),
        _ => format!("{}+{}i", z.re, z.im),
    }
}

/// An oracle on lines of a fixed ambient dimension.
pub trait LineMap: Sync {
    fn dim(&self) -> usize;
    fn image(&self, line: &Line) -> Result<Line>;
}

impl LineMap for SemilinearOperator {
    fn dim(&self) -> usize {
        SemilinearOperator::dim(self)
    }

    fn image(&self, line: &Line) -> Result<Line> {
        Line::new(self.apply_vector(line.direction()))
    }
}

/// `[v] ↦ [v]`.
pub struct IdentityLineMap(pub usize);

impl LineMap for IdentityLineMap {
    fn dim(&self) -> usize {
        self.0
    }

    fn image(&self, line: &Line) -> Result<Line> {
        Ok(line.clone())
    }
}

/// Exchanges two basis lines and fixes every other line. Not induced by any
/// semilinear map once `n ≥ 3`.
pub struct SwapLineMap {
    pub dim: usize,
    pub i: usize,
    pub j: usize,
}

impl LineMap for SwapLineMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn image(&self, line: &Line) -> Result<Line> {
        let (ei, ej) = (Line::basis(self.dim, self.i), Line::basis(self.dim, self.j));
        Ok(if *line == ei {
            ej
        } else if *line == ej {
            ei
        } else {
            line.clone()
        })
    }
}

/// `[f] ↦ ran φ(f f*)` for a preserver `φ`.
///
/// Maps that run on the exact backend are evaluated exactly. Form-(iv)
/// maps are evaluated in double precision and the normalized image
/// direction is rounded to the nearest Gaussian rational with denominators
/// up to [`InducedLineMap::MAX_DENOMINATOR`]; the rounding is rejected unless
/// it reproduces the float direction to `1e-9`.
pub struct InducedLineMap {
    spec: PreserverSpec,
    tol: Tol,
}

impl InducedLineMap {
    pub const MAX_DENOMINATOR: i128 = 1_000_000;

    pub fn new(spec: PreserverSpec, tol: Tol) -> Self {
        InducedLineMap { spec, tol }
    }

    pub fn spec(&self) -> &PreserverSpec {
        &self.spec
    }
}

impl LineMap for InducedLineMap {
    fn dim(&self) -> usize {
        self.spec.dimension()
    }

    fn image(&self, line: &Line) -> Result<Line> {
        if self.spec.supports_exact() {
            return exact_line_image(&self.spec, line, &self.tol);
        }
        let a = rank_one(line.direction())?;
        let image = apply_map(&self.spec, &a.to_backend::<Complex64>(&self.tol)?, &self.tol)?;
        if image.rank() != 1 {
            return Err(Error::NotRankOne { rank: image.rank() });
        }
        round_line(&image.range(&self.tol).basis().column(0))
    }
}

/// `[f] ↦ ran φ(f f*)` for any map evaluated on the exact backend.
pub struct ExactLineMap<M> {
    pub map: M,
    pub tol: Tol,
}

impl<M: PsdMap<Q>> LineMap for ExactLineMap<M> {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn image(&self, line: &Line) -> Result<Line> {
        exact_line_image(&self.map, line, &self.tol)
    }
}

fn exact_line_image<M: PsdMap<Q>>(map: &M, line: &Line, tol: &Tol) -> Result<Line> {
    let image = map.apply(&rank_one(line.direction())?, tol)?;
    if image.rank() != 1 {
        return Err(Error::NotRankOne { rank: image.rank() });
    }
    // A rank-one PSD matrix is spanned by any column with a nonzero
    // diagonal entry.
    let m = image.matrix();
    let j = (0..m.cols())
        .find(|&j| !m[(j, j)].is_zero())
        .ok_or(Error::NotRankOne { rank: 0 })?;
    Line::new(m.column(j))
}

fn round_line(v: &[Complex64]) -> Result<Line> {
    let top = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = v.iter().position(|z| z.norm() > 1e-6 * top).ok_or(Error::ZeroVector)?;
    let scaled: Vec<Complex64> = v.iter().map(|z| z / v[pivot]).collect();
    let mut out = Vec::with_capacity(v.len());
    for z in &scaled {
        let re = recover_rational(z.re).ok_or_else(|| Error::Degenerate("no rational direction".into()))?;
        let im = recover_rational(z.im).ok_or_else(|| Error::Degenerate("no rational direction".into()))?;
        let q = Q::new(re, im);
        if (q.to_c64() - z).norm() > 1e-9 {
            return Err(Error::Degenerate(format!(
                "image coordinate {z} is not a small Gaussian rational"
            )));
        }
        out.push(q);
    }
    Line::new(out)
}

/// Last continued-fraction convergent of `x` with denominator at most
/// [`InducedLineMap::MAX_DENOMINATOR`].
fn recover_rational(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut v = x;
    loop {
        let a = v.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let (p2, q2) = (ai * p1 + p0, ai * q1 + q0);
        if q2 > InducedLineMap::MAX_DENOMINATOR {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = v - a;
        if (p1 as f64 / q1 as f64 - x).abs() <= 1e-12 * x.abs().max(1.0) || frac == 0.0 {
            break;
        }
        v = 1.0 / frac;
    }
    (q1 != 0).then(|| Rational::new(p1.into(), q1.into()))
}

fn coplanar_rank(lines: &[&Line]) -> usize {
    let n = lines[0].ambient_dim();
    let cols: Vec<Vec<Q>> = lines.iter().map(|l| l.direction().to_vec()).collect();
    rank(&Matrix::from_columns(n, &cols))
}

#[derive(Clone, Debug)]
pub struct ProjectivityFailure {
    pub lines: [Line; 3],
    pub images: [Line; 3],
    pub coplanar: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ProjectivityReport {
    pub coplanar_checked: usize,
    pub noncoplanar_checked: usize,
    pub failures: Vec<ProjectivityFailure>,
    /// Pairs of distinct sampled lines that were sent to the same line.
    pub collisions: usize,
    pub map_errors: Vec<String>,
}

impl ProjectivityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.collisions == 0 && self.map_errors.is_empty()
    }

    fn merge(mut self, other: Self) -> Self {
        self.coplanar_checked += other.coplanar_checked;
        self.noncoplanar_checked += other.noncoplanar_checked;
        self.failures.extend(other.failures);
        self.collisions += other.collisions;
        self.map_errors.extend(other.map_errors);
        self
    }
}

fn random_vector<R: Rng>(n: usize, r: &mut R) -> Vec<Q> {
    (0..n).map(|_| Q::sample(r)).collect()
}

fn add(u: &[Q], v: &[Q], c: &Q) -> Vec<Q> {
    u.iter()
        .zip(v)
        .map(|(x, y)| x.clone() + c.clone() * y.clone())
        .collect()
}

/// Deterministic triples: `([e_i], [e_i + e_j], [e_j])` for all `i < j`
/// (coplanar) and `([e_i], [e_j], [e_k])` (not coplanar).
fn probe_triples(n: usize) -> Vec<[Line; 3]> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (ei, ej) = (Line::basis(n, i), Line::basis(n, j));
            let mid = Line::new(add(ei.direction(), ej.direction(), &Q::one())).expect("nonzero");
            out.push([ei.clone(), mid, ej.clone()]);
            for k in j + 1..n {
                out.push([ei.clone(), ej.clone(), Line::basis(n, k)]);
            }
        }
    }
    out
}

fn random_triple(n: usize, seed: u64, coplanar: bool) -> [Line; 3] {
    for attempt in 0.. {
        let mut r = rng(derive_seed(seed, attempt));
        let u = random_vector(n, &mut r);
        let v = random_vector(n, &mut r);
        let w = if coplanar {
            let c = Q::sample(&mut r);
            if c.is_zero() {
                continue;
            }
            add(&u, &v, &c)
        } else {
            random_vector(n, &mut r)
        };
        let (Ok(a), Ok(b), Ok(c)) = (Line::new(u), Line::new(v), Line::new(w)) else {
            continue;
        };
        let k = coplanar_rank(&[&a, &b, &c]);
        if (coplanar && k == 2) || (!coplanar && k == 3) {
            return [a, b, c];
        }
    }
    unreachable!("attempt counter is unbounded")
}

type ImageTable = HashMap<Line, std::result::Result<Line, String>>;

fn check_triple(table: &ImageTable, lines: [Line; 3]) -> ProjectivityReport {
    let mut report = ProjectivityReport::default();
    let coplanar = coplanar_rank(&[&lines[0], &lines[1], &lines[2]]) <= 2;
    if coplanar {
        report.coplanar_checked = 1;
    } else {
        report.noncoplanar_checked = 1;
    }
    let images: std::result::Result<Vec<Line>, String> = lines.iter().map(|l| table[l].clone()).collect();
    let images = match images {
        Ok(images) => images,
        Err(e) => {
            report.map_errors.push(e);
            return report;
        }
    };
    for (x, y) in [(0, 1), (0, 2), (1, 2)] {
        if lines[x] != lines[y] && images[x] == images[y] {
            report.collisions += 1;
        }
    }
    let image_coplanar = coplanar_rank(&[&images[0], &images[1], &images[2]]) <= 2;
    if image_coplanar != coplanar {
        let images: [Line; 3] = images.try_into().expect("three images");
        report.failures.push(ProjectivityFailure {
            lines,
            images,
            coplanar,
        });
    }
    report
}

/// Checks that coplanar triples of lines go to coplanar triples and
/// non-coplanar ones to non-coplanar ones, on the basis probe triples and
/// on `trials` random triples of each kind.
pub fn verify_projectivity<M: LineMap + ?Sized>(m: &M, trials: usize, seed: u64) -> Result<ProjectivityReport> {
    let n = m.dim();
    if n < 3 {
        return Err(Error::Unsupported(format!(
            "coplanarity is not a constraint in dimension {n}"
        )));
    }
    let sampled: Vec<[Line; 3]> = (0..2 * trials as u64)
        .into_par_iter()
        .map(|i| random_triple(n, derive_seed(seed, i / 2), i % 2 == 0))
        .collect();
    let triples: Vec<[Line; 3]> = probe_triples(n).into_iter().chain(sampled).collect();
    let mut seen = HashSet::new();
    let distinct: Vec<Line> = triples.iter().flatten().filter(|l| seen.insert(*l)).cloned().collect();
    let table: ImageTable = distinct
        .into_par_iter()
        .map(|l| {
            let image = m.image(&l).map_err(|e| e.to_string());
            (l, image)
        })
        .collect();
    Ok(triples
        .into_iter()
        .map(|t| check_triple(&table, t))
        .fold(ProjectivityReport::default(), ProjectivityReport::merge))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub operator: SemilinearOperator,
    /// `false` in dimension 2, where no coplanarity check can certify that
    /// the input was a projectivity.
    pub certifiable: bool,
}

/// Coefficients `(α, β)` with `w = α·u + β·v`, if they exist.
fn coefficients(u: &[Q], v: &[Q], w: &[Q]) -> Option<(Q, Q)> {
    let n = u.len();
    let m = Matrix::from_columns(n, &[u.to_vec(), v.to_vec(), w.to_vec()]);
    let kernel = Q::null_space(&m, &Tol::default());
    if kernel.cols() != 1 {
        return None;
    }
    let gamma = kernel[(2, 0)].clone();
    if gamma.is_zero() {
        return None;
    }
    let s = -(Q::one() / gamma);
    Some((kernel[(0, 0)].clone() * s.clone(), kernel[(1, 0)].clone() * s))
}

/// Recovers `(T, flavor)` with `m([v]) = [T σ(v)]` from the probe lines
/// `[e_j]`, `[e_1 + e_j]` and `[e_1 + i·e_2]`.
///
/// `T` is determined up to a nonzero scalar; the returned `T` has first
/// column equal to the normalized image of `[e_1]`.
pub fn reconstruct_semilinear<M: LineMap + ?Sized>(m: &M, dim: usize) -> Result<Reconstruction> {
    if dim < 2 {
        return Err(Error::Unsupported(format!(
            "reconstruction needs dimension ≥ 2, got {dim}"
        )));
    }
    if m.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.dim(),
        });
    }
    let dirs: Vec<Vec<Q>> = (0..dim)
        .map(|j| m.image(&Line::basis(dim, j)).map(|l| l.direction().to_vec()))
        .collect::<Result<_>>()?;
    if rank(&Matrix::from_columns(dim, &dirs)) < dim {
        return Err(Error::Degenerate("images of the basis lines are dependent".into()));
    }
    let mut cols = vec![dirs[0].clone()];
    for (j, dj) in dirs.iter().enumerate().skip(1) {
        let probe = Line::new(add(
            Line::basis(dim, 0).direction(),
            Line::basis(dim, j).direction(),
            &Q::one(),
        ))?;
        let w = m.image(&probe)?;
        let (alpha, beta) = coefficients(&dirs[0], dj, w.direction()).ok_or_else(|| {
            Error::Degenerate(format!("image of [e1 + e{}] leaves the plane of its endpoints", j + 1))
        })?;
        if alpha.is_zero() || beta.is_zero() {
            return Err(Error::Degenerate(format!(
                "image of [e1 + e{}] collapses onto an endpoint",
                j + 1
            )));
        }
        cols.push(dj.iter().map(|x| x.clone() * beta.clone() / alpha.clone()).collect());
    }
    let t = Matrix::from_columns(dim, &cols);

    let i = Q::from_parts(0, 1);
    let phase = Line::new(add(
        Line::basis(dim, 0).direction(),
        Line::basis(dim, 1).direction(),
        &i,
    ))?;
    let observed = m.image(&phase)?;
    let linear = Line::new(add(&cols[0], &cols[1], &i))?;
    let conjugate = Line::new(add(&cols[0], &cols[1], &-i))?;
    let flavor = if observed == linear {
        Flavor::Linear
    } else if observed == conjugate {
        Flavor::Conjugate
    } else {
        return Err(Error::NotSemilinear(format!(
            "image {observed} of [e1 + i e2] matches neither {linear} nor {conjugate}"
        )));
    };
    Ok(Reconstruction {
        operator: SemilinearOperator::new(t, flavor)?,
        certifiable: dim >= 3,
    })
}

/// Whether `s = λ·t` for some nonzero scalar `λ`.
pub fn projectively_equal(s: &Matrix<Q>, t: &Matrix<Q>) -> bool {
    if s.rows() != t.rows() || s.cols() != t.cols() {
        return false;
    }
    let Some(k) = t.data().iter().position(|x| !x.is_zero()) else {
        return s.is_zero();
    };
    let lambda = s.data()[k].clone() / t.data()[k].clone();
    !lambda.is_zero() && *s == t.scale(&lambda)
}

/// Number of random lines on which `op` and `m` disagree.
pub fn count_disagreements<M: LineMap + ?Sized>(
    m: &M,
    op: &SemilinearOperator,
    trials: usize,
    seed: u64,
) -> Result<usize> {
    let n = m.dim();
    (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng(derive_seed(seed, k));
            let line = loop {
                if let Ok(l) = Line::new(random_vector(n, &mut r)) {
                    break l;
                }
            };
            Ok(usize::from(m.image(&line)? != LineMap::image(op, &line)?))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Rank-one operator `f f*` on a line, for feeding lines to cone maps.
pub fn line_operator(line: &Line) -> PsdOperator<Q> {
    rank_one(line.direction()).expect("line directions are nonzero")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::random_semilinear;
    use crate::preserver::{FnMap, ZFamily};

    fn q(re: i64, im: i64) -> Q {
        Q::from_parts(re, im)
    }

    struct ConjugationMap(usize);

    impl LineMap for ConjugationMap {
        fn dim(&self) -> usize {
            self.0
        }

        fn image(&self, line: &Line) -> Result<Line> {
            Line::new(line.direction().iter().map(Scalar::conj).collect())
        }
    }

    #[test]
    fn line_normalization() {
        let l = Line::new(vec![q(0, 0), q(0, 2), q(4, 0)]).unwrap();
        assert_eq!(l.direction(), &[q(0, 0), q(1, 0), q(0, -2)]);
        assert_eq!(l, Line::new(vec![q(0, 0), q(0, 1), q(2, 0)]).unwrap());
        assert!(Line::new(vec![q(0, 0); 2]).is_err());
    }

    #[test]
    fn identity_reconstructs_to_identity() {
        let r = reconstruct_semilinear(&IdentityLineMap(3), 3).unwrap();
        assert!(projectively_equal(r.operator.matrix(), &Matrix::identity(3)));
        assert_eq!(r.operator.flavor(), Flavor::Linear);
        assert!(r.certifiable);
    }

    #[test]
    fn conjugation_reconstructs_to_conjugate_identity() {
        let r = reconstruct_semilinear(&ConjugationMap(3), 3).unwrap();
        assert!(projectively_equal(r.operator.matrix(), &Matrix::identity(3)));
        assert_eq!(r.operator.flavor(), Flavor::Conjugate);
        let r2 = reconstruct_semilinear(&ConjugationMap(2), 2).unwrap();
        assert!(!r2.certifiable);
    }

    #[test]
    fn three_cycle_round_trip() {
        let p = Matrix::<Q>::from_ints(&[&[0, 0, 1], &[1, 0, 0], &[0, 1, 0]]).unwrap();
        let op = SemilinearOperator::new(p.clone(), Flavor::Linear).unwrap();
        let r = reconstruct_semilinear(&op, 3).unwrap();
        assert!(projectively_equal(r.operator.matrix(), &p));
        assert_eq!(r.operator.flavor(), Flavor::Linear);
    }

    #[test]
    fn random_round_trips_both_flavors() {
        for s in 0..20 {
            for flavor in [Flavor::Linear, Flavor::Conjugate] {
                let op = random_semilinear(4, s, flavor).unwrap();
                let r = reconstruct_semilinear(&op, 4).unwrap();
                assert!(projectively_equal(r.operator.matrix(), op.matrix()), "seed {s}");
                assert_eq!(r.operator.flavor(), flavor);
                assert_eq!(count_disagreements(&op, &r.operator, 20, s).unwrap(), 0);
            }
        }
    }

    #[test]
    fn swap_map_is_not_a_projectivity() {
        let swap = SwapLineMap { dim: 3, i: 0, j: 1 };
        let report = verify_projectivity(&swap, 10, 0).unwrap();
        assert!(!report.passed());
        let e1 = Line::basis(3, 0);
        let e3 = Line::basis(3, 2);
        assert!(report
            .failures
            .iter()
            .any(|f| f.coplanar && f.lines[0] == e1 && f.lines[2] == e3));
    }

    #[test]
    fn induced_maps_are_projectivities() {
        let t = random_semilinear(3, 7, Flavor::Conjugate).unwrap();
        assert!(verify_projectivity(&t, 30, 1).unwrap().passed());
        assert!(verify_projectivity(&IdentityLineMap(4), 30, 1).unwrap().passed());
        assert!(verify_projectivity(&IdentityLineMap(2), 3, 1).is_err());

        let cong = InducedLineMap::new(PreserverSpec::congruence(t.clone()), Tol::default());
        let r = reconstruct_semilinear(&cong, 3).unwrap();
        assert!(projectively_equal(r.operator.matrix(), t.matrix()));
        assert_eq!(r.operator.flavor(), Flavor::Conjugate);
    }

    #[test]
    fn form_iv_induces_the_congruence_line_map() {
        let t = random_semilinear(3, 11, Flavor::Linear).unwrap();
        let form = InducedLineMap::new(PreserverSpec::form_iv(t.clone(), ZFamily::new(5)), Tol::default());
        for s in 0..10 {
            let mut r = rng(s);
            let line = Line::new(random_vector(3, &mut r)).unwrap();
            assert_eq!(form.image(&line).unwrap(), LineMap::image(&t, &line).unwrap());
        }
        assert!(verify_projectivity(&form, 10, 2).unwrap().passed());
    }

    #[test]
    fn non_rank_one_image_is_reported() {
        let fill = FnMap::new(2, |_: &PsdOperator<Q>| Ok(PsdOperator::identity(2)));
        let m = ExactLineMap {
            map: fill,
            tol: Tol::default(),
        };
        assert!(matches!(
            m.image(&Line::basis(2, 0)),
            Err(Error::NotRankOne { rank: 2 })
        ));
    }

    #[test]
    fn projective_equality() {
        let t = Matrix::<Q>::from_ints(&[&[1, 2], &[0, 1]]).unwrap();
        assert!(projectively_equal(&t.scale(&q(0, 3)), &t));
        assert!(!projectively_equal(&Matrix::zeros(2, 2), &t));
        assert!(!projectively_equal(&Matrix::identity(2), &t));
    }

    #[test]
    fn rational_recovery() {
        assert_eq!(recover_rational(0.5).unwrap(), Rational::new(1.into(), 2.into()));
        assert_eq!(
            recover_rational(-7.0 / 13.0).unwrap(),
            Rational::new((-7).into(), 13.into())
        );
        assert_eq!(recover_rational(3.0).unwrap(), Rational::from_integer(3.into()));
    }
}

//! The property suite behind `psdcone suite`.
//!
//! Every property is a seeded, deterministic sampler. Runners take their
//! sample sizes explicitly; [`run_suite`] derives them from `--trials`.
//! Reports contain no timing so that equal seeds give byte-identical JSON.

use std::collections::BTreeMap;

use psdcone::generators::{derive_seed, random_pair_with_relation, random_psd, random_semilinear, PairRelation};
use psdcone::lebesgue::{decompose, verify_decomposition};
use psdcone::linalg::float_eigenvalues;
use psdcone::preserver::{
    apply_map, dim2_conditions, make_wild_map, sample_pair, verify_range_form, verify_relation_preservation, Flavor,
    PreservationReport, PreserverSpec, RangeFormReport, ZFamily,
};
use psdcone::projective::{
    count_disagreements, projectively_equal, reconstruct_semilinear, verify_projectivity, InducedLineMap, SwapLineMap,
};
use psdcone::relations::{analyze_pair, is_abs_continuous, is_singular, leq, RelationReport};
use psdcone::{rank, subspace_intersect, Complex64, GaussianRational, Matrix, PsdOperator, Result, Scalar, Tol};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::format::{exact_value, matrix_value, spec_value, AnyMatrix};

type Q = GaussianRational;
type C = Complex64;

/// Largest domination exponent tried by the exact oracles: `c = 2^60`.
pub const MAX_EXPONENT: u32 = 60;
/// Tolerance for float-backend properties.
pub const FLOAT_TOL: f64 = 1e-8;
/// Required fraction of invertible inputs moved by a wild map.
pub const WILD_MOVE_FRACTION: f64 = 0.9;
/// Smallest accepted ratio of extreme nonzero eigenvalues in the backend
/// agreement property.
pub const CONDITION_FLOOR: f64 = 1e-6;

const MAX_DUMPS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub dim: usize,
    pub seed: u64,
    pub detail: String,
    pub matrices: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub backend: &'static str,
    pub tolerance: Option<f64>,
    pub seed: u64,
    pub dims: Vec<usize>,
    pub checks: usize,
    pub failures: usize,
    /// Samples dropped because a float rank decision was not resolved.
    pub skipped: usize,
    /// Property-specific statistic, e.g. the fraction of moved inputs.
    pub observed: Option<f64>,
    pub counterexamples: Vec<Counterexample>,
}

impl PropertyResult {
    fn new(name: &str, backend: &'static str, tolerance: Option<f64>, seed: u64, dims: &[usize]) -> Self {
        PropertyResult {
            name: name.to_string(),
            backend,
            tolerance,
            seed,
            dims: dims.to_vec(),
            checks: 0,
            failures: 0,
            skipped: 0,
            observed: None,
            counterexamples: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, outcome: std::result::Result<(), Counterexample>) {
        self.checks += 1;
        if let Err(c) = outcome {
            self.fail(c);
        }
    }

    fn fail(&mut self, c: Counterexample) {
        self.failures += 1;
        if self.counterexamples.len() < MAX_DUMPS {
            self.counterexamples.push(c);
        }
    }

    fn absorb(&mut self, outcomes: Vec<std::result::Result<(), Counterexample>>) {
        for o in outcomes {
            self.record(o);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub skip_float: bool,
    pub properties: Vec<PropertyResult>,
    pub total_checks: usize,
    pub total_failures: usize,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.total_failures == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub skip_float: bool,
}

fn counterexample(dim: usize, seed: u64, detail: impl Into<String>, matrices: Vec<(&str, Value)>) -> Counterexample {
    Counterexample {
        dim,
        seed,
        detail: detail.into(),
        matrices: matrices.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    }
}

fn error_case(dim: usize, seed: u64, e: impl std::fmt::Display) -> Counterexample {
    counterexample(dim, seed, format!("error: {e}"), vec![])
}

fn ev(a: &PsdOperator<Q>) -> Value {
    exact_value(a.matrix())
}

fn fv(a: &PsdOperator<C>) -> Value {
    matrix_value(&AnyMatrix::Float(a.matrix().clone()))
}

fn power_of_two(k: u32) -> Q {
    Q::from_parts(1i64 << k, 0)
}

fn trial_seed(seed: u64, dim: usize, i: usize) -> u64 {
    derive_seed(derive_seed(seed, dim as u64), i as u64)
}

/// Pair number `index` of dimension `dim`: even indices walk through every
/// `(rank A, rank B)` combination with independent random ranges, odd
/// indices draw a relation-controlled pair.
pub fn trial_pair(dim: usize, index: usize, seed: u64) -> Result<(PsdOperator<Q>, PsdOperator<Q>)> {
    if index % 2 == 1 {
        return sample_pair(dim, seed);
    }
    let combo = (index / 2) % ((dim + 1) * (dim + 1));
    let (ra, rb) = (combo / (dim + 1), combo % (dim + 1));
    Ok((
        random_psd(dim, ra, derive_seed(seed, 1))?,
        random_psd(dim, rb, derive_seed(seed, 2))?,
    ))
}

fn per_trial<T: Send>(dims: &[usize], trials: usize, seed: u64, f: impl Fn(usize, usize, u64) -> T + Sync) -> Vec<T> {
    let jobs: Vec<(usize, usize)> = dims.iter().flat_map(|&d| (0..trials).map(move |i| (d, i))).collect();
    jobs.into_par_iter()
        .map(|(d, i)| f(d, i, trial_seed(seed, d, i)))
        .collect()
}

/// `A ≪ B` agrees with the exact domination oracle `A ≤ 2^60·B`.
///
/// Domination by `c·B` is monotone in `c`, so the oracle's "some
/// `k ≤ 60`" is decided by `k = 60` alone.
pub fn abs_continuity_vs_domination(dims: &[usize], trials: usize, seed: u64) -> PropertyResult {
    let mut result = PropertyResult::new("abs_continuity_vs_domination", "exact", None, seed, dims);
    let tol = Tol::default();
    let c = power_of_two(MAX_EXPONENT);
    result.absorb(per_trial(dims, trials, seed, |d, i, s| {
        let (a, b) = trial_pair(d, i, s).map_err(|e| error_case(d, s, e))?;
        let ac = is_abs_continuous(&a, &b, &tol).map_err(|e| error_case(d, s, e))?;
        let dominated = leq(&a, &b.scaled(&c), &tol).map_err(|e| error_case(d, s, e))?;
        if ac == dominated {
            Ok(())
        } else {
            Err(counterexample(
                d,
                s,
                format!("is_abs_continuous = {ac}, A ≤ 2^60·B = {dominated}"),
                vec![("A", ev(&a)), ("B", ev(&b))],
            ))
        }
    }));
    result
}

/// `A ⊥ B` fails exactly when the range intersection holds a vector `f`
/// with `f f* ≤ 2^60·A` and `f f* ≤ 2^60·B`; additionally
/// `A ⊥ B ⟺ rank [A B] = rank A + rank B`.
pub fn singularity_witness(dims: &[usize], trials: usize, seed: u64) -> PropertyResult {
    let mut result = PropertyResult::new("singularity_witness", "exact", None, seed, dims);
    let tol = Tol::default();
    let c = power_of_two(MAX_EXPONENT);
    result.absorb(per_trial(dims, trials, seed, |d, i, s| {
        let run = || -> Result<(bool, bool, bool)> {
            let (a, b) = trial_pair(d, i, s)?;
            let singular = is_singular(&a, &b, &tol)?;
            let meet = subspace_intersect(&a.range(&tol), &b.range(&tol), &tol)?;
            let witness = if meet.is_zero() {
                false
            } else {
                let f = psdcone::generators::rank_one(&meet.basis().column(0))?;
                leq(&f, &a.scaled(&c), &tol)? && leq(&f, &b.scaled(&c), &tol)?
            };
            let joint = rank(&a.matrix().hstack(b.matrix())?) == a.rank() + b.rank();
            Ok((singular, witness, joint))
        };
        match run() {
            Ok((singular, witness, joint)) if singular != witness && singular == joint => Ok(()),
            Ok((singular, witness, joint)) => {
                let (a, b) = trial_pair(d, i, s).expect("generated once already");
                Err(counterexample(
                    d,
                    s,
                    format!("singular = {singular}, witness = {witness}, rank test = {joint}"),
                    vec![("A", ev(&a)), ("B", ev(&b))],
                ))
            }
            Err(e) => Err(error_case(d, s, e)),
        }
    }));
    result
}

const FLAVORS: [Flavor; 2] = [Flavor::Linear, Flavor::Conjugate];

/// `(dim, flavor, map index, map seed, share of the samples)` for every map.
fn map_plan(
    dims: &[usize],
    maps_per_flavor: usize,
    samples_per_flavor: usize,
    seed: u64,
) -> Vec<(usize, Flavor, u64, usize)> {
    let mut plan = Vec::new();
    for &d in dims {
        for (f, &flavor) in FLAVORS.iter().enumerate() {
            for m in 0..maps_per_flavor {
                let share =
                    samples_per_flavor / maps_per_flavor + usize::from(m < samples_per_flavor % maps_per_flavor);
                let s = derive_seed(derive_seed(seed, d as u64), (f * maps_per_flavor + m) as u64);
                plan.push((d, flavor, s, share));
            }
        }
    }
    plan
}

fn preservation_dumps(
    result: &mut PropertyResult,
    dim: usize,
    seed: u64,
    spec: &PreserverSpec,
    report: PreservationReport,
) {
    result.checks += report.pairs_checked;
    result.skipped += report.ambiguous;
    for v in report.violations {
        result.fail(counterexample(
            dim,
            seed,
            format!("{}: before {}, after {}", v.relation.as_str(), v.before, v.after),
            vec![("A", ev(&v.a)), ("B", ev(&v.b)), ("map", spec_value(spec))],
        ));
    }
    for e in report.map_errors {
        result.fail(counterexample(
            dim,
            seed,
            format!("map error: {e}"),
            vec![("map", spec_value(spec))],
        ));
    }
}

fn run_preservation<S: Scalar>(result: &mut PropertyResult, specs: Vec<(usize, u64, PreserverSpec, usize)>, tol: &Tol) {
    for (d, s, spec, pairs) in specs {
        match verify_relation_preservation::<S, _>(&spec, pairs, derive_seed(s, 99), tol) {
            Ok(report) => preservation_dumps(result, d, s, &spec, report),
            Err(e) => {
                result.checks += 1;
                result.fail(error_case(d, s, e));
            }
        }
    }
}

fn congruence_specs(dims: &[usize], maps: usize, pairs: usize, seed: u64) -> Vec<(usize, u64, PreserverSpec, usize)> {
    map_plan(dims, maps, pairs, seed)
        .into_iter()
        .map(|(d, flavor, s, share)| {
            let t = random_semilinear(d, s, flavor).expect("invertible operators are dense");
            (d, s, PreserverSpec::congruence(t), share)
        })
        .collect()
}

fn form_iv_specs(dims: &[usize], maps: usize, pairs: usize, seed: u64) -> Vec<(usize, u64, PreserverSpec, usize)> {
    map_plan(dims, maps, pairs, seed)
        .into_iter()
        .map(|(d, flavor, s, share)| {
            let t = random_semilinear(d, s, flavor).expect("invertible operators are dense");
            (d, s, PreserverSpec::form_iv(t, ZFamily::new(derive_seed(s, 1))), share)
        })
        .collect()
}

/// Congruences `A ↦ T σ(A) T*` preserve `≪` and `⊥` in both directions.
pub fn congruence_preservation(
    dims: &[usize],
    maps_per_flavor: usize,
    pairs_per_flavor: usize,
    seed: u64,
) -> PropertyResult {
    let mut result = PropertyResult::new("congruence_preserves_relations", "exact", None, seed, dims);
    run_preservation::<Q>(
        &mut result,
        congruence_specs(dims, maps_per_flavor, pairs_per_flavor, seed),
        &Tol::default(),
    );
    result
}

/// Form-(iv) maps with seeded `Z`-families preserve `≪` and `⊥`.
pub fn form_iv_preservation(
    dims: &[usize],
    maps_per_flavor: usize,
    pairs_per_flavor: usize,
    seed: u64,
    tol: f64,
) -> PropertyResult {
    let mut result = PropertyResult::new("form_iv_preserves_relations", "float", Some(tol), seed, dims);
    run_preservation::<C>(
        &mut result,
        form_iv_specs(dims, maps_per_flavor, pairs_per_flavor, seed),
        &Tol::uniform(tol),
    );
    result
}

fn range_dumps(result: &mut PropertyResult, dim: usize, seed: u64, spec: &PreserverSpec, report: RangeFormReport) {
    result.checks += report.checked;
    result.skipped += report.ambiguous;
    for v in report.violations {
        result.fail(counterexample(
            dim,
            seed,
            format!("ran φ(A) ≠ T(ran A); rank φ(A) = {}", v.image_rank),
            vec![("A", ev(&v.a)), ("map", spec_value(spec))],
        ));
    }
    for e in report.map_errors {
        result.fail(counterexample(
            dim,
            seed,
            format!("map error: {e}"),
            vec![("map", spec_value(spec))],
        ));
    }
}

fn run_range_form<S: Scalar>(result: &mut PropertyResult, specs: Vec<(usize, u64, PreserverSpec, usize)>, tol: &Tol) {
    for (d, s, spec, samples) in specs {
        let t = match spec.kind() {
            psdcone::preserver::MapKind::Congruence(t) | psdcone::preserver::MapKind::FormIv { t, .. } => t.clone(),
            _ => unreachable!("range-form specs carry an operator"),
        };
        match verify_range_form::<S, _>(&spec, &t, samples, derive_seed(s, 98), tol) {
            Ok(report) => range_dumps(result, d, s, &spec, report),
            Err(e) => {
                result.checks += 1;
                result.fail(error_case(d, s, e));
            }
        }
    }
}

/// `ran φ(A) = T(ran A)` for congruences, exactly.
pub fn range_form_congruence(
    dims: &[usize],
    maps_per_flavor: usize,
    samples_per_flavor: usize,
    seed: u64,
) -> PropertyResult {
    let mut result = PropertyResult::new("range_form_congruence", "exact", None, seed, dims);
    run_range_form::<Q>(
        &mut result,
        congruence_specs(dims, maps_per_flavor, samples_per_flavor, seed),
        &Tol::default(),
    );
    result
}

/// `ran φ(A) = T(ran A)` for form-(iv) maps, up to a principal-angle
/// tolerance.
pub fn range_form_form_iv(
    dims: &[usize],
    maps_per_flavor: usize,
    samples_per_flavor: usize,
    seed: u64,
    tol: f64,
) -> PropertyResult {
    let mut result = PropertyResult::new("range_form_form_iv", "float", Some(tol), seed, dims);
    run_range_form::<C>(
        &mut result,
        form_iv_specs(dims, maps_per_flavor, samples_per_flavor, seed),
        &Tol::uniform(tol),
    );
    result
}

/// The seeded wild map preserves `≪` and `⊥`.
pub fn wild_preservation(dims: &[usize], pairs_per_dim: usize, seed: u64) -> PropertyResult {
    let mut result = PropertyResult::new("wild_preserves_relations", "exact", None, seed, dims);
    let specs = dims
        .iter()
        .map(|&d| {
            let s = derive_seed(seed, d as u64);
            (
                d,
                s,
                make_wild_map(s, d).expect("invertible operators are dense"),
                pairs_per_dim,
            )
        })
        .collect();
    run_preservation::<Q>(&mut result, specs, &Tol::default());
    result
}

/// The seeded wild map moves at least [`WILD_MOVE_FRACTION`] of sampled
/// invertible inputs.
pub fn wild_moves_invertibles(dims: &[usize], samples_per_dim: usize, seed: u64) -> PropertyResult {
    let mut result = PropertyResult::new("wild_moves_invertibles", "exact", None, seed, dims);
    let tol = Tol::default();
    let outcomes = per_trial(dims, samples_per_dim, seed, |d, _, s| -> Result<bool> {
        let spec = make_wild_map(derive_seed(seed, d as u64), d)?;
        let a = random_psd::<Q>(d, d, s)?;
        Ok(apply_map(&spec, &a, &tol)? != a)
    });
    let mut moved = 0usize;
    for o in outcomes {
        result.checks += 1;
        match o {
            Ok(m) => moved += usize::from(m),
            Err(e) => result.fail(error_case(0, seed, e)),
        }
    }
    let fraction = if result.checks == 0 {
        1.0
    } else {
        moved as f64 / result.checks as f64
    };
    result.observed = Some(fraction);
    if fraction < WILD_MOVE_FRACTION {
        result.fail(counterexample(
            0,
            seed,
            format!("only {moved} of {} invertible inputs moved", result.checks),
            vec![],
        ));
    }
    result
}

/// `congruence ∘ wild ∘ congruence` still preserves both relations.
pub fn composite_preservation(dims: &[usize], pairs_per_dim: usize, seed: u64) -> PropertyResult {
    let mut result = PropertyResult::new("composite_preserves_relations", "exact", None, seed, dims);
    let specs = dims
        .iter()
        .map(|&d| {
            let s = derive_seed(seed, d as u64);
            let first =
                PreserverSpec::congruence(random_semilinear(d, derive_seed(s, 1), Flavor::Conjugate).expect("dense"));
            let wild = make_wild_map(derive_seed(s, 2), d).expect("dense");
            let last =
                PreserverSpec::congruence(random_semilinear(d, derive_seed(s, 3), Flavor::Linear).expect("dense"));
            (
                d,
                s,
                PreserverSpec::composite(vec![first, wild, last]).expect("same dimension"),
                pairs_per_dim,
            )
        })
        .collect();
    run_preservation::<Q>(&mut result, specs, &Tol::default());
    result
}

/// On dimension 2 congruences and wild maps satisfy the necessary
/// conditions `φ(0) = 0`, invertibility preservation and rank-one
/// consistency. These are necessary conditions only.
pub fn dim2_necessary_conditions(samples: usize, seed: u64) -> PropertyResult {
    let mut result = PropertyResult::new("dim2_necessary_conditions", "exact", None, seed, &[2]);
    let tol = Tol::default();
    let specs = [
        PreserverSpec::congruence(random_semilinear(2, derive_seed(seed, 1), Flavor::Linear).expect("dense")),
        PreserverSpec::congruence(random_semilinear(2, derive_seed(seed, 2), Flavor::Conjugate).expect("dense")),
        make_wild_map(derive_seed(seed, 3), 2).expect("dense"),
    ];
    for (k, spec) in specs.iter().enumerate() {
        let s = derive_seed(seed, 10 + k as u64);
        result.checks += samples;
        match dim2_conditions::<Q, _>(spec, samples, s, &tol) {
            Ok(r) if r.passed() => {}
            Ok(r) => result.fail(counterexample(
                2,
                s,
                format!("condition {} fails", r.first_failure.expect("failed").as_str()),
                vec![("map", spec_value(spec))],
            )),
            Err(e) => result.fail(error_case(2, s, e)),
        }
    }
    result
}

/// Reconstruction from the induced line map of `congruence(T)` returns `λT`
/// with the right flavor, agrees with the map on held-out lines, and the
/// induced map passes the coplanarity check (dimension `≥ 3`).
pub fn projective_round_trip(
    dims: &[usize],
    maps_per_flavor: usize,
    projectivity_trials: usize,
    seed: u64,
) -> PropertyResult {
    let mut result = PropertyResult::new("projective_round_trip", "exact", None, seed, dims);
    let tol = Tol::default();
    let plan = map_plan(dims, maps_per_flavor, maps_per_flavor, seed);
    let outcomes: Vec<_> = plan
        .into_par_iter()
        .map(|(d, flavor, s, _)| {
            let t = random_semilinear(d, s, flavor).map_err(|e| error_case(d, s, e))?;
            let spec = PreserverSpec::congruence(t.clone());
            let dump = || vec![("map", spec_value(&spec))];
            let induced = InducedLineMap::new(spec.clone(), tol);
            let rec = reconstruct_semilinear(&induced, d).map_err(|e| counterexample(d, s, e.to_string(), dump()))?;
            if !projectively_equal(rec.operator.matrix(), t.matrix()) || rec.operator.flavor() != flavor {
                return Err(counterexample(
                    d,
                    s,
                    format!(
                        "reconstructed {} operator is not a multiple of T",
                        rec.operator.flavor().as_str()
                    ),
                    vec![
                        ("map", spec_value(&spec)),
                        ("reconstructed", exact_value(rec.operator.matrix())),
                    ],
                ));
            }
            let misses = count_disagreements(&induced, &rec.operator, projectivity_trials, derive_seed(s, 5))
                .map_err(|e| error_case(d, s, e))?;
            if misses > 0 {
                return Err(counterexample(
                    d,
                    s,
                    format!("{misses} held-out lines disagree"),
                    dump(),
                ));
            }
            if d >= 3 {
                let report = verify_projectivity(&induced, projectivity_trials, derive_seed(s, 6))
                    .map_err(|e| error_case(d, s, e))?;
                if !report.passed() {
                    return Err(counterexample(
                        d,
                        s,
                        format!(
                            "coplanarity check failed: {} failures, {} collisions",
                            report.failures.len(),
                            report.collisions
                        ),
                        dump(),
                    ));
                }
            }
            Ok(())
        })
        .collect();
    result.absorb(outcomes);
    result
}

/// The line map swapping `[e1]` and `[e2]` in dimension 3 is rejected by the
/// coplanarity check and by reconstruction.
pub fn swap_counterexample_rejected(projectivity_trials: usize, seed: u64) -> PropertyResult {
    let mut result = PropertyResult::new("swap_counterexample_rejected", "exact", None, seed, &[3]);
    let swap = SwapLineMap { dim: 3, i: 0, j: 1 };
    let projectivity = verify_projectivity(&swap, projectivity_trials, seed).map(|r| r.passed());
    result.record(match projectivity {
        Ok(false) => Ok(()),
        Ok(true) => Err(counterexample(3, seed, "coplanarity check accepted the swap", vec![])),
        Err(e) => Err(error_case(3, seed, e)),
    });
    result.record(match reconstruct_semilinear(&swap, 3) {
        Err(_) => Ok(()),
        Ok(r) => Err(counterexample(
            3,
            seed,
            "reconstruction accepted the swap",
            vec![("reconstructed", exact_value(r.operator.matrix()))],
        )),
    });
    result
}

fn float_pair(dim: usize, index: usize, seed: u64) -> Result<(PsdOperator<C>, PsdOperator<C>)> {
    let pick = |k: u64| (derive_seed(seed, k) % (dim as u64 + 1)) as usize;
    match index % 5 {
        0 => Ok((
            random_psd(dim, pick(1), derive_seed(seed, 2))?,
            random_psd(dim, dim, derive_seed(seed, 3))?,
        )),
        1 => random_pair_with_relation(dim, PairRelation::Singular, seed),
        2 if dim >= 3 => random_pair_with_relation(dim, PairRelation::Incomparable, seed),
        _ => Ok((
            random_psd(dim, pick(1), derive_seed(seed, 2))?,
            random_psd(dim, pick(3), derive_seed(seed, 4))?,
        )),
    }
}

/// Lebesgue decomposition: sum, `A_ac ≪ B` and `A_s ⊥ B` within `tol`, no
/// sampled `C ≤ A` with `C ≪ B` escapes `A_ac + tol·I`, and the degenerate
/// cases `B` invertible and `A ⊥ B` give `(A, 0)` and `(0, A)`.
pub fn lebesgue_decomposition(
    dims: &[usize],
    instances_per_dim: usize,
    contractions: usize,
    seed: u64,
    tol: f64,
) -> PropertyResult {
    let mut result = PropertyResult::new("lebesgue_decomposition", "float", Some(tol), seed, dims);
    let t = Tol::uniform(tol);
    result.absorb(per_trial(dims, instances_per_dim, seed, |d, i, s| {
        let (a, b) = float_pair(d, i, s).map_err(|e| error_case(d, s, e))?;
        let dump = |msg: String| counterexample(d, s, msg, vec![("A", fv(&a)), ("B", fv(&b))]);
        let dec = decompose(&a, &b, &t).map_err(|e| dump(format!("error: {e}")))?;
        let degenerate = if b.is_invertible() {
            Some(("B invertible", a.matrix().clone(), Matrix::zeros(d, d)))
        } else if is_singular(&a, &b, &t).map_err(|e| dump(format!("error: {e}")))? {
            Some(("A ⊥ B", Matrix::zeros(d, d), a.matrix().clone()))
        } else {
            None
        };
        if let Some((case, want_ac, want_s)) = degenerate {
            let gap = dec
                .ac
                .matrix()
                .max_diff(&want_ac)
                .max(dec.singular.matrix().max_diff(&want_s));
            if gap > tol {
                return Err(dump(format!("{case}: decomposition off by {gap:e}")));
            }
        }
        let report = verify_decomposition(&a, &b, &dec, contractions, derive_seed(s, 7), tol, &t)
            .map_err(|e| dump(format!("error: {e}")))?;
        if report.passed(tol) {
            Ok(())
        } else {
            Err(dump(format!(
                "sum residual {:e}, ac ≪ B {}, singular ⊥ B {}, {} maximality violations (worst margin {:e})",
                report.sum_residual,
                report.ac_is_abs_continuous,
                report.singular_is_singular,
                report.maximality_violations,
                report.worst_margin
            )))
        }
    }));
    result
}

fn well_conditioned(a: &PsdOperator<Q>) -> bool {
    let vals = float_eigenvalues(&a.matrix().to_float());
    let top = vals.iter().copied().fold(0.0, f64::max);
    let mut nonzero: Vec<f64> = vals.into_iter().collect();
    nonzero.sort_by(|x, y| y.total_cmp(x));
    nonzero.truncate(a.rank());
    nonzero.last().is_none_or(|&low| low / top > CONDITION_FLOOR)
}

fn booleans(r: &RelationReport) -> [bool; 6] {
    [
        r.leq_ab,
        r.leq_ba,
        r.abs_cont_ab,
        r.abs_cont_ba,
        r.singular,
        r.same_range_class,
    ]
}

/// Every boolean field of `analyze_pair` agrees between the exact backend
/// and the float backend with default tolerances, on pairs whose nonzero
/// spectra satisfy `λ_min/λ_max > 10⁻⁶`.
pub fn backend_agreement(dims: &[usize], trials: usize, seed: u64) -> PropertyResult {
    let mut result = PropertyResult::new("backend_agreement", "exact+float", None, seed, dims);
    let tol = Tol::default();
    result.absorb(per_trial(dims, trials, seed, |d, i, s| {
        let (a, b) = (0..psdcone::generators::RETRY_BUDGET)
            .map(|k| trial_pair(d, i, derive_seed(s, k)))
            .filter_map(|p| p.ok())
            .find(|(a, b)| well_conditioned(a) && well_conditioned(b))
            .ok_or_else(|| counterexample(d, s, "no well-conditioned pair within the retry budget", vec![]))?;
        let run = || -> Result<(RelationReport, RelationReport)> {
            let exact = analyze_pair(&a, &b, &tol)?;
            let float = analyze_pair(&a.to_float(&tol)?, &b.to_float(&tol)?, &tol)?;
            Ok((exact, float))
        };
        let (exact, float) = run().map_err(|e| error_case(d, s, e))?;
        if booleans(&exact) == booleans(&float) {
            Ok(())
        } else {
            Err(counterexample(
                d,
                s,
                format!("exact {:?} vs float {:?}", booleans(&exact), booleans(&float)),
                vec![("A", ev(&a)), ("B", ev(&b))],
            ))
        }
    }));
    result
}

/// Runs every property with sample sizes derived from `config.trials`.
pub fn run_suite(config: &SuiteConfig) -> SuiteReport {
    let dims = &config.dims;
    let n = config.trials;
    let seed = |k: u64| derive_seed(config.seed, k);
    let maps = n.clamp(1, 4);
    let mut properties = vec![
        abs_continuity_vs_domination(dims, n, seed(1)),
        singularity_witness(dims, n, seed(2)),
        congruence_preservation(dims, maps, n, seed(3)),
    ];
    if !config.skip_float {
        properties.push(form_iv_preservation(dims, maps, n, seed(4), FLOAT_TOL));
    }
    properties.push(range_form_congruence(dims, maps, n, seed(5)));
    if !config.skip_float {
        properties.push(range_form_form_iv(dims, maps, n, seed(6), FLOAT_TOL));
    }
    properties.push(wild_preservation(dims, n, seed(7)));
    properties.push(wild_moves_invertibles(dims, n, seed(8)));
    properties.push(composite_preservation(dims, n, seed(9)));
    if dims.contains(&2) {
        properties.push(dim2_necessary_conditions(n, seed(10)));
    }
    properties.push(projective_round_trip(dims, (n / 10).max(1), 5, seed(11)));
    properties.push(swap_counterexample_rejected(5, seed(12)));
    if !config.skip_float {
        properties.push(lebesgue_decomposition(dims, (n / 4).max(1), 100, seed(13), FLOAT_TOL));
        properties.push(backend_agreement(dims, n, seed(14)));
    }
    let total_checks = properties.iter().map(|p| p.checks).sum();
    let total_failures = properties.iter().map(|p| p.failures).sum();
    SuiteReport {
        seed: config.seed,
        dims: dims.clone(),
        trials: n,
        skip_float: config.skip_float,
        properties,
        total_checks,
        total_failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_is_reproducible() {
        let config = SuiteConfig {
            dims: vec![2, 3],
            trials: 12,
            seed: 3,
            skip_float: false,
        };
        let a = run_suite(&config);
        assert!(a.passed(), "{}", a.to_json());
        assert_eq!(a.to_json(), run_suite(&config).to_json());
    }

    #[test]
    fn trial_pairs_cover_rank_combinations() {
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..18 {
            let (a, b) = trial_pair(2, i, i as u64).unwrap();
            if i % 2 == 0 {
                seen.insert((a.rank(), b.rank()));
            }
        }
        assert_eq!(seen.len(), 9);
    }
}

use proptest::prelude::*;

use psdcone::generators::{random_pair_with_relation, random_psd, random_semilinear, PairRelation};
use psdcone::lebesgue::decompose;
use psdcone::preserver::Flavor;
use psdcone::projective::{projectively_equal, reconstruct_semilinear};
use psdcone::relations::{analyze_pair, is_abs_continuous, is_singular, leq, RelationReport};
use psdcone::{Complex64, GaussianRational, Matrix, PsdOperator, Scalar, Tol};

type Q = GaussianRational;

fn exact_pair(dim: usize, ra: usize, rb: usize, seed: u64) -> (PsdOperator<Q>, PsdOperator<Q>) {
    (
        random_psd::<Q>(dim, ra.min(dim), seed).unwrap(),
        random_psd::<Q>(dim, rb.min(dim), seed ^ 0x9e37_79b9).unwrap(),
    )
}

fn flags(r: &RelationReport) -> [bool; 6] {
    [
        r.leq_ab,
        r.leq_ba,
        r.abs_cont_ab,
        r.abs_cont_ba,
        r.singular,
        r.same_range_class,
    ]
}

fn add<S: Scalar>(a: &PsdOperator<S>, b: &PsdOperator<S>) -> PsdOperator<S> {
    PsdOperator::new(a.matrix() + b.matrix(), &Tol::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn range_dimensions_add_up(dim in 1usize..5, ra in 0usize..5, rb in 0usize..5, seed in any::<u64>()) {
        let (a, b) = exact_pair(dim, ra, rb, seed);
        let r = analyze_pair(&a, &b, &Tol::default()).unwrap();
        prop_assert_eq!(r.dim_range_sum + r.dim_range_intersection, r.rank_a + r.rank_b);
        prop_assert_eq!(r.singular, r.dim_range_intersection == 0);
        prop_assert_eq!(r.abs_cont_ab, r.dim_range_intersection == r.rank_a);
    }

    #[test]
    fn range_relations_ignore_positive_scaling(
        dim in 1usize..5, ra in 0usize..5, rb in 0usize..5, seed in any::<u64>(),
        p in 1i64..50, q in 1i64..50,
    ) {
        let tol = Tol::default();
        let (a, b) = exact_pair(dim, ra, rb, seed);
        let before = analyze_pair(&a, &b, &tol).unwrap();
        let after = analyze_pair(&a.scaled(&Q::from_parts(p, 0)), &b.scaled(&Q::from_parts(q, 0)), &tol).unwrap();
        prop_assert_eq!(&flags(&before)[2..], &flags(&after)[2..]);
    }

    #[test]
    fn sum_dominates_each_summand(dim in 1usize..5, ra in 0usize..5, rb in 0usize..5, seed in any::<u64>()) {
        let tol = Tol::default();
        let (a, b) = exact_pair(dim, ra, rb, seed);
        let s = add(&a, &b);
        prop_assert!(leq(&a, &s, &tol).unwrap());
        prop_assert!(is_abs_continuous(&a, &s, &tol).unwrap());
        prop_assert!(is_abs_continuous(&b, &s, &tol).unwrap());
        prop_assert_eq!(is_singular(&a, &b, &tol).unwrap(), is_singular(&b, &a, &tol).unwrap());
    }

    #[test]
    fn domination_constant_bounds_the_pair(dim in 1usize..5, ra in 0usize..5, seed in any::<u64>()) {
        let tol = Tol::default();
        let (a, b) = exact_pair(dim, ra, dim, seed);
        let r = analyze_pair(&a, &b, &tol).unwrap();
        let c = r.min_domination_constant.expect("B is invertible");
        // A ≤ c'·B for a slightly larger c' but not for a slightly smaller one.
        let up = Q::from_f64(c * (1.0 + 1e-6) + 1e-12);
        prop_assert!(leq(&a, &b.scaled(&up), &tol).unwrap());
        if c > 1e-9 {
            let down = Q::from_f64(c * (1.0 - 1e-6));
            prop_assert!(!leq(&a, &b.scaled(&down), &tol).unwrap());
        }
    }

    #[test]
    fn generated_relations_hold(dim in 3usize..6, seed in any::<u64>()) {
        let tol = Tol::default();
        let (a, b) = random_pair_with_relation::<Q>(dim, PairRelation::Singular, seed).unwrap();
        prop_assert!(is_singular(&a, &b, &tol).unwrap());
        let (a, b) = random_pair_with_relation::<Q>(dim, PairRelation::AbsContinuous, seed).unwrap();
        prop_assert!(is_abs_continuous(&a, &b, &tol).unwrap());
        let (a, b) = random_pair_with_relation::<Q>(dim, PairRelation::Incomparable, seed).unwrap();
        let r = analyze_pair(&a, &b, &tol).unwrap();
        prop_assert!(!r.abs_cont_ab && !r.abs_cont_ba && !r.singular);
    }

    #[test]
    fn exact_congruence_preserves_every_relation(dim in 2usize..5, ra in 0usize..5, rb in 0usize..5, seed in any::<u64>(), conj in any::<bool>()) {
        let tol = Tol::default();
        let (a, b) = exact_pair(dim, ra, rb, seed);
        let flavor = if conj { Flavor::Conjugate } else { Flavor::Linear };
        let t = random_semilinear(dim, seed, flavor).unwrap();
        let ta = PsdOperator::new(t.congruence(a.matrix()), &tol).unwrap();
        let tb = PsdOperator::new(t.congruence(b.matrix()), &tol).unwrap();
        let before = analyze_pair(&a, &b, &tol).unwrap();
        let after = analyze_pair(&ta, &tb, &tol).unwrap();
        prop_assert_eq!(flags(&before), flags(&after));
        prop_assert_eq!(before.min_domination_constant.is_some(), after.min_domination_constant.is_some());
    }

    #[test]
    fn semilinear_operators_are_reconstructed(dim in 2usize..6, seed in any::<u64>(), conj in any::<bool>()) {
        let flavor = if conj { Flavor::Conjugate } else { Flavor::Linear };
        let t = random_semilinear(dim, seed, flavor).unwrap();
        let rec = reconstruct_semilinear(&t, dim).unwrap();
        prop_assert_eq!(rec.operator.flavor(), flavor);
        prop_assert!(projectively_equal(rec.operator.matrix(), t.matrix()));
        prop_assert_eq!(rec.certifiable, dim >= 3);
    }
}

fn float_pair(dim: usize, ra: usize, rb: usize, seed: u64) -> (PsdOperator<Complex64>, PsdOperator<Complex64>) {
    (
        random_psd::<Complex64>(dim, ra.min(dim), seed).unwrap(),
        random_psd::<Complex64>(dim, rb.min(dim), seed ^ 0x9e37_79b9).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lebesgue_parts_are_idempotent(dim in 2usize..5, ra in 1usize..5, rb in 1usize..4, seed in any::<u64>()) {
        let tol = Tol::uniform(1e-8);
        let (a, b) = float_pair(dim, ra, rb, seed);
        let d = decompose(&a, &b, &tol).unwrap();
        let again = decompose(&d.ac, &b, &tol).unwrap();
        prop_assert!(again.ac.matrix().max_diff(d.ac.matrix()) < 1e-8);
        prop_assert!(again.singular.matrix().max_modulus() < 1e-8);
        let rest = decompose(&d.singular, &b, &tol).unwrap();
        prop_assert!(rest.ac.matrix().max_modulus() < 1e-8);
    }

    #[test]
    fn lebesgue_parts_scale_with_a_and_ignore_scaling_b(
        dim in 2usize..5, ra in 1usize..5, rb in 1usize..4, seed in any::<u64>(),
        c in 0.25f64..4.0,
    ) {
        let tol = Tol::uniform(1e-8);
        let (a, b) = float_pair(dim, ra, rb, seed);
        let d = decompose(&a, &b, &tol).unwrap();
        let k = Complex64::new(c, 0.0);
        let scaled_a = decompose(&a.scaled(&k), &b, &tol).unwrap();
        prop_assert!(scaled_a.ac.matrix().max_diff(&d.ac.matrix().scale(&k)) < 1e-8);
        let scaled_b = decompose(&a, &b.scaled(&k), &tol).unwrap();
        prop_assert!(scaled_b.ac.matrix().max_diff(d.ac.matrix()) < 1e-8);
        let sum: Matrix<Complex64> = d.ac.matrix() + d.singular.matrix();
        prop_assert!(sum.max_diff(a.matrix()) < 1e-8);
    }
}

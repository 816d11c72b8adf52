#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use common::*;
use proptest::prelude::*;
use sdstab::classifier::{check_214, classify_point, Tag};
use sdstab::liealg::{hall_basis, lie_bracket, LieContext};
use sdstab::symexpr::ScalarField;
use sdstab::templates::Corollary2;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn printed_expressions_reparse_exactly(e in any_expr(), pts in prop::collection::vec(point(3.0), 10)) {
        prop_assert_eq!(check_round_trip(&e, &pts), Ok(()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn partials_match_central_differences(e in smooth_expr(), x in point(1.0), i in 1usize..=3) {
        prop_assert_eq!(check_partial(&e, &x, i), Ok(()));
    }

    #[test]
    fn simplify_preserves_values(e in any_expr(), pts in prop::collection::vec(point(2.0), 100)) {
        prop_assert_eq!(check_simplify(&e, &pts), Ok(()));
    }

    #[test]
    fn bracket_is_antisymmetric(a in gentle_field(), b in gentle_field(), x in point(1.0)) {
        prop_assert!(antisymmetry_error(&a, &b, &x) <= 1e-10);
    }

    #[test]
    fn jacobi_identity(a in gentle_field(), b in gentle_field(), c in gentle_field(), x in point(1.0)) {
        prop_assert!(jacobi_error(&a, &b, &c, &x) <= 1e-9);
    }

    #[test]
    fn bracket_acts_as_commutator(a in gentle_field(), b in gentle_field(), v in smooth_expr(), x in point(1.0)) {
        let v = ScalarField::new(DIM, v).unwrap();
        prop_assert!(leibniz_error(&a, &b, &v, &x) <= 1e-9 * (1.0 + v.eval(&x).unwrap().abs()));
    }

    #[test]
    fn nested_words_have_matching_order(n in 1usize..=6) {
        for w in hall_basis(n) {
            prop_assert_eq!(w.order(), w.leaf_count());
            prop_assert!(w.order() <= n);
        }
    }

    #[test]
    fn vanishing_conditions_are_monotone_in_order(x in point(1.0), axis in 0usize..4) {
        let sys = Corollary2::new("1", "1", 3).unwrap().system().unwrap();
        let mut x = x;
        // Bias towards the slices where the conditions hold for several orders.
        if axis >= 1 { x[2] = 0.0; }
        if axis >= 2 { x[1] = 0.0; }
        prop_assume!(x.iter().any(|c| *c != 0.0));
        let holds: Vec<bool> = (1..=5).map(|n| check_214(&sys, &x, n).unwrap().0).collect();
        for n in 1..holds.len() {
            prop_assert!(!holds[n] || holds[n - 1], "order {} holds but {} does not", n + 1, n);
        }
        let c = classify_point(&sys, &x).unwrap();
        prop_assert_eq!(&c, &classify_point(&sys, &x).unwrap());
        match c.tag {
            Tag::P2 => prop_assert!(c.n % 2 == 1),
            Tag::P3 => prop_assert!(c.n.is_multiple_of(2)),
            _ => {}
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_commutator_matches_bracket(a in gentle_field(), b in gentle_field(), x in point(1.0)) {
        let sign = commutator_sign();
        for t in [1e-2, 1e-3] {
            let r = flow_commutator_residual(&a, &b, &x, t, sign);
            prop_assert!(r <= 10.0 * t * t * t, "t = {t}: residual {r:e}");
        }
    }
}

#[test]
fn hall_counts_follow_witt_formula() {
    let oracle: Vec<u64> = (1..=8).map(witt_count).collect();
    assert_eq!(hall_counts(8), oracle);
}

#[test]
fn commutator_sign_is_positive_for_standard_bracket() {
    assert_eq!(commutator_sign(), 1.0);
}

#[test]
fn fixed_step_integrator_is_high_order() {
    for steps in [4, 8, 16] {
        assert!(integrator_order_ratio(steps) >= 8.0);
    }
}

#[test]
fn linear_pair_bracket() {
    let x = sdstab::liealg::VectorField::parse(&["x2", "0"]).unwrap();
    let y = sdstab::liealg::VectorField::parse(&["0", "x1"]).unwrap();
    assert_eq!(
        lie_bracket(&x, &y).unwrap().eval(&[2.0, 3.0]).unwrap(),
        vec![-2.0, 3.0]
    );
    let ctx = LieContext::new(x, y).unwrap();
    assert_eq!(ctx.dim(), 2);
}

use conformal_stl::cqr::{conformal_quantile, widen};
use conformal_stl::interval::{compose, RobustnessInterval};
use conformal_stl::opt::{linear_loss, telex_loss, LossConfig, LossKind};
use conformal_stl::stl::{
    parse_sexpr, simplify_cnf, to_sexpr, trivial_penalty, truth_table, Atom, AtomSet, BoxRegion, Expr,
};
use proptest::prelude::*;

const M: usize = 5;

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        8 => (0..M).prop_map(Expr::atom),
        1 => Just(Expr::top()),
        1 => Just(Expr::bottom()),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::not),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::and),
            prop::collection::vec(inner, 2..4).prop_map(Expr::or),
        ]
    })
}

fn rho(e: &Expr, r: &[f64]) -> f64 {
    match e {
        Expr::Atom(i) => r[*i],
        Expr::Not(c) => -rho(c, r),
        Expr::And(cs) => cs.iter().map(|c| rho(c, r)).fold(f64::INFINITY, f64::min),
        Expr::Or(cs) => cs.iter().map(|c| rho(c, r)).fold(f64::NEG_INFINITY, f64::max),
    }
}

fn atoms() -> AtomSet {
    AtomSet::new(
        (0..M)
            .map(|i| {
                let b = BoxRegion::new([i as f64, 0.0], [i as f64 + 1.0, 1.0]).unwrap();
                Atom::eventually_in_box(format!("box{}", i + 1), b)
            })
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn robustness_matches_recursive_definition(e in expr_strategy(), r in prop::collection::vec(-5.0f64..5.0, M)) {
        prop_assert_eq!(e.eval_robustness(&r), rho(&e, &r));
        prop_assert_eq!(Expr::not(Expr::not(e.clone())).eval_robustness(&r), e.eval_robustness(&r));
    }

    #[test]
    fn sign_of_robustness_agrees_with_boolean_value(e in expr_strategy(), r in prop::collection::vec(-5.0f64..5.0, M)) {
        let v = e.eval_robustness(&r);
        let mask = r.iter().enumerate().fold(0u64, |m, (i, x)| if *x > 0.0 { m | 1 << i } else { m });
        if v.is_finite() && v != 0.0 && r.iter().all(|x| *x != 0.0) {
            prop_assert_eq!(v > 0.0, e.eval_bool(mask));
        }
    }

    #[test]
    fn truth_table_matches_pointwise_evaluation(e in expr_strategy()) {
        let t = truth_table(&e, M).unwrap();
        for v in 0..1usize << M {
            prop_assert_eq!(t.get(v), e.eval_bool(v as u64));
        }
    }

    #[test]
    fn cnf_is_equivalent_idempotent_and_never_longer(e in expr_strategy()) {
        let c = simplify_cnf(&e);
        prop_assert_eq!(truth_table(&c, M).unwrap(), truth_table(&e, M).unwrap());
        prop_assert_eq!(simplify_cnf(&c), c.clone());
        prop_assert_eq!(trivial_penalty(&e), e.len().saturating_sub(c.len()));
        prop_assert_eq!(truth_table(&e, M).unwrap().is_constant(), c.is_constant());
    }

    #[test]
    fn sexpr_round_trip(e in expr_strategy()) {
        let a = atoms();
        let s = to_sexpr(&e, &a).unwrap();
        let back = parse_sexpr(&s, &a).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(to_sexpr(&back, &a).unwrap(), s);
    }

    #[test]
    fn composed_interval_contains_every_member(
        e in expr_strategy(),
        base in prop::collection::vec((-3.0f64..3.0, 0.0f64..2.0), M),
        t in prop::collection::vec(0.0f64..=1.0, M),
    ) {
        let ivs: Vec<RobustnessInterval> = base.iter().map(|(a, w)| RobustnessInterval::new(*a, a + w).unwrap()).collect();
        let out = compose(&e, &ivs).unwrap();
        let r: Vec<f64> = ivs.iter().zip(&t).map(|(iv, t)| iv.l + t * (iv.h - iv.l)).collect();
        let v = rho(&e, &r);
        prop_assert!(out.l <= v && v <= out.h);
        // The endpoints themselves are attained at the corners.
        let points: Vec<RobustnessInterval> = r.iter().map(|x| RobustnessInterval::point(*x)).collect();
        let p = compose(&e, &points).unwrap();
        prop_assert_eq!((p.l, p.h), (v, v));
    }

    #[test]
    fn conformal_quantile_is_an_order_statistic(mut s in prop::collection::vec(-10.0f64..10.0, 20..60), alpha in 0.05f64..0.5) {
        let q = conformal_quantile(&s, alpha).unwrap();
        let n = s.len();
        let rank = (((n + 1) as f64) * (1.0 - alpha) - 1e-9).ceil() as usize;
        s.sort_by(f64::total_cmp);
        prop_assert_eq!(q, s[rank - 1]);
        s.reverse();
        prop_assert_eq!(conformal_quantile(&s, alpha).unwrap(), q);
    }

    #[test]
    fn widening_is_ordered_and_monotone(a in -5.0f64..5.0, b in -5.0f64..5.0, q in -3.0f64..3.0) {
        let iv = widen(a, b, q);
        prop_assert!(iv.l <= iv.h);
        if q >= 0.0 {
            prop_assert!(iv.l <= a.min(b) && iv.h >= a.max(b));
        }
    }

    #[test]
    fn losses_are_finite_and_linear_is_nonnegative(l in -20.0f64..20.0, d in 0.0f64..20.0) {
        let cfg = LossConfig { kind: LossKind::Linear, ..Default::default() };
        let h = l + d;
        prop_assert!(linear_loss(l, h, &cfg) >= 0.0);
        prop_assert!(telex_loss(l, h, &LossConfig::default()).is_finite());
    }
}

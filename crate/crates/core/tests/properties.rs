use proptest::prelude::*;

use riskconv::approx::equidistributed_average;
use riskconv::infconv::{infconv_law_invariant, infconv_surplus};
use riskconv::norms::{norm, RiNorm};
use riskconv::prob::{cond_expect, FiniteSpace, Partition, RandomVariable};
use riskconv::risk::{
    es_alpha, evaluate, from_acceptance, neg_expectation, AcceptanceSet, Budget, Entropic, ExpectedShortfall, Numeraire, RiskMeasure,
};
use riskconv::scalar::{ratio, Rational};

fn exact_values(max_len: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-60i64..=60, 1i64..=6).prop_map(|(n, d)| ratio(n, d)), 1..=max_len)
}

fn uniform(values: Vec<Rational>) -> RandomVariable<Rational> {
    RandomVariable::new(FiniteSpace::uniform(values.len()).unwrap(), values).unwrap()
}

fn labels(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..n.max(1), n)
}

proptest! {
    #[test]
    fn es_is_cash_additive_and_law_invariant(v in exact_values(9), num in 1i64..=10, m in -20i64..=20, seed in any::<u64>()) {
        let x = uniform(v.clone());
        let alpha = ratio(num, 10);
        let base = es_alpha(&x, &alpha).unwrap();
        let shifted = es_alpha(&x.shift(&ratio(m, 1)), &alpha).unwrap();
        prop_assert_eq!(shifted, &base - ratio(m, 1));
        let mut p = v;
        let k = (seed as usize) % p.len();
        p.rotate_left(k);
        prop_assert_eq!(es_alpha(&uniform(p), &alpha).unwrap(), base.clone());
        prop_assert!(base >= neg_expectation(&x));
    }

    #[test]
    fn tower_property_is_exact((v, l) in exact_values(10).prop_flat_map(|v| { let n = v.len(); (Just(v), labels(n)) })) {
        let x = uniform(v);
        let pi = Partition::from_labels(&l);
        let ce = cond_expect(&x, &pi).unwrap();
        prop_assert_eq!(ce.expectation(), x.expectation());
        prop_assert_eq!(cond_expect(&ce, &pi).unwrap(), ce);
    }

    #[test]
    fn equidistributed_mean_is_conditional_expectation((v, l) in exact_values(8).prop_flat_map(|v| { let n = v.len(); (Just(v), labels(n)) })) {
        let x = uniform(v);
        let pi = Partition::from_labels(&l);
        let fam = equidistributed_average(&x, &pi, 10_000, 1).unwrap();
        prop_assert_eq!(fam.mean(), cond_expect(&x, &pi).unwrap());
        prop_assert_eq!(fam.epsilon(), 0.0);
    }

    #[test]
    fn conditioning_contracts_lp_norms(v in prop::collection::vec(-5.0f64..5.0, 2..10), p in 1.0f64..6.0, seed in any::<u64>()) {
        let n = v.len();
        let x = RandomVariable::new(FiniteSpace::uniform(n).unwrap(), v).unwrap();
        let l: Vec<usize> = (0..n).map(|i| ((seed >> (i % 60)) as usize + i) % 3).collect();
        let ce = cond_expect(&x, &Partition::from_labels(&l)).unwrap();
        let norm_p = RiNorm::Lp(p);
        prop_assert!(norm(&norm_p, &ce).unwrap() <= norm(&norm_p, &x).unwrap() + 1e-9);
    }

    #[test]
    fn surplus_convolution_matches_merged_budget(v in exact_values(6), w in 1i64..=4, c1 in 0i64..=6, c2 in 0i64..=6) {
        let x = uniform(v);
        let space = x.space().clone();
        let set = |c: i64| AcceptanceSet::budget(Budget::flat(space.clone(), ratio(w, 1), ratio(c, 4)).unwrap());
        let cash = Numeraire::cash(space.clone());
        let r = infconv_surplus(&set(c1), &set(c2), &cash, &x).unwrap();
        let merged = from_acceptance(set(c1 + c2), cash).unwrap().threshold(&x).unwrap();
        prop_assert_eq!(merged.finite(), Some(r.value.clone()));
        prop_assert_eq!(&r.pieces.0 + &r.pieces.1, x);
        let total = r.piece_values.0.finite().unwrap() + r.piece_values.1.finite().unwrap();
        prop_assert_eq!(total, r.value);
    }
}

fn small_position() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-16i32..=16).prop_map(|k| k as f64 / 4.0), 2..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn risk_sharing_is_cash_additive_and_bounded(v in small_position(), a in 0.1f64..1.0, g in 0.3f64..3.0, m in -3i32..=3) {
        let (es, ent) = (ExpectedShortfall::new(a).unwrap(), Entropic::new(g).unwrap());
        let ms: [&dyn RiskMeasure; 2] = [&es, &ent];
        let x = RandomVariable::new(FiniteSpace::uniform(v.len()).unwrap(), v).unwrap();
        let r = infconv_law_invariant(&ms, &x, &Default::default()).unwrap();
        let shifted = infconv_law_invariant(&ms, &x.shift(&(m as f64)), &Default::default()).unwrap();
        prop_assert!((shifted.value - (r.value - m as f64)).abs() < 1e-6);
        let upper = evaluate(&es, &x).unwrap().min(evaluate(&ent, &x).unwrap());
        prop_assert!(r.value <= upper + 1e-9);
        prop_assert!(r.value >= -x.expectation() - 1e-9);
    }

    #[test]
    fn risk_sharing_is_law_invariant(v in small_position(), a in 0.1f64..1.0, b in 0.1f64..1.0, k in 0usize..4) {
        let (e1, e2) = (ExpectedShortfall::new(a).unwrap(), ExpectedShortfall::new(b).unwrap());
        let ms: [&dyn RiskMeasure; 2] = [&e1, &e2];
        let space = FiniteSpace::uniform(v.len()).unwrap();
        let mut w = v.clone();
        w.rotate_left(k % v.len());
        let x = RandomVariable::new(space.clone(), v).unwrap();
        let y = RandomVariable::new(space, w).unwrap();
        let (rx, ry) = (infconv_law_invariant(&ms, &x, &Default::default()).unwrap(), infconv_law_invariant(&ms, &y, &Default::default()).unwrap());
        prop_assert!((rx.value - ry.value).abs() < 1e-9);
        let pieces_x = rx.allocation.unwrap();
        for i in 0..2 {
            let s = pieces_x.slopes(i);
            prop_assert!(s.iter().all(|t| (-1e-12..=1.0 + 1e-12).contains(t)));
        }
    }
}

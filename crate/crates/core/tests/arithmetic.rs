mod common;

use common::*;
use fkam_core::arithmetic::*;
use num_bigint::BigInt;
use proptest::prelude::*;

#[test]
fn cf_shortcut_matches_table_for_sqrt2() {
    let a = sqrt2_minus_1();
    let cf = ContinuedFraction::expand(&a, 30).unwrap();
    let table = WorstDivisorTable::single(&a, 2000).unwrap();
    for n in 1..=2000u64 {
        let (v, q) = worst_divisor_arg(&cf, n as u128).unwrap();
        assert_eq!(v, table.value(n).unwrap());
        assert_eq!(q as i64, table.argmax(n).unwrap());
    }
}

#[test]
fn pair_fast_matches_brute_for_sqrt2_pair() {
    let a = sqrt2_minus_1();
    let b = Real::from_decimal("0.30000000000000000000000000000000000000000000000000", 256).unwrap();
    let table = WorstDivisorTable::pair(&a, &b, 3000).unwrap();
    for n in [1u64, 2, 3, 10, 99, 500, 2999, 3000] {
        let fast = worst_divisor_pair(&a, &b, n as u128).unwrap();
        assert_eq!(fast.distance, table.distance(n).unwrap(), "N = {n}");
    }
}

#[test]
fn decimal_floor_exhausts_depth() {
    let g = Real::from_decimal("0.6180339887", 256).unwrap();
    let err = ContinuedFraction::expand(&g, 60).unwrap_err();
    assert!(matches!(err, ArithError::PrecisionExhausted { .. }));
    let safe = ContinuedFraction::expand_safe(&g, 60).unwrap();
    assert!(safe.depth() > 5 && safe.depth() < 60);
}

#[test]
fn safe_expansion_stops_before_u128_overflow() {
    let g = Real::from_quotients(&[], &[1], 512).unwrap();
    assert!(matches!(ContinuedFraction::expand(&g, 400), Err(ArithError::DenominatorOverflow(_))));
    let cf = ContinuedFraction::expand_safe(&g, 400).unwrap();
    assert!(cf.q_last() > u128::MAX / 2);
    assert_eq!(cf.denominators[cf.depth()], cf.q_last());
}

#[test]
fn index_at_bounds() {
    let cf = ContinuedFraction::expand(&golden(), 20).unwrap();
    assert!(cf.index_at(0).is_err());
    assert!(cf.index_at(cf.q_last()).is_err());
    assert_eq!(cf.denominators[cf.index_at(20).unwrap()], 13);
}

#[test]
fn brjuno_sums_golden_finite() {
    let cf = ContinuedFraction::expand_safe(&golden(), 200).unwrap();
    let s = brjuno_partial(&cf, 30).unwrap();
    assert!(s.dyadic.is_finite() && s.russmann.is_finite());
    assert!(s.dyadic > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn denominators_follow_recurrence(q in proptest::collection::vec(1u64..20, 3..12)) {
        let a = Real::from_quotients(&q, &[1], 256).unwrap();
        let cf = ContinuedFraction::expand(&a, q.len()).unwrap();
        prop_assert_eq!(&cf.quotients[..q.len()], &q[..]);
        for k in 2..cf.denominators.len() {
            let a_k = cf.quotients[k - 1] as u128;
            prop_assert_eq!(cf.denominators[k], a_k * cf.denominators[k - 1] + cf.denominators[k - 2]);
        }
        for k in 1..cf.errors.len() {
            prop_assert!(cf.errors[k] < cf.errors[k - 1]);
        }
    }

    #[test]
    fn single_divisor_fast_equals_brute(q in proptest::collection::vec(1u64..30, 1..8), n in 1u64..600) {
        let a = Real::from_quotients(&q, &[1, 2], 256).unwrap();
        let cf = ContinuedFraction::expand_safe(&a, 80).unwrap();
        prop_assume!(cf.q_last() > n as u128);
        let table = WorstDivisorTable::single(&a, n).unwrap();
        let (v, q) = worst_divisor_arg(&cf, n as u128).unwrap();
        prop_assert_eq!(v, table.value(n).unwrap());
        prop_assert_eq!(q as i64, table.argmax(n).unwrap());
    }

    #[test]
    fn pair_divisor_fast_equals_brute(q in proptest::collection::vec(1u64..30, 1..8), sb in 0u64..u64::MAX, n in 0u64..400) {
        let a = Real::from_quotients(&q, &[1], 256).unwrap();
        let b = Real::from_mantissa(BigInt::from(sb) << 192, 256);
        prop_assume!(is_rational_pair(&a, &b, 400, 1e-12).is_none());
        let table = WorstDivisorTable::pair(&a, &b, n).unwrap();
        let fast = worst_divisor_pair(&a, &b, n as u128).unwrap();
        prop_assert_eq!(fast.distance, table.distance(n).unwrap());
    }

    #[test]
    fn nearest_int_dist_in_range(x in -1e6f64..1e6) {
        let r = Real::from_f64(x, 128);
        let d = r.nearest_int_dist().to_f64();
        prop_assert!((0.0..=0.5).contains(&d));
        let want = (x - x.round()).abs();
        prop_assert!((d - want).abs() < 1e-9);
    }
}

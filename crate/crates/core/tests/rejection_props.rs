mod common;

use acd_routing::domain::Preference;
use acd_routing::rejection::{
    compute_rejection, compute_rejection_batch, compute_rejection_batch_sequential, round2,
    QualityInput, RejectionResult,
};
use common::{rejection_oracle, round2_oracle};
use proptest::prelude::*;

fn pref_pair() -> impl Strategy<Value = [u8; 2]> {
    (1u8..=9, 1u8..=9)
        .prop_filter("distinct", |(a, b)| a != b)
        .prop_map(|(a, b)| [a, b])
}

fn acd() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.0), 10 => 0.0f64..600.0]
}

fn input(acd: [f64; 2], pref: [u8; 2], load_min: f64) -> QualityInput {
    QualityInput::new(
        [Some(acd[0]), Some(acd[1])],
        [
            Preference::new(pref[0]).unwrap(),
            Preference::new(pref[1]).unwrap(),
        ],
        load_min,
    )
    .unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn agrees_with_exact_oracle(a in acd(), b in acd(), pref in pref_pair(), lmin in 0.0f64..0.5) {
        let r = compute_rejection(&input([a, b], pref, lmin)).unwrap();
        let bal = r.balance.unwrap();
        let (max, rank, load, reject) = rejection_oracle([a, b], pref, lmin);
        prop_assert_eq!(bal.max_idx, max);
        for i in 0..2 {
            prop_assert!(close(bal.rank[i], rank[i]), "rank {:?} vs {:?}", bal.rank, rank);
            prop_assert!(close(bal.load[i], load[i]), "load {:?} vs {:?}", bal.load, load);
            prop_assert!((r.reject_pct[i] - reject[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn load_invariants(a in acd(), b in acd(), pref in pref_pair(), lmin in 0.0f64..0.5) {
        let r = compute_rejection(&input([a, b], pref, lmin)).unwrap();
        let bal = r.balance.unwrap();
        prop_assert!((bal.load[0] + bal.load[1] - 1.0).abs() <= 1e-12);
        let (lo, hi) = (bal.load[bal.min_idx()], bal.load[bal.max_idx]);
        prop_assert!(lmin - 1e-12 <= lo && lo <= 0.5 + 1e-12);
        prop_assert!(0.5 - 1e-12 <= hi && hi <= 1.0 - lmin + 1e-12);
        for p in r.reject_pct {
            prop_assert!((0.0..=100.0).contains(&p));
        }
    }

    #[test]
    fn only_the_preferred_vendor_is_rejected(a in acd(), b in acd(), pref in pref_pair(), lmin in 0.0f64..0.5) {
        let r = compute_rejection(&input([a, b], pref, lmin)).unwrap();
        let preferred = if pref[0] > pref[1] { 0 } else { 1 };
        prop_assert_eq!(r.reject_pct[1 - preferred], 0.0);
        prop_assert!(r.reject_pct[preferred] > 0.0 || lmin == 0.0 && a.min(b) == 0.0 && a.max(b) > 0.0);
    }

    #[test]
    fn scale_invariant(a in 0.01f64..600.0, b in 0.01f64..600.0, k in 0.01f64..100.0, pref in pref_pair(), lmin in 0.0f64..0.5) {
        let r1 = compute_rejection(&input([a, b], pref, lmin)).unwrap();
        let r2 = compute_rejection(&input([a * k, b * k], pref, lmin)).unwrap();
        for i in 0..2 {
            prop_assert!((r1.reject_pct[i] - r2.reject_pct[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn better_preferred_quality_never_raises_its_rejection(
        other in 0.01f64..600.0, a in 0.0f64..600.0, d in 0.0f64..600.0,
        pref in pref_pair(), lmin in 0.0f64..0.5,
    ) {
        let preferred = if pref[0] > pref[1] { 0 } else { 1 };
        let pair = |x: f64| {
            let mut acd = [other; 2];
            acd[preferred] = x;
            compute_rejection(&input(acd, pref, lmin)).unwrap().reject_pct[preferred]
        };
        prop_assert!(pair(a + d) <= pair(a) + 1e-9);
    }

    #[test]
    fn round2_matches_reference(x in 0.0f64..100.0) {
        prop_assert_eq!(round2(x), round2_oracle(x));
    }
}

#[test]
fn absent_evidence_rejects_nothing() {
    let prefs = [Preference::new(9).unwrap(), Preference::new(8).unwrap()];
    for acd in [[None, Some(3.0)], [Some(3.0), None], [None, None]] {
        let r = compute_rejection(&QualityInput {
            acd_min: acd,
            pref: prefs,
            load_min: 0.1,
        })
        .unwrap();
        assert_eq!(r, RejectionResult::NO_EVIDENCE);
    }
}

#[test]
fn batch_paths_agree() {
    let inputs: Vec<QualityInput> = (0..2000)
        .map(|i| {
            input(
                [f64::from(i % 37) * 0.7, f64::from(i % 11) + 0.5],
                [9, 8],
                0.1,
            )
        })
        .collect();
    let par: Vec<_> = compute_rejection_batch(&inputs)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let seq: Vec<_> = compute_rejection_batch_sequential(&inputs)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    assert_eq!(par, seq);
}

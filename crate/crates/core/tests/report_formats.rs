mod common;

use acd_routing::aggregate::{close_interval, IntervalRecord, IntervalState};
use acd_routing::domain::{Preference, RoutingGroup, VendorId};
use acd_routing::rejection::{compute_rejection, QualityInput};
use acd_routing::report::{
    interval_rows, parse_interval_csv, parse_interval_json, render_calc_breakdown,
    render_interval_table, TableFormat,
};
use acd_routing::store::{CounterSnapshot, MemoryStore};
use common::{cdrs_with_buckets, rejection_oracle, ts};
use proptest::prelude::*;

/// Two consecutive intervals for vendors 1 (preference 9) and 2 (preference 8).
fn two_interval_history() -> Vec<IntervalRecord> {
    let group = RoutingGroup::new(
        [VendorId(1), VendorId(2)],
        [Preference::new(9).unwrap(), Preference::new(8).unwrap()],
    )
    .unwrap();
    let store = MemoryStore::new();
    let spans = [
        (
            "2009-11-09 10:30:00",
            "2009-11-09 11:00:00",
            (4, 6, 2, 1),
            94,
            (1, 3, 0, 1),
            190,
        ),
        (
            "2009-11-09 11:00:00",
            "2009-11-09 11:30:00",
            (6, 0, 1, 2),
            6491,
            (1, 0, 0, 5),
            5428,
        ),
    ];
    let counters = [([5, 13], [2, 0]), ([13, 4], [4, 0])];
    spans
        .iter()
        .zip(counters)
        .map(|(&(open, close, a, at, b, bt), (received, rejected))| {
            let end = ts(close).plus_seconds(-30);
            let mut cdrs = cdrs_with_buckets(1, end, a, at);
            cdrs.extend(cdrs_with_buckets(2, end, b, bt));
            let (closed, _) = close_interval(
                &IntervalState::open(ts(open)),
                ts(close),
                &cdrs,
                &group,
                0.1,
                "37410",
                &store,
            )
            .unwrap();
            IntervalRecord {
                opened_at: closed.opened_at,
                closed_at: closed.closed_at,
                prefs: [9, 8],
                stats: closed.stats,
                result: closed.result,
                counters: CounterSnapshot { received, rejected },
            }
        })
        .collect()
}

#[test]
fn table_rows_show_target_balance() {
    let rows = interval_rows(&two_interval_history());
    assert_eq!(rows.len(), 4);
    // Newest first.
    assert_eq!(rows[0].date_time, "2009-11-09 11:30");
    let pick = |i: usize| {
        (
            rows[i].acd_min,
            rows[i].total_minutes,
            rows[i].target_balance_pct,
        )
    };
    assert_eq!(pick(0), (Some(36.06), 108.2, Some(70)));
    assert_eq!(pick(1), (Some(18.09), 90.5, Some(30)));
    assert_eq!(pick(2), (Some(0.17), 1.6, Some(19)));
    assert_eq!(pick(3), (Some(0.79), 3.2, Some(81)));
    assert_eq!((rows[2].received, rows[2].rejected), (5, 2));
}

#[test]
fn csv_and_json_tables_agree() {
    let history = two_interval_history();
    let csv =
        parse_interval_csv(&render_interval_table(&history, TableFormat::Csv).unwrap()).unwrap();
    let json =
        parse_interval_json(&render_interval_table(&history, TableFormat::Json).unwrap()).unwrap();
    assert_eq!(csv, json);
    assert_eq!(csv, interval_rows(&history));
}

#[test]
fn rendering_is_pure() {
    let history = two_interval_history();
    for format in [TableFormat::Html, TableFormat::Csv, TableFormat::Json] {
        let a = render_interval_table(&history, format).unwrap();
        assert_eq!(a, render_interval_table(&history, format).unwrap());
    }
    let html = render_interval_table(&history, TableFormat::Html).unwrap();
    assert!(html.contains("<td>19 %</td>") && html.contains("<td>70 %</td>"));
    assert_eq!(
        render_interval_table(&[], TableFormat::Csv)
            .unwrap()
            .lines()
            .count(),
        1
    );
}

#[test]
fn unknown_format_is_rejected() {
    assert!("xml".parse::<TableFormat>().is_err());
    assert_eq!("csv".parse::<TableFormat>().unwrap(), TableFormat::Csv);
}

proptest! {
    #[test]
    fn calculator_strings_follow_the_numbers(
        a in 0.01f64..120.0, b in 0.01f64..120.0, lmin in 0.0f64..0.5, swap in any::<bool>(),
    ) {
        let pref = if swap { [3, 7] } else { [7, 3] };
        let input = QualityInput::new(
            [Some(a), Some(b)],
            [Preference::new(pref[0]).unwrap(), Preference::new(pref[1]).unwrap()],
            lmin,
        )
        .unwrap();
        let result = compute_rejection(&input).unwrap();
        let sheet = render_calc_breakdown(&result, &input);
        let (_, rank, load, reject) = rejection_oracle([a, b], pref, lmin);
        prop_assert_eq!(sheet.rows.len(), 6);
        for i in 0..2 {
            let parse = |label: &str| -> f64 {
                sheet.value(label).unwrap()[i].trim_end_matches('%').parse().unwrap()
            };
            prop_assert!((parse("Rank") - rank[i] * 100.0).abs() <= 0.05 + 1e-9);
            prop_assert!((parse("Desired load") - load[i] * 100.0).abs() <= 0.05 + 1e-9);
            prop_assert!((parse("Rejection") - reject[i]).abs() <= 0.05 + 1e-9);
            prop_assert_eq!(&sheet.value("Priority").unwrap()[i], &format!("Preference {}", pref[i]));
        }
        prop_assert_eq!(sheet.to_text(), render_calc_breakdown(&result, &input).to_text());
    }
}

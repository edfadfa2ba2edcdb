//! Test-only oracles, independent of the library's evaluation paths.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};

use acd_routing::aggregate::{Aggregator, IntervalPolicy};
use acd_routing::domain::{
    CallRecord, DisconnectCause, Preference, RoutingGroup, Timestamp, VendorId,
};
use acd_routing::store::{IntervalCounters, MemoryStore, Store};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straight-line transcription of the rejection pseudocode in exact rational
/// arithmetic. Returns (max index, rank, load, reject %) as f64.
pub fn rejection_oracle(
    acd: [f64; 2],
    pref: [u8; 2],
    load_min: f64,
) -> (usize, [f64; 2], [f64; 2], [f64; 2]) {
    let q = |x: f64| BigRational::from_float(x).expect("finite");
    let acd = [q(acd[0]), q(acd[1])];
    let load_min = q(load_min);
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let hundred = BigRational::from_integer(BigInt::from(100));

    // MaxACD
    let max = if acd[0] < acd[1] { 1 } else { 0 };
    let min = 1 - max;

    let mut rank = [BigRational::zero(), BigRational::zero()];
    rank[max] = BigRational::one();
    rank[min] = if acd[max].is_zero() {
        BigRational::one()
    } else {
        &acd[min] / &acd[max]
    };
    let mut load = [BigRational::zero(), BigRational::zero()];
    load[min] = &load_min + (&half - &load_min) * &rank[min];
    load[max] = BigRational::one() - &load[min];

    let mut reject = [BigRational::zero(), BigRational::zero()];
    if pref[max] > pref[min] {
        reject[max] = &load[min] * &hundred;
    } else {
        reject[min] = &load[max] * &hundred;
    }
    let f = |r: &BigRational| r.to_f64().expect("representable");
    (
        max,
        [f(&rank[0]), f(&rank[1])],
        [f(&load[0]), f(&load[1])],
        [f(&reject[0]), f(&reject[1])],
    )
}

/// Reference rounding to two decimals, half up, via exact decimal arithmetic.
pub fn round2_oracle(x: f64) -> f64 {
    let r = BigRational::from_float(x).unwrap() * BigRational::from_u32(100).unwrap();
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let floored = (r + half).floor();
    floored.to_integer().to_f64().unwrap() / 100.0
}

pub fn ts(s: &str) -> Timestamp {
    Timestamp::parse(s).unwrap()
}

/// A CDR ending at `end` that lasted `secs`.
pub fn cdr_ending(id: &str, vendor: u32, end: Timestamp, secs: u32) -> CallRecord {
    CallRecord::new(
        id,
        VendorId(vendor),
        end.plus_seconds(-i64::from(secs)),
        end,
        if secs > 0 {
            DisconnectCause::NormalClearing
        } else {
            DisconnectCause::NoUserResponding
        },
        false,
    )
    .unwrap()
}

/// CDRs for one vendor reproducing given bucket counts and a total of
/// `total_s` seconds. Fills bucket minima first and puts the remainder on the
/// last long call.
pub fn cdrs_with_buckets(
    vendor: u32,
    end: Timestamp,
    buckets: (u32, u32, u32, u32),
    total_s: u32,
) -> Vec<CallRecord> {
    let (z, b5, b30, over) = buckets;
    let mut durations = vec![0; z as usize];
    durations.extend(std::iter::repeat_n(3, b5 as usize));
    durations.extend(std::iter::repeat_n(20, b30 as usize));
    durations.extend(std::iter::repeat_n(31, over as usize));
    let used: u32 = durations.iter().sum();
    assert!(over > 0 && total_s >= used);
    *durations.last_mut().unwrap() += total_s - used;
    durations
        .iter()
        .enumerate()
        .map(|(i, d)| {
            cdr_ending(
                &format!("v{vendor}-{i}"),
                vendor,
                end.plus_seconds(-(i as i64)),
                *d,
            )
        })
        .collect()
}

/// One randomized run of the tick schedule over a random CDR stream.
/// Returns the (opened_at, closed_at, calls) of every closed interval and the
/// CDRs that ended inside the covered span.
pub fn random_interval_run(seed: u64) -> (Vec<(Timestamp, Timestamp, u64)>, Vec<CallRecord>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = ts("2009-11-30 20:00:00");
    let store = MemoryStore::new();
    let rate: f64 = rng.random_range(0.2..3.0);
    let horizon = 8 * 3600;
    let mut t = 0f64;
    let mut n = 0;
    loop {
        t += -(1.0 - rng.random::<f64>()).ln() * 60.0 / rate;
        if t >= horizon as f64 {
            break;
        }
        let d = if rng.random_bool(0.3) {
            0
        } else {
            rng.random_range(1..1800)
        };
        let vendor = if rng.random_bool(0.5) { 55 } else { 62 };
        let end = start.plus_seconds(t as i64 + i64::from(d));
        store
            .append_cdr(cdr_ending(&format!("r{n}"), vendor, end, d))
            .unwrap();
        n += 1;
    }
    let group = RoutingGroup::new(
        [VendorId(55), VendorId(62)],
        [Preference::new(9).unwrap(), Preference::new(8).unwrap()],
    )
    .unwrap();
    let counters = IntervalCounters::new();
    let mut agg = Aggregator::new(IntervalPolicy::default(), group, 0.1, "37410", start).unwrap();
    let mut closed = Vec::new();
    let mut now = start.plus_seconds(600);
    while now.0 <= start.0 + horizon + 3600 {
        if let Some(c) = agg.on_tick(now, &store, &counters).unwrap() {
            closed.push((
                c.opened_at,
                c.closed_at,
                c.stats[0].calls + c.stats[1].calls,
            ));
        }
        now = now.plus_seconds(600);
    }
    (closed, store.cdr_log().unwrap())
}

/// Checks one randomized run: minimum age and call count, ages on tick
/// multiples, and closed intervals that partition the covered span.
pub fn check_interval_run(seed: u64) -> Result<usize, String> {
    let (closed, cdrs) = random_interval_run(seed);
    for w in closed.windows(2) {
        if w[0].1 != w[1].0 {
            return Err(format!("seed {seed}: gap between intervals"));
        }
    }
    for (open, close, calls) in &closed {
        let age = close.0 - open.0;
        if age < 1200 || age % 600 != 0 {
            return Err(format!("seed {seed}: age {age}"));
        }
        if *calls < 20 {
            return Err(format!("seed {seed}: {calls} calls"));
        }
    }
    if let (Some(first), Some(last)) = (closed.first(), closed.last()) {
        let covered = cdrs
            .iter()
            .filter(|r| first.0 <= r.disconnect_time && r.disconnect_time < last.1)
            .count() as u64;
        if covered != closed.iter().map(|c| c.2).sum::<u64>() {
            return Err(format!("seed {seed}: records lost or double counted"));
        }
    }
    Ok(closed.len())
}

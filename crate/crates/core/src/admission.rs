//! Per-call decision at the clone interfaces.
//!
//! Billing sends every call to the clone of its preferred vendor. The clone
//! rejects it with probability `reject_pct / 100`; the rejection is a
//! failover-class response, so billing retries on the other vendor's clone.
//! A call is rejected at most once: any further attempt carrying the same
//! call id is accepted.

use std::collections::{HashMap, VecDeque};
use std::sync::{Mutex, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{classify_response, RoutingGroup, Timestamp, VendorId};
use crate::error::Result;
use crate::rejection::RejectionResult;
use crate::store::IntervalCounters;

/// 503 Service Unavailable: a 5xx, so billing moves on to the next route.
pub const REJECT_CODE: u16 = 503;

pub const DEFAULT_REJECTION_TTL_S: i64 = 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Accept,
    Reject(u16),
}

impl Decision {
    pub fn is_reject(self) -> bool {
        matches!(self, Decision::Reject(_))
    }
}

#[derive(Debug, Default)]
struct SeenRejections {
    expiry: HashMap<String, Timestamp>,
    order: VecDeque<(Timestamp, String)>,
}

impl SeenRejections {
    fn evict(&mut self, now: Timestamp) {
        while let Some((exp, _)) = self.order.front() {
            if *exp > now {
                break;
            }
            let (exp, id) = self.order.pop_front().expect("front exists");
            if self.expiry.get(&id) == Some(&exp) {
                self.expiry.remove(&id);
            }
        }
    }

    fn contains(&self, id: &str, now: Timestamp) -> bool {
        self.expiry.get(id).is_some_and(|exp| *exp > now)
    }

    fn insert(&mut self, id: &str, expires: Timestamp) {
        self.expiry.insert(id.to_string(), expires);
        self.order.push_back((expires, id.to_string()));
    }
}

/// Shared admission state for one routing group.
///
/// `decide` may be called from many threads. Target swaps are atomic with
/// respect to decisions: a decision reads both percentages under one lock.
#[derive(Debug)]
pub struct AdmissionState {
    group: RoutingGroup,
    targets: RwLock<Option<[f64; 2]>>,
    seen: Mutex<SeenRejections>,
    rng: Mutex<ChaCha8Rng>,
    ttl_s: i64,
}

impl AdmissionState {
    pub fn new(group: RoutingGroup, seed: u64) -> Self {
        Self::with_ttl(group, seed, DEFAULT_REJECTION_TTL_S)
    }

    pub fn with_ttl(group: RoutingGroup, seed: u64, ttl_s: i64) -> Self {
        AdmissionState {
            group,
            targets: RwLock::new(None),
            seen: Mutex::new(SeenRejections::default()),
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            ttl_s,
        }
    }

    pub fn group(&self) -> &RoutingGroup {
        &self.group
    }

    /// Current unrounded reject percentages; `None` before the first closed
    /// interval.
    pub fn targets(&self) -> Option<[f64; 2]> {
        *self.targets.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn set_targets(&self, reject_pct: [f64; 2]) {
        *self.targets.write().unwrap_or_else(|e| e.into_inner()) = Some(reject_pct);
    }

    pub fn refresh_targets(&self, result: &RejectionResult) {
        self.set_targets(result.reject_pct);
    }

    /// Number of call ids currently remembered as rejected.
    pub fn remembered_rejections(&self) -> usize {
        self.seen
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .expiry
            .len()
    }

    pub fn decide(&self, call_id: &str, vendor: VendorId, now: Timestamp) -> Result<Decision> {
        let idx = self.group.index_of(vendor)?;
        let target = self.targets().map_or(0.0, |t| t[idx]);

        // The membership test, the draw and the insert happen under one lock
        // so two concurrent attempts of a call cannot both be rejected.
        let mut seen = self.seen.lock().unwrap_or_else(|e| e.into_inner());
        seen.evict(now);
        if seen.contains(call_id, now) {
            return Ok(Decision::Accept);
        }
        let u: f64 = self.rng.lock().unwrap_or_else(|e| e.into_inner()).random();
        if u < target / 100.0 {
            seen.insert(call_id, now.plus_seconds(self.ttl_s));
            debug_assert!(classify_response(REJECT_CODE).is_ok_and(|c| c.triggers_failover()));
            Ok(Decision::Reject(REJECT_CODE))
        } else {
            Ok(Decision::Accept)
        }
    }
}

/// Counts one decision. "Received" counts every call that reached the
/// clone, rejected ones included; "rejected" counts rejections only.
pub fn record_decision(
    counters: &IntervalCounters,
    group: &RoutingGroup,
    vendor: VendorId,
    decision: Decision,
) -> Result<()> {
    let idx = group.index_of(vendor)?;
    counters.add(idx, 1, u64::from(decision.is_reject()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Preference;
    use crate::error::Error;

    fn group() -> RoutingGroup {
        RoutingGroup::new(
            [VendorId(55), VendorId(62)],
            [Preference::new(9).unwrap(), Preference::new(8).unwrap()],
        )
        .unwrap()
    }

    const T: Timestamp = Timestamp(1_000_000);

    #[test]
    fn cold_start_accepts() {
        let a = AdmissionState::new(group(), 7);
        for i in 0..1000 {
            assert_eq!(
                a.decide(&format!("c{i}"), VendorId(55), T).unwrap(),
                Decision::Accept
            );
        }
    }

    #[test]
    fn zero_target_vendor_always_accepts() {
        let a = AdmissionState::new(group(), 7);
        a.set_targets([12.77, 0.0]);
        for i in 0..1000 {
            assert_eq!(
                a.decide(&format!("c{i}"), VendorId(62), T).unwrap(),
                Decision::Accept
            );
        }
    }

    #[test]
    fn second_attempt_always_passes() {
        let a = AdmissionState::new(group(), 7);
        a.set_targets([100.0, 100.0]);
        assert_eq!(
            a.decide("x", VendorId(55), T).unwrap(),
            Decision::Reject(503)
        );
        assert_eq!(a.decide("x", VendorId(62), T).unwrap(), Decision::Accept);
        assert_eq!(a.decide("x", VendorId(55), T).unwrap(), Decision::Accept);
    }

    #[test]
    fn remembered_rejections_expire() {
        let a = AdmissionState::with_ttl(group(), 7, 60);
        a.set_targets([100.0, 0.0]);
        assert!(a.decide("x", VendorId(55), T).unwrap().is_reject());
        assert_eq!(a.remembered_rejections(), 1);
        assert!(a
            .decide("y", VendorId(55), T.plus_seconds(61))
            .unwrap()
            .is_reject());
        assert_eq!(a.remembered_rejections(), 1);
        assert!(a
            .decide("x", VendorId(55), T.plus_seconds(62))
            .unwrap()
            .is_reject());
    }

    #[test]
    fn unknown_vendor() {
        let a = AdmissionState::new(group(), 7);
        assert!(matches!(
            a.decide("x", VendorId(1), T),
            Err(Error::UnknownVendor(VendorId(1)))
        ));
    }

    #[test]
    fn refresh_swaps_targets() {
        let a = AdmissionState::new(group(), 7);
        a.refresh_targets(&RejectionResult {
            balance: None,
            reject_pct: [12.77, 0.0],
        });
        assert_eq!(a.targets(), Some([12.77, 0.0]));
        a.set_targets([81.4, 0.0]);
        assert_eq!(a.targets(), Some([81.4, 0.0]));
    }

    #[test]
    fn counters_follow_decisions() {
        let c = IntervalCounters::new();
        let g = group();
        for _ in 0..5 {
            record_decision(&c, &g, VendorId(55), Decision::Accept).unwrap();
        }
        for _ in 0..2 {
            record_decision(&c, &g, VendorId(55), Decision::Reject(503)).unwrap();
        }
        let s = c.snapshot();
        assert_eq!(s.received, [7, 0]);
        assert_eq!(s.rejected, [2, 0]);
        assert!(record_decision(&c, &g, VendorId(9), Decision::Accept).is_err());
    }

    #[test]
    fn same_seed_same_decisions() {
        let run = |seed| {
            let a = AdmissionState::new(group(), seed);
            a.set_targets([40.0, 0.0]);
            (0..500)
                .map(|i| a.decide(&format!("c{i}"), VendorId(55), T).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }
}

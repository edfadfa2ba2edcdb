//! Dynamic measurement intervals and per-vendor call statistics.
//!
//! A scheduler calls [`Aggregator::on_tick`] every tick period (10 minutes by
//! default). The open interval closes only once it is at least
//! `min_age_s` old *and* at least `min_calls` calls have ended inside it;
//! otherwise it stays open until a later tick. Closing computes ACDs,
//! derives new rejection targets and appends one `acd_vendors` row per
//! vendor.

use serde::{Deserialize, Serialize};

use crate::domain::{CallRecord, RoutingGroup, Timestamp, VendorId};
use crate::error::{Error, Result};
use crate::rejection::{compute_rejection, QualityInput, RejectionResult};
use crate::store::{CounterSnapshot, IntervalCounters, NewAcdRow, Store, TimeRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalPolicy {
    pub tick_period_s: i64,
    pub min_age_s: i64,
    pub min_calls: u64,
}

impl Default for IntervalPolicy {
    fn default() -> Self {
        IntervalPolicy {
            tick_period_s: 600,
            min_age_s: 1200,
            min_calls: 20,
        }
    }
}

impl IntervalPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.tick_period_s <= 0 || self.min_age_s < 0 {
            return Err(Error::validation(format!(
                "tick period {} s / minimum age {} s must be positive",
                self.tick_period_s, self.min_age_s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalStatus {
    Open,
    Closed(Timestamp),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalState {
    pub opened_at: Timestamp,
    pub status: IntervalStatus,
    pub received_count: [u64; 2],
    pub rejected_count: [u64; 2],
}

impl IntervalState {
    pub fn open(at: Timestamp) -> Self {
        IntervalState {
            opened_at: at,
            status: IntervalStatus::Open,
            received_count: [0; 2],
            rejected_count: [0; 2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickOutcome {
    KeepOpen,
    Close,
}

pub fn tick(
    policy: &IntervalPolicy,
    now: Timestamp,
    state: &IntervalState,
    calls_ended_in_interval: u64,
) -> Result<TickOutcome> {
    if now < state.opened_at {
        return Err(Error::Clock {
            now,
            opened_at: state.opened_at,
        });
    }
    let old_enough = now.0 - state.opened_at.0 >= policy.min_age_s;
    if old_enough && calls_ended_in_interval >= policy.min_calls {
        Ok(TickOutcome::Close)
    } else {
        Ok(TickOutcome::KeepOpen)
    }
}

/// Call statistics of one vendor over one interval. Bucket bounds are in
/// seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VendorIntervalStats {
    pub vendor: VendorId,
    pub bucket_zero: u64,
    pub bucket_0_5: u64,
    pub bucket_5_30: u64,
    pub bucket_over_30: u64,
    pub calls: u64,
    pub total_minutes: f64,
    /// Minutes per answered (nonzero-duration) call.
    pub acd_min: Option<f64>,
}

impl VendorIntervalStats {
    pub fn answered(&self) -> u64 {
        self.calls - self.bucket_zero
    }
}

/// Statistics of `vendor` over `cdrs`. Router-rejected attempts never reached
/// the vendor and are skipped.
pub fn vendor_stats(cdrs: &[CallRecord], vendor: VendorId) -> VendorIntervalStats {
    let mut stats = VendorIntervalStats {
        vendor,
        bucket_zero: 0,
        bucket_0_5: 0,
        bucket_5_30: 0,
        bucket_over_30: 0,
        calls: 0,
        total_minutes: 0.0,
        acd_min: None,
    };
    let mut total_s: u64 = 0;
    for r in cdrs
        .iter()
        .filter(|r| r.vendor == vendor && !r.rejected_by_router)
    {
        match r.duration_s {
            0 => stats.bucket_zero += 1,
            1..=5 => stats.bucket_0_5 += 1,
            6..=30 => stats.bucket_5_30 += 1,
            _ => stats.bucket_over_30 += 1,
        }
        stats.calls += 1;
        total_s += u64::from(r.duration_s);
    }
    stats.total_minutes = total_s as f64 / 60.0;
    let answered = stats.answered();
    if answered > 0 {
        stats.acd_min = Some(stats.total_minutes / answered as f64);
    }
    stats
}

/// Outcome of closing one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedInterval {
    pub opened_at: Timestamp,
    pub closed_at: Timestamp,
    pub stats: [VendorIntervalStats; 2],
    pub result: RejectionResult,
    pub row_ids: [u64; 2],
}

pub fn close_interval(
    state: &IntervalState,
    closed_at: Timestamp,
    cdrs: &[CallRecord],
    group: &RoutingGroup,
    load_min: f64,
    prefix: &str,
    store: &dyn Store,
) -> Result<(ClosedInterval, IntervalState)> {
    let stats = group.vendors.map(|v| vendor_stats(cdrs, v));
    let input = QualityInput::new([stats[0].acd_min, stats[1].acd_min], group.prefs, load_min)?;
    let result = compute_rejection(&input)?;
    let reject = result.reject_pct;
    let rows = [0, 1].map(|i| NewAcdRow {
        vendor: group.vendors[i],
        date: closed_at,
        acd_min: stats[i].acd_min,
        reject_pct: reject[i],
        prefix: prefix.to_string(),
    });
    let row_ids = store.insert_acd_rows(rows)?;
    let closed = ClosedInterval {
        opened_at: state.opened_at,
        closed_at,
        stats,
        result,
        row_ids,
    };
    Ok((closed, IntervalState::open(closed_at)))
}

/// One line of the monitoring history: the statistics and targets produced
/// at `closed_at`, plus the traffic the admission layer saw while those
/// targets were in force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub opened_at: Timestamp,
    pub closed_at: Timestamp,
    pub prefs: [u8; 2],
    pub stats: [VendorIntervalStats; 2],
    pub result: RejectionResult,
    pub counters: CounterSnapshot,
}

/// Owns the open interval and the closed-interval history of one routing
/// group. Single writer: ticks and closes are serialized by `&mut self`.
#[derive(Debug)]
pub struct Aggregator {
    policy: IntervalPolicy,
    group: RoutingGroup,
    load_min: f64,
    prefix: String,
    state: IntervalState,
    history: Vec<IntervalRecord>,
}

impl Aggregator {
    pub fn new(
        policy: IntervalPolicy,
        group: RoutingGroup,
        load_min: f64,
        prefix: impl Into<String>,
        start: Timestamp,
    ) -> Result<Self> {
        policy.validate()?;
        crate::rejection::validate_load_min(load_min)?;
        Ok(Aggregator {
            policy,
            group,
            load_min,
            prefix: prefix.into(),
            state: IntervalState::open(start),
            history: Vec::new(),
        })
    }

    pub fn state(&self) -> &IntervalState {
        &self.state
    }

    pub fn policy(&self) -> &IntervalPolicy {
        &self.policy
    }

    pub fn history(&self) -> &[IntervalRecord] {
        &self.history
    }

    /// Runs one scheduled tick. On close, the live counters are attributed
    /// to the previous history line and reset.
    pub fn on_tick(
        &mut self,
        now: Timestamp,
        store: &dyn Store,
        counters: &IntervalCounters,
    ) -> Result<Option<ClosedInterval>> {
        if now < self.state.opened_at {
            return Err(Error::Clock {
                now,
                opened_at: self.state.opened_at,
            });
        }
        let snapshot = counters.snapshot();
        self.state.received_count = snapshot.received;
        self.state.rejected_count = snapshot.rejected;

        let range = TimeRange::new(self.state.opened_at, now)?;
        let cdrs: Vec<CallRecord> = store
            .query_cdrs(None, range)?
            .into_iter()
            .filter(|r| !r.rejected_by_router && self.group.vendors.contains(&r.vendor))
            .collect();
        if tick(&self.policy, now, &self.state, cdrs.len() as u64)? == TickOutcome::KeepOpen {
            return Ok(None);
        }

        let (closed, next) = close_interval(
            &self.state,
            now,
            &cdrs,
            &self.group,
            self.load_min,
            &self.prefix,
            store,
        )?;
        let taken = counters.take();
        if let Some(last) = self.history.last_mut() {
            last.counters = taken;
        }
        self.history.push(IntervalRecord {
            opened_at: closed.opened_at,
            closed_at: closed.closed_at,
            prefs: self.group.prefs.map(|p| p.get()),
            stats: closed.stats.clone(),
            result: closed.result,
            counters: CounterSnapshot::default(),
        });
        self.state = next;
        Ok(Some(closed))
    }

    /// Attributes the still-open interval's counters to the newest history
    /// line, as the live "current interval" view.
    pub fn finish(mut self, counters: &IntervalCounters) -> Vec<IntervalRecord> {
        if let Some(last) = self.history.last_mut() {
            last.counters = counters.snapshot();
        }
        self.history
    }
}

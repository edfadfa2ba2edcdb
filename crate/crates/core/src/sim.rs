//! Deterministic discrete-event simulation of the whole routing loop.
//!
//! Callers arrive as a Poisson stream. Billing sends each call to the clone
//! of its preferred vendor and fails over to the other vendor on a
//! 4xx/5xx/6xx. The clone applies the admission decision, the vendor model
//! answers (or not), finished legs become CDRs, and the aggregator ticks on
//! a fixed period, feeding new targets back into admission.
//!
//! Vendors may also carry direct traffic that bypasses billing and the
//! clones (other customers on the same vendor connection). It shows up in
//! the vendor statistics only, which keeps a vendor measurable even when the
//! routed traffic never reaches it.
//!
//! Events are ordered by time, then by insertion sequence, so a run is a
//! pure function of its config.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::admission::{record_decision, AdmissionState, Decision, DEFAULT_REJECTION_TTL_S};
use crate::aggregate::{Aggregator, IntervalPolicy, IntervalRecord};
use crate::domain::{
    classify_response, CallRecord, DisconnectCause, Preference, ResponseClass, RoutingGroup,
    Timestamp, VendorId,
};
use crate::error::{Error, Result};
use crate::par;
use crate::rejection::DEFAULT_LOAD_MIN;
use crate::store::{AcdRow, IntervalCounters, MemoryStore, Store};

/// Intervals discarded before steady-state averages are taken.
pub const WARMUP_INTERVALS: usize = 3;

const STREAM_ARRIVALS: u64 = 1;
const STREAM_VENDORS: u64 = 2;
const STREAM_DIRECT: u64 = 3;

/// Seed of the admission PRNG derived from a scenario seed.
pub fn admission_seed(seed: u64) -> u64 {
    seed ^ 0x5eed_ad31_5510_0000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DurationDist {
    Exponential { mean_s: f64 },
    Uniform { min_s: u32, max_s: u32 },
    Fixed { s: u32 },
}

impl DurationDist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DurationDist::Exponential { mean_s } if !(mean_s.is_finite() && mean_s > 0.0) => Err(
                Error::validation(format!("exponential mean {mean_s} must be > 0")),
            ),
            DurationDist::Uniform { min_s, max_s } if min_s > max_s || min_s == 0 => {
                Err(Error::validation(format!(
                    "uniform range [{min_s}, {max_s}] must be within 1.."
                )))
            }
            DurationDist::Fixed { s: 0 } => Err(Error::validation("fixed duration must be > 0")),
            _ => Ok(()),
        }
    }

    /// Draws an answered-call duration in whole seconds, at least one.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match *self {
            DurationDist::Exponential { mean_s } => {
                let d = Exp::new(1.0 / mean_s).expect("validated mean").sample(rng);
                (d.round() as u32).max(1)
            }
            DurationDist::Uniform { min_s, max_s } => rng.random_range(min_s..=max_s),
            DurationDist::Fixed { s } => s,
        }
    }
}

fn default_failure_code() -> u16 {
    486
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VendorModel {
    /// Answers with probability `answer_prob`; otherwise returns
    /// `failure_code`, which sends billing to the next route.
    Honest {
        answer_prob: f64,
        answered_duration: DurationDist,
        #[serde(default = "default_failure_code")]
        failure_code: u16,
    },
    /// Signals answer immediately and bills a call nobody completes; the
    /// caller hangs up after `fas_hold_s`.
    FalseAnswerSupervision {
        #[serde(default = "one")]
        answer_prob: f64,
        fas_hold_s: DurationDist,
    },
}

impl VendorModel {
    pub fn validate(&self) -> Result<()> {
        let (p, dist) = match self {
            VendorModel::Honest {
                answer_prob,
                answered_duration,
                failure_code,
            } => {
                if !classify_response(*failure_code)?.triggers_failover() {
                    return Err(Error::validation(format!(
                        "failure code {failure_code} does not trigger failover"
                    )));
                }
                (*answer_prob, answered_duration)
            }
            VendorModel::FalseAnswerSupervision {
                answer_prob,
                fas_hold_s,
            } => (*answer_prob, fas_hold_s),
        };
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::validation(format!("answer_prob {p} outside [0, 1]")));
        }
        dist.validate()
    }
}

/// What one vendor leg returned to billing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegOutcome {
    pub code: u16,
    pub duration_s: u32,
}

impl LegOutcome {
    pub fn class(&self) -> ResponseClass {
        classify_response(self.code).expect("leg codes are valid")
    }
}

/// Code an unanswered FAS leg returns when `answer_prob` < 1.
const FAS_UNANSWERED_CODE: u16 = 480;

pub fn vendor_leg<R: Rng + ?Sized>(model: &VendorModel, rng: &mut R) -> LegOutcome {
    match model {
        VendorModel::Honest {
            answer_prob,
            answered_duration,
            failure_code,
        } => {
            if rng.random::<f64>() < *answer_prob {
                LegOutcome {
                    code: 200,
                    duration_s: answered_duration.sample(rng),
                }
            } else {
                LegOutcome {
                    code: *failure_code,
                    duration_s: 0,
                }
            }
        }
        VendorModel::FalseAnswerSupervision {
            answer_prob,
            fas_hold_s,
        } => {
            if *answer_prob >= 1.0 || rng.random::<f64>() < *answer_prob {
                LegOutcome {
                    code: 200,
                    duration_s: fas_hold_s.sample(rng),
                }
            } else {
                LegOutcome {
                    code: FAS_UNANSWERED_CODE,
                    duration_s: 0,
                }
            }
        }
    }
}

/// One attempt already made for a call: which vendor, and the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attempt {
    pub vendor_idx: usize,
    pub code: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Try(usize),
    /// The call was answered (or otherwise finished); no more routing.
    Completed,
    /// Every vendor returned a failure.
    Abandoned,
}

/// Static-preference billing router with signaling failover.
pub fn billing_route(group: &RoutingGroup, history: &[Attempt]) -> Route {
    let Some(last) = history.last() else {
        return Route::Try(group.preferred());
    };
    let class = classify_response(last.code).unwrap_or(ResponseClass::ServerError5xx);
    if !class.triggers_failover() {
        return Route::Completed;
    }
    let preferred = group.preferred();
    [preferred, 1 - preferred]
        .into_iter()
        .find(|idx| history.iter().all(|a| a.vendor_idx != *idx))
        .map_or(Route::Abandoned, Route::Try)
}

fn default_tick_min() -> i64 {
    10
}
fn default_min_interval_min() -> i64 {
    20
}
fn default_min_interval_calls() -> u64 {
    20
}
fn default_true() -> bool {
    true
}
fn default_load_min() -> f64 {
    DEFAULT_LOAD_MIN
}
fn default_ttl() -> i64 {
    DEFAULT_REJECTION_TTL_S
}
fn default_prefix() -> String {
    "37410".into()
}
fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VendorSpec {
    pub id: VendorId,
    pub pref: Preference,
    pub model: VendorModel,
    /// Calls per minute reaching this vendor without passing billing or the
    /// clone interface.
    #[serde(default)]
    pub direct_rate_per_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub seed: u64,
    pub start: Timestamp,
    pub duration_min: f64,
    pub arrival_rate_per_min: f64,
    pub vendors: [VendorSpec; 2],
    #[serde(default = "default_load_min")]
    pub load_min: f64,
    #[serde(default = "default_tick_min")]
    pub tick_period_min: i64,
    #[serde(default = "default_min_interval_min")]
    pub min_interval_min: i64,
    #[serde(default = "default_min_interval_calls")]
    pub min_interval_calls: u64,
    #[serde(default = "default_true")]
    pub admission_enabled: bool,
    #[serde(default = "default_ttl")]
    pub rejection_ttl_s: i64,
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ScenarioConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// One of the scenarios shipped with the crate.
    pub fn bundled(name: &str) -> Result<Self> {
        let text = match name {
            "honest_vs_fas" => include_str!("../scenarios/honest_vs_fas.toml"),
            "identical_honest" => include_str!("../scenarios/identical_honest.toml"),
            _ => {
                return Err(Error::validation(format!(
                    "unknown bundled scenario {name:?} (have: {})",
                    Self::BUNDLED.join(", ")
                )))
            }
        };
        Self::from_toml(text)
    }

    pub const BUNDLED: [&'static str; 2] = ["honest_vs_fas", "identical_honest"];

    pub fn group(&self) -> Result<RoutingGroup> {
        RoutingGroup::new(
            [self.vendors[0].id, self.vendors[1].id],
            [self.vendors[0].pref, self.vendors[1].pref],
        )
    }

    pub fn policy(&self) -> IntervalPolicy {
        IntervalPolicy {
            tick_period_s: self.tick_period_min * 60,
            min_age_s: self.min_interval_min * 60,
            min_calls: self.min_interval_calls,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.group()?;
        self.policy().validate()?;
        crate::rejection::validate_load_min(self.load_min)?;
        let rate_ok = |r: f64| r.is_finite() && r >= 0.0;
        if !rate_ok(self.arrival_rate_per_min) {
            return Err(Error::validation("arrival_rate_per_min must be >= 0"));
        }
        if !(self.duration_min.is_finite() && self.duration_min > 0.0) {
            return Err(Error::validation("duration_min must be > 0"));
        }
        if self.rejection_ttl_s <= 0 {
            return Err(Error::validation("rejection_ttl_s must be > 0"));
        }
        for v in &self.vendors {
            v.model.validate()?;
            if !rate_ok(v.direct_rate_per_min) {
                return Err(Error::validation("direct_rate_per_min must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn end(&self) -> Timestamp {
        self.start
            .plus_seconds((self.duration_min * 60.0).round() as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionEntry {
    pub time: Timestamp,
    pub call_id: String,
    pub vendor: VendorId,
    pub decision: Decision,
}

/// A target refresh, placed in the decision log by the number of decisions
/// taken before it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetChange {
    pub at: Timestamp,
    pub decisions_before: usize,
    pub reject_pct: [f64; 2],
}

/// Traffic split of one history line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficShare {
    pub closed_at: Timestamp,
    /// Share of answered minutes per vendor in the closed interval (all
    /// traffic, routed and direct); zeros when nothing was answered.
    pub minutes: [f64; 2],
    /// Routed calls answered per vendor while this line's targets were in
    /// force.
    pub routed_answered: [u64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub name: String,
    pub seed: u64,
    pub group: RoutingGroup,
    pub cdrs: Vec<CallRecord>,
    pub acd_rows: Vec<AcdRow>,
    pub interval_history: Vec<IntervalRecord>,
    pub decision_log: Vec<DecisionEntry>,
    pub target_log: Vec<TargetChange>,
    pub traffic_share: Vec<TrafficShare>,
    /// Routed calls answered before the first interval closed.
    pub cold_start_answered: [u64; 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum EventKind {
    Arrival,
    DirectArrival(usize),
    CallEnd(CallRecord),
    Tick,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Event {
    time: i64,
    seq: u64,
    kind: EventKind,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Default)]
struct Queue {
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
}

impl Queue {
    fn push(&mut self, time: i64, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Reverse(Event {
            time,
            seq: self.seq,
            kind,
        }));
    }

    fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e)
    }
}

/// Poisson arrival clock at sub-second precision, emitted at whole seconds.
struct ArrivalClock {
    next: f64,
    exp: Option<Exp<f64>>,
    rng: ChaCha8Rng,
}

impl ArrivalClock {
    fn new(start: i64, rate_per_min: f64, rng: ChaCha8Rng) -> Self {
        let exp = (rate_per_min > 0.0).then(|| Exp::new(rate_per_min / 60.0).expect("rate > 0"));
        let mut clock = ArrivalClock {
            next: start as f64,
            exp,
            rng,
        };
        clock.advance();
        clock
    }

    fn advance(&mut self) {
        self.next += match &self.exp {
            Some(exp) => exp.sample(&mut self.rng),
            None => f64::INFINITY,
        };
    }

    fn next_second(&self) -> Option<i64> {
        self.next.is_finite().then(|| self.next.floor() as i64)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn zero_duration_cdr(
    call_id: &str,
    vendor: VendorId,
    at: i64,
    cause: DisconnectCause,
    rejected: bool,
) -> CallRecord {
    CallRecord {
        call_id: call_id.to_string(),
        vendor,
        connect_time: Timestamp(at),
        disconnect_time: Timestamp(at),
        duration_s: 0,
        disconnect_cause: cause,
        rejected_by_router: rejected,
    }
}

fn answered_cdr(call_id: &str, vendor: VendorId, at: i64, duration_s: u32) -> CallRecord {
    CallRecord {
        call_id: call_id.to_string(),
        vendor,
        connect_time: Timestamp(at),
        disconnect_time: Timestamp(at + i64::from(duration_s)),
        duration_s,
        disconnect_cause: DisconnectCause::NormalClearing,
        rejected_by_router: false,
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.validate()?;
    let group = config.group()?;
    let policy = config.policy();
    let start = config.start.seconds();
    let end = config.end().seconds();
    let models = [config.vendors[0].model, config.vendors[1].model];

    let store = MemoryStore::new();
    let counters = IntervalCounters::new();
    let admission =
        AdmissionState::with_ttl(group, admission_seed(config.seed), config.rejection_ttl_s);
    let mut aggregator = Aggregator::new(
        policy,
        group,
        config.load_min,
        config.prefix.clone(),
        config.start,
    )?;

    let mut vendor_rng = stream_rng(config.seed, STREAM_VENDORS);
    let mut arrivals = ArrivalClock::new(
        start,
        config.arrival_rate_per_min,
        stream_rng(config.seed, STREAM_ARRIVALS),
    );
    let mut direct = [0, 1].map(|i| {
        ArrivalClock::new(
            start,
            config.vendors[i].direct_rate_per_min,
            stream_rng(config.seed, STREAM_DIRECT + i as u64),
        )
    });

    let mut queue = Queue::default();
    if let Some(t) = arrivals.next_second().filter(|t| *t < end) {
        queue.push(t, EventKind::Arrival);
    }
    for (i, clock) in direct.iter().enumerate() {
        if let Some(t) = clock.next_second().filter(|t| *t < end) {
            queue.push(t, EventKind::DirectArrival(i));
        }
    }
    if start + policy.tick_period_s <= end {
        queue.push(start + policy.tick_period_s, EventKind::Tick);
    }

    let mut decision_log = Vec::new();
    let mut target_log = Vec::new();
    let mut routed_answered = [0u64; 2];
    let mut routed_per_line: Vec<[u64; 2]> = Vec::new();
    let mut call_seq = 0u64;
    let mut direct_seq = 0u64;

    while let Some(event) = queue.pop() {
        let now = event.time;
        match event.kind {
            EventKind::Arrival => {
                call_seq += 1;
                let call_id = format!("c{call_seq:07}");
                let mut history: Vec<Attempt> = Vec::with_capacity(2);
                while let Route::Try(idx) = billing_route(&group, &history) {
                    let vendor = group.vendors[idx];
                    let decision = if config.admission_enabled {
                        admission.decide(&call_id, vendor, Timestamp(now))?
                    } else {
                        Decision::Accept
                    };
                    record_decision(&counters, &group, vendor, decision)?;
                    decision_log.push(DecisionEntry {
                        time: Timestamp(now),
                        call_id: call_id.clone(),
                        vendor,
                        decision,
                    });
                    if let Decision::Reject(code) = decision {
                        store.append_cdr(zero_duration_cdr(
                            &call_id,
                            vendor,
                            now,
                            DisconnectCause::Other,
                            true,
                        ))?;
                        history.push(Attempt {
                            vendor_idx: idx,
                            code,
                        });
                        continue;
                    }
                    let leg = vendor_leg(&models[idx], &mut vendor_rng);
                    history.push(Attempt {
                        vendor_idx: idx,
                        code: leg.code,
                    });
                    if leg.class() == ResponseClass::Success2xx {
                        routed_answered[idx] += 1;
                        queue.push(
                            now + i64::from(leg.duration_s),
                            EventKind::CallEnd(answered_cdr(&call_id, vendor, now, leg.duration_s)),
                        );
                    } else {
                        store.append_cdr(zero_duration_cdr(
                            &call_id,
                            vendor,
                            now,
                            DisconnectCause::NoUserResponding,
                            false,
                        ))?;
                    }
                }
                arrivals.advance();
                if let Some(t) = arrivals.next_second().filter(|t| *t < end) {
                    queue.push(t, EventKind::Arrival);
                }
            }
            EventKind::DirectArrival(idx) => {
                direct_seq += 1;
                let call_id = format!("d{direct_seq:07}");
                let vendor = group.vendors[idx];
                let leg = vendor_leg(&models[idx], &mut vendor_rng);
                if leg.class() == ResponseClass::Success2xx {
                    queue.push(
                        now + i64::from(leg.duration_s),
                        EventKind::CallEnd(answered_cdr(&call_id, vendor, now, leg.duration_s)),
                    );
                } else {
                    store.append_cdr(zero_duration_cdr(
                        &call_id,
                        vendor,
                        now,
                        DisconnectCause::NoUserResponding,
                        false,
                    ))?;
                }
                direct[idx].advance();
                if let Some(t) = direct[idx].next_second().filter(|t| *t < end) {
                    queue.push(t, EventKind::DirectArrival(idx));
                }
            }
            EventKind::CallEnd(record) => {
                store.append_cdr(record)?;
            }
            EventKind::Tick => {
                if let Some(closed) = aggregator.on_tick(Timestamp(now), &store, &counters)? {
                    if config.admission_enabled {
                        admission.refresh_targets(&closed.result);
                    }
                    target_log.push(TargetChange {
                        at: closed.closed_at,
                        decisions_before: decision_log.len(),
                        reject_pct: closed.result.reject_pct,
                    });
                    routed_per_line.push(std::mem::take(&mut routed_answered));
                }
                if now + policy.tick_period_s <= end {
                    queue.push(now + policy.tick_period_s, EventKind::Tick);
                }
            }
        }
    }
    routed_per_line.push(routed_answered);

    let history = aggregator.finish(&counters);
    // routed_per_line[0] is the cold start; line k's traffic is at k + 1.
    let cold_start_answered = routed_per_line[0];
    let traffic_share = history
        .iter()
        .zip(routed_per_line.iter().skip(1))
        .map(|(rec, routed)| {
            let minutes = [rec.stats[0].total_minutes, rec.stats[1].total_minutes];
            let total = minutes[0] + minutes[1];
            TrafficShare {
                closed_at: rec.closed_at,
                minutes: if total > 0.0 {
                    minutes.map(|m| m / total)
                } else {
                    [0.0; 2]
                },
                routed_answered: *routed,
            }
        })
        .collect();

    Ok(ScenarioResult {
        name: config.name.clone(),
        seed: config.seed,
        group,
        cdrs: store.cdr_log()?,
        acd_rows: store.acd_rows()?,
        interval_history: history,
        decision_log,
        target_log,
        traffic_share,
        cold_start_answered,
    })
}

/// Re-runs the admission decisions of a finished scenario through fresh
/// state seeded identically, applying target changes at the same points.
pub fn replay_decisions(
    group: RoutingGroup,
    seed: u64,
    ttl_s: i64,
    decision_log: &[DecisionEntry],
    target_log: &[TargetChange],
) -> Result<Vec<Decision>> {
    let admission = AdmissionState::with_ttl(group, admission_seed(seed), ttl_s);
    let mut changes = target_log.iter().peekable();
    let mut out = Vec::with_capacity(decision_log.len());
    for (i, entry) in decision_log.iter().enumerate() {
        while let Some(change) = changes.next_if(|c| c.decisions_before <= i) {
            admission.set_targets(change.reject_pct);
        }
        out.push(admission.decide(&entry.call_id, entry.vendor, entry.time)?);
    }
    Ok(out)
}

/// Aggregate view of a run, used for sweeps and the JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub seed: u64,
    pub vendors: [VendorId; 2],
    pub routed_calls: u64,
    pub cdrs: usize,
    pub closed_intervals: usize,
    pub final_reject_pct: Option<[f64; 2]>,
    /// Mean target after the warm-up intervals.
    pub steady_reject_pct: Option<[f64; 2]>,
    pub steady_minutes_share: Option<[f64; 2]>,
    pub steady_routed_share: Option<[f64; 2]>,
    pub total_answered_minutes: [f64; 2],
}

impl ScenarioResult {
    pub fn summary(&self) -> ScenarioSummary {
        let steady = self.interval_history.get(WARMUP_INTERVALS..).unwrap_or(&[]);
        let steady_reject_pct = (!steady.is_empty()).then(|| {
            let n = steady.len() as f64;
            [0, 1].map(|i| steady.iter().map(|r| r.result.reject_pct[i]).sum::<f64>() / n)
        });
        let share = |v: [f64; 2]| {
            let total = v[0] + v[1];
            (total > 0.0).then(|| v.map(|x| x / total))
        };
        let minutes = steady.iter().fold([0.0; 2], |acc, r| {
            [
                acc[0] + r.stats[0].total_minutes,
                acc[1] + r.stats[1].total_minutes,
            ]
        });
        let routed = self
            .traffic_share
            .get(WARMUP_INTERVALS..)
            .unwrap_or(&[])
            .iter()
            .fold([0.0; 2], |acc, t| {
                [
                    acc[0] + t.routed_answered[0] as f64,
                    acc[1] + t.routed_answered[1] as f64,
                ]
            });
        let mut total_answered_minutes = [0.0; 2];
        for r in &self.cdrs {
            if let Ok(i) = self.group.index_of(r.vendor) {
                total_answered_minutes[i] += f64::from(r.duration_s) / 60.0;
            }
        }
        let routed_calls = self
            .decision_log
            .iter()
            .map(|d| &d.call_id)
            .collect::<std::collections::BTreeSet<_>>()
            .len() as u64;
        ScenarioSummary {
            name: self.name.clone(),
            seed: self.seed,
            vendors: self.group.vendors,
            routed_calls,
            cdrs: self.cdrs.len(),
            closed_intervals: self.interval_history.len(),
            final_reject_pct: self.interval_history.last().map(|r| r.result.reject_pct),
            steady_reject_pct,
            steady_minutes_share: share(minutes),
            steady_routed_share: share(routed),
            total_answered_minutes,
        }
    }
}

/// Runs the scenario once per seed, in parallel when the `parallel`
/// feature is on. Runs share nothing.
pub fn sweep(config: &ScenarioConfig, seeds: &[u64]) -> Result<Vec<ScenarioSummary>> {
    par::map(seeds, |&seed| run_one(config, seed))
        .into_iter()
        .collect()
}

pub fn sweep_sequential(config: &ScenarioConfig, seeds: &[u64]) -> Result<Vec<ScenarioSummary>> {
    par::map_sequential(seeds, |&seed| run_one(config, seed))
        .into_iter()
        .collect()
}

fn run_one(config: &ScenarioConfig, seed: u64) -> Result<ScenarioSummary> {
    let mut c = config.clone();
    c.seed = seed;
    Ok(run_scenario(&c)?.summary())
}

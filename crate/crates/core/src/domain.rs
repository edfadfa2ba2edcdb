//! Shared vocabulary: vendors, preferences, signaling response classes,
//! timestamps and call detail records.

use std::fmt;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Billing identifier of a termination vendor (e.g. 55, 62).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VendorId(pub u32);

impl fmt::Display for VendorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Static billing priority of a route, 1 (lowest) to 9 (highest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Preference(u8);

impl Preference {
    pub fn new(value: u8) -> Result<Self> {
        if (1..=9).contains(&value) {
            Ok(Preference(value))
        } else {
            Err(Error::validation(format!(
                "preference {value} outside 1..=9"
            )))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Preference {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        Preference::new(value)
    }
}

impl From<Preference> for u8 {
    fn from(p: Preference) -> u8 {
        p.0
    }
}

impl fmt::Display for Preference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The two vendors of one routing group with their billing preferences.
///
/// Every per-vendor array in this crate (`[T; 2]`) is indexed the same way as
/// `vendors`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingGroup {
    pub vendors: [VendorId; 2],
    pub prefs: [Preference; 2],
}

impl RoutingGroup {
    pub fn new(vendors: [VendorId; 2], prefs: [Preference; 2]) -> Result<Self> {
        if vendors[0] == vendors[1] {
            return Err(Error::validation(format!(
                "routing group needs two distinct vendors, got {} twice",
                vendors[0]
            )));
        }
        if prefs[0] == prefs[1] {
            return Err(Error::validation(format!(
                "vendors {} and {} share preference {}; preferences must differ",
                vendors[0], vendors[1], prefs[0]
            )));
        }
        Ok(RoutingGroup { vendors, prefs })
    }

    pub fn index_of(&self, vendor: VendorId) -> Result<usize> {
        self.vendors
            .iter()
            .position(|v| *v == vendor)
            .ok_or(Error::UnknownVendor(vendor))
    }

    /// Index of the vendor the billing router tries first.
    pub fn preferred(&self) -> usize {
        if self.prefs[0] > self.prefs[1] {
            0
        } else {
            1
        }
    }
}

/// Class of a SIP final or provisional response, from its hundreds digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResponseClass {
    Provisional1xx,
    Success2xx,
    Redirect3xx,
    ClientError4xx,
    ServerError5xx,
    GlobalFailure6xx,
}

impl ResponseClass {
    /// Whether the billing router moves on to the next route after this
    /// response. A 2xx is final: an answered call is never retried, however
    /// short it turns out to be.
    pub fn triggers_failover(self) -> bool {
        matches!(
            self,
            ResponseClass::ClientError4xx
                | ResponseClass::ServerError5xx
                | ResponseClass::GlobalFailure6xx
        )
    }
}

pub fn classify_response(code: u16) -> Result<ResponseClass> {
    Ok(match code {
        100..=199 => ResponseClass::Provisional1xx,
        200..=299 => ResponseClass::Success2xx,
        300..=399 => ResponseClass::Redirect3xx,
        400..=499 => ResponseClass::ClientError4xx,
        500..=599 => ResponseClass::ServerError5xx,
        600..=699 => ResponseClass::GlobalFailure6xx,
        _ => {
            return Err(Error::validation(format!(
                "response code {code} outside 100..=699"
            )))
        }
    })
}

pub fn triggers_failover(class: ResponseClass) -> bool {
    class.triggers_failover()
}

/// UTC wall-clock time at one-second resolution, as seconds since the Unix
/// epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Timestamp(pub i64);

impl TryFrom<String> for Timestamp {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Timestamp::parse(&s)
    }
}

impl From<Timestamp> for String {
    fn from(t: Timestamp) -> String {
        t.to_string()
    }
}

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

impl Timestamp {
    pub fn parse(s: &str) -> Result<Self> {
        NaiveDateTime::parse_from_str(s.trim(), TIMESTAMP_FORMAT)
            .map(|dt| Timestamp(dt.and_utc().timestamp()))
            .map_err(|e| Error::validation(format!("bad timestamp {s:?}: {e}")))
    }

    pub fn seconds(self) -> i64 {
        self.0
    }

    pub fn plus_seconds(self, s: i64) -> Self {
        Timestamp(self.0 + s)
    }

    /// `YYYY-MM-DD HH:MM` as shown in the interval table.
    pub fn format_minutes(self) -> String {
        self.format_with("%Y-%m-%d %H:%M")
    }

    fn format_with(self, fmt: &str) -> String {
        DateTime::from_timestamp(self.0, 0)
            .map(|dt| dt.format(fmt).to_string())
            .unwrap_or_else(|| format!("@{}", self.0))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format_with(TIMESTAMP_FORMAT))
    }
}

/// Reason a call leg ended, as carried on the CDR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DisconnectCause {
    NormalClearing,
    NoUserResponding,
    Other,
}

impl DisconnectCause {
    pub fn as_str(self) -> &'static str {
        match self {
            DisconnectCause::NormalClearing => "normal",
            DisconnectCause::NoUserResponding => "no_answer",
            DisconnectCause::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(DisconnectCause::NormalClearing),
            "no_answer" => Ok(DisconnectCause::NoUserResponding),
            "other" => Ok(DisconnectCause::Other),
            _ => Err(Error::validation(format!("unknown disconnect cause {s:?}"))),
        }
    }
}

/// One call attempt as recorded by billing.
///
/// A call that fails over produces several records sharing a `call_id`: the
/// router-rejected attempt (flagged, zero duration) and the attempt that
/// actually reached a vendor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub call_id: String,
    pub vendor: VendorId,
    pub connect_time: Timestamp,
    pub disconnect_time: Timestamp,
    pub duration_s: u32,
    pub disconnect_cause: DisconnectCause,
    pub rejected_by_router: bool,
}

impl CallRecord {
    /// Builds a record and derives `duration_s` from the two timestamps.
    pub fn new(
        call_id: impl Into<String>,
        vendor: VendorId,
        connect_time: Timestamp,
        disconnect_time: Timestamp,
        disconnect_cause: DisconnectCause,
        rejected_by_router: bool,
    ) -> Result<Self> {
        let record = CallRecord {
            call_id: call_id.into(),
            vendor,
            connect_time,
            disconnect_time,
            duration_s: u32::try_from(disconnect_time.0 - connect_time.0).map_err(|_| {
                Error::validation(format!(
                    "disconnect {disconnect_time} precedes connect {connect_time}"
                ))
            })?,
            disconnect_cause,
            rejected_by_router,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<()> {
        if self.call_id.is_empty() {
            return Err(Error::validation("empty call_id"));
        }
        if self.call_id.contains([',', '"', '\n', '\r']) {
            return Err(Error::validation(format!(
                "call_id {:?} contains a reserved character",
                self.call_id
            )));
        }
        if self.disconnect_time < self.connect_time {
            return Err(Error::validation(format!(
                "call {}: disconnect {} precedes connect {}",
                self.call_id, self.disconnect_time, self.connect_time
            )));
        }
        if i64::from(self.duration_s) != self.disconnect_time.0 - self.connect_time.0 {
            return Err(Error::validation(format!(
                "call {}: duration {} s does not match timestamps",
                self.call_id, self.duration_s
            )));
        }
        Ok(())
    }

    pub fn answered(&self) -> bool {
        self.duration_s > 0
    }
}

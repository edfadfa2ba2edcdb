//! Dynamic call routing driven by call quality.
//!
//! Per-vendor Average Call Duration (ACD) is measured over dynamic
//! intervals and turned into a rejection rate on the clone interface of the
//! billing-preferred vendor. Rejected calls fail over to the other vendor,
//! which lets a static-preference billing router move traffic away from
//! routes that answer calls without connecting them.
//!
//! Modules, bottom-up:
//!
//! - [`domain`]: vendors, preferences, response classes, CDRs
//! - [`rejection`]: ACD pair + preferences to rejection percentages
//! - [`store`]: CDR log, `acd_vendors` rows, live counters
//! - [`aggregate`]: interval ticks, per-vendor statistics, interval close
//! - [`admission`]: per-call accept/reject at the clone interface
//! - [`sim`]: deterministic closed-loop traffic simulator
//! - [`report`]: interval table and calculator breakdown
//! - [`cli`]: the `acd-routing` command

pub mod admission;
pub mod aggregate;
pub mod cli;
pub mod domain;
pub mod error;
mod par;
pub mod rejection;
pub mod report;
pub mod sim;
pub mod store;

pub use error::{Error, Result};

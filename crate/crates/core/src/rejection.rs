//! Conversion of a pair of per-vendor ACDs and billing preferences into
//! per-vendor rejection percentages.
//!
//! The vendor with the lower ACD gets a share of traffic between `load_min`
//! and one half, proportional to its ACD relative to the better vendor.
//! Rejection is only ever applied on the clone of the higher-preference
//! vendor: billing always tries that one first, so rejecting a fraction of
//! its calls pushes exactly that fraction to the other vendor.

use serde::{Deserialize, Serialize};

use crate::domain::Preference;
use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_LOAD_MIN: f64 = 0.1;

/// Quality inputs for one routing group at the close of an interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityInput {
    /// ACD in minutes; `None` when the vendor had no answered call.
    pub acd_min: [Option<f64>; 2],
    pub pref: [Preference; 2],
    pub load_min: f64,
}

impl QualityInput {
    pub fn new(acd_min: [Option<f64>; 2], pref: [Preference; 2], load_min: f64) -> Result<Self> {
        let input = QualityInput {
            acd_min,
            pref,
            load_min,
        };
        input.validate()?;
        Ok(input)
    }

    pub fn validate(&self) -> Result<()> {
        validate_load_min(self.load_min)?;
        if self.pref[0] == self.pref[1] {
            return Err(Error::validation(format!(
                "equal preferences ({}) are not supported",
                self.pref[0]
            )));
        }
        for acd in self.acd_min.iter().flatten() {
            if !acd.is_finite() || *acd < 0.0 {
                return Err(Error::validation(format!(
                    "ACD {acd} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

pub fn validate_load_min(load_min: f64) -> Result<()> {
    if (0.0..0.5).contains(&load_min) {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "load_min {load_min} outside [0, 0.5)"
        )))
    }
}

/// Rank and target load, present only when both vendors have an ACD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Balance {
    /// Index of the vendor with the higher ACD.
    pub max_idx: usize,
    pub rank: [f64; 2],
    /// Target share of traffic per vendor ("target balance"); sums to 1.
    pub load: [f64; 2],
}

impl Balance {
    pub fn min_idx(&self) -> usize {
        1 - self.max_idx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionResult {
    /// `None` when at least one ACD was absent: no evidence, no rejection.
    pub balance: Option<Balance>,
    /// Unrounded rejection percentage per vendor, in [0, 100].
    pub reject_pct: [f64; 2],
}

impl RejectionResult {
    pub const NO_EVIDENCE: RejectionResult = RejectionResult {
        balance: None,
        reject_pct: [0.0, 0.0],
    };

    /// Rejection percentages as stored and reported (two decimals).
    pub fn reject_pct_rounded(&self) -> [f64; 2] {
        self.reject_pct.map(round2)
    }

    pub fn load(&self) -> Option<[f64; 2]> {
        self.balance.map(|b| b.load)
    }
}

/// Round half up to two decimals. Inputs here are never negative.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Index of the strictly larger ACD; ties go to index 0.
pub fn max_acd(acd: [f64; 2]) -> usize {
    if acd[0] < acd[1] {
        1
    } else {
        0
    }
}

pub fn compute_rejection(input: &QualityInput) -> Result<RejectionResult> {
    input.validate()?;
    let acd = match input.acd_min {
        [Some(a), Some(b)] => [a, b],
        _ => return Ok(RejectionResult::NO_EVIDENCE),
    };

    let max = max_acd(acd);
    let min = 1 - max;

    let mut rank = [0.0; 2];
    rank[max] = 1.0;
    // 0/0 is treated as equal quality.
    rank[min] = if acd[max] == 0.0 {
        1.0
    } else {
        acd[min] / acd[max]
    };

    let mut load = [0.0; 2];
    load[min] = input.load_min + (0.5 - input.load_min) * rank[min];
    load[max] = 1.0 - load[min];

    let mut reject_pct = [0.0; 2];
    if input.pref[max] > input.pref[min] {
        reject_pct[max] = load[min] * 100.0;
    } else {
        reject_pct[min] = load[max] * 100.0;
    }

    Ok(RejectionResult {
        balance: Some(Balance {
            max_idx: max,
            rank,
            load,
        }),
        reject_pct,
    })
}

/// Evaluates many inputs, in parallel when the `parallel` feature is on.
pub fn compute_rejection_batch(inputs: &[QualityInput]) -> Vec<Result<RejectionResult>> {
    par::map(inputs, compute_rejection)
}

pub fn compute_rejection_batch_sequential(inputs: &[QualityInput]) -> Vec<Result<RejectionResult>> {
    par::map_sequential(inputs, compute_rejection)
}

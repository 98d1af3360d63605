//! Scoring of recall trials and audit of questionnaire statistics.

mod audit;
mod recall;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use audit::{
    audit_tables, feasibility_audit, AuditReport, AuditRow, AuditTolerance, CheckedConvention, FeasibilityVerdict, RowVerdict,
    SkipReason, TableRow, TooLarge, MAX_AUDIT_N,
};
pub use recall::{
    compare_reported, score_recall, summarize_responses, Group, Instrument, ItemSummary, MeanCheck,
    QuestionnaireResponse, RecallRecord, RecallScore, ScoreError, StepRecall,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdConvention {
    /// Divide by n.
    Population,
    /// Divide by n - 1.
    Sample,
}

impl fmt::Display for SdConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SdConvention::Population => "population",
            SdConvention::Sample => "sample",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatTriple<S = f64> {
    pub mean: S,
    pub median: S,
    pub sd: S,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("no values")]
pub struct EmptyInput;

/// Sum of squared deviations divided per convention. A single value has
/// variance 0 under both.
pub(crate) fn variance<S: Scalar>(values: &[i64], convention: SdConvention) -> S {
    let n = values.len() as i64;
    let mean = S::from_i64(values.iter().sum()) / S::from_i64(n);
    let squares = values
        .iter()
        .map(|v| {
            let d = S::from_i64(*v) - mean;
            d * d
        })
        .fold(S::zero(), |a, b| a + b);
    let divisor = match convention {
        SdConvention::Population => n,
        SdConvention::Sample => n - 1,
    };
    if divisor <= 0 {
        S::zero()
    } else {
        squares / S::from_i64(divisor)
    }
}

/// Median of already sorted values.
pub(crate) fn sorted_median<S: Scalar>(sorted: &[i64]) -> S {
    let n = sorted.len();
    if n % 2 == 1 {
        S::from_i64(sorted[n / 2])
    } else {
        S::from_i64(sorted[n / 2 - 1] + sorted[n / 2]) / S::from_i64(2)
    }
}

pub fn descriptive_stats<S: Scalar>(values: &[i64], convention: SdConvention) -> Result<StatTriple<S>, EmptyInput> {
    if values.is_empty() {
        return Err(EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    Ok(StatTriple {
        mean: S::from_i64(sorted.iter().sum()) / S::from_i64(sorted.len() as i64),
        median: sorted_median(&sorted),
        sd: variance::<S>(&sorted, convention).sqrt(),
        n: sorted.len(),
    })
}

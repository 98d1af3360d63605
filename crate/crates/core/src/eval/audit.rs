use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{sorted_median, variance, SdConvention, StatTriple};
use crate::scalar::Scalar;

/// Longest vector enumerated by [`feasibility_audit`].
pub const MAX_AUDIT_N: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("n = {n} exceeds the audit limit of {max}")]
pub struct TooLarge {
    pub n: usize,
    pub max: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditTolerance<S = f64> {
    pub mean: S,
    pub median: S,
    pub sd: S,
}

impl<S: Scalar> Default for AuditTolerance<S> {
    fn default() -> Self {
        let d = |s: &str| S::from_decimal(s).expect("literal decimal");
        AuditTolerance {
            mean: d("0.05"),
            median: d("0.05"),
            sd: d("0.1"),
        }
    }
}

impl<S: Scalar> AuditTolerance<S> {
    pub fn uniform(tol: S) -> Self {
        AuditTolerance {
            mean: tol,
            median: tol,
            sd: tol,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckedConvention {
    Population,
    Sample,
    Either,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    /// First matching vector in ascending lexicographic order.
    pub witness: Option<Vec<i64>>,
    /// Which SD conventions produced a match; `Either` when none did.
    pub checked: CheckedConvention,
}

fn within<S: Scalar>(actual: S, expected: S, tol: S) -> bool {
    (actual - expected).abs() <= tol + S::eq_tolerance()
}

/// `sqrt(var)` within `tol` of `sd`, compared on squares so rationals stay
/// exact.
fn sd_within<S: Scalar>(var: S, sd: S, tol: S) -> bool {
    let hi = sd + tol + S::eq_tolerance();
    let lo = sd - tol - S::eq_tolerance();
    var <= hi * hi && (lo <= S::zero() || var >= lo * lo)
}

/// Searches every integer vector of length `n` over the scale for one that
/// reproduces the triple within tolerance under either SD convention.
pub fn feasibility_audit<S: Scalar>(
    triple: &StatTriple<S>,
    scale_min: i64,
    scale_max: i64,
    tol: &AuditTolerance<S>,
) -> Result<FeasibilityVerdict, TooLarge> {
    if triple.n > MAX_AUDIT_N {
        return Err(TooLarge {
            n: triple.n,
            max: MAX_AUDIT_N,
        });
    }
    let mut witness = None;
    let (mut population, mut sample) = (false, false);
    if triple.n > 0 {
        for v in (scale_min..=scale_max).combinations_with_replacement(triple.n) {
            let mean = S::from_i64(v.iter().sum()) / S::from_i64(v.len() as i64);
            if !within(mean, triple.mean, tol.mean) || !within(sorted_median(&v), triple.median, tol.median) {
                continue;
            }
            let p = sd_within(variance::<S>(&v, SdConvention::Population), triple.sd, tol.sd);
            let s = sd_within(variance::<S>(&v, SdConvention::Sample), triple.sd, tol.sd);
            if (p || s) && witness.is_none() {
                witness = Some(v);
            }
            population |= p;
            sample |= s;
        }
    }
    let checked = match (population, sample) {
        (true, false) => CheckedConvention::Population,
        (false, true) => CheckedConvention::Sample,
        _ => CheckedConvention::Either,
    };
    Ok(FeasibilityVerdict {
        feasible: witness.is_some(),
        witness,
        checked,
    })
}

/// One transcribed table row; blank cells are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub table: String,
    pub item: String,
    pub cohort: String,
    pub n: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub sd: Option<f64>,
    #[serde(default = "default_scale_min")]
    pub scale_min: i64,
    #[serde(default = "default_scale_max")]
    pub scale_max: i64,
    /// Pooled rows that summarise a whole table.
    #[serde(default)]
    pub summary: bool,
}

fn default_scale_min() -> i64 {
    1
}

fn default_scale_max() -> i64 {
    6
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    Blank,
    Summary,
    TooLarge,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowVerdict {
    Ok,
    OkIfSwapped,
    InfeasibleBoth,
    Skipped(SkipReason),
}

impl fmt::Display for RowVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowVerdict::Ok => f.write_str("ok"),
            RowVerdict::OkIfSwapped => f.write_str("ok-if-swapped"),
            RowVerdict::InfeasibleBoth => f.write_str("infeasible-both"),
            RowVerdict::Skipped(SkipReason::Blank) => f.write_str("skipped(blank)"),
            RowVerdict::Skipped(SkipReason::Summary) => f.write_str("skipped(summary)"),
            RowVerdict::Skipped(SkipReason::TooLarge) => f.write_str("skipped(too-large)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRow {
    pub table: String,
    pub item: String,
    pub cohort: String,
    pub verdict: RowVerdict,
    pub as_printed: Option<FeasibilityVerdict>,
    pub swapped: Option<FeasibilityVerdict>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
}

impl AuditReport {
    pub fn count(&self, verdict: &RowVerdict) -> usize {
        self.rows.iter().filter(|r| &r.verdict == verdict).count()
    }

    pub fn find(&self, table: &str, item: &str, cohort: &str) -> Option<&AuditRow> {
        self.rows
            .iter()
            .find(|r| r.table == table && r.item == item && r.cohort == cohort)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            write!(f, "{}\t{}\t{}\t{}", r.table, r.cohort, r.verdict, r.item)?;
            let witness = r
                .as_printed
                .iter()
                .chain(&r.swapped)
                .find_map(|v| v.witness.as_ref());
            if let Some(w) = witness.filter(|_| matches!(r.verdict, RowVerdict::Ok | RowVerdict::OkIfSwapped)) {
                write!(f, "\twitness={w:?}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn to_scalar<S: Scalar>(v: f64) -> Option<S> {
    S::from_decimal(&v.to_string())
}

fn audit_row<S: Scalar>(row: &TableRow, tol: &AuditTolerance<S>) -> AuditRow {
    let mut out = AuditRow {
        table: row.table.clone(),
        item: row.item.clone(),
        cohort: row.cohort.clone(),
        verdict: RowVerdict::Skipped(SkipReason::Blank),
        as_printed: None,
        swapped: None,
    };
    if row.summary {
        out.verdict = RowVerdict::Skipped(SkipReason::Summary);
        return out;
    }
    let (Some(mean), Some(median), Some(sd)) = (
        row.mean.and_then(to_scalar::<S>),
        row.median.and_then(to_scalar::<S>),
        row.sd.and_then(to_scalar::<S>),
    ) else {
        return out;
    };
    let printed = StatTriple { mean, median, sd, n: row.n };
    let swapped = StatTriple {
        mean: median,
        median: mean,
        ..printed
    };
    let (Ok(a), Ok(b)) = (
        feasibility_audit(&printed, row.scale_min, row.scale_max, tol),
        feasibility_audit(&swapped, row.scale_min, row.scale_max, tol),
    ) else {
        out.verdict = RowVerdict::Skipped(SkipReason::TooLarge);
        return out;
    };
    out.verdict = if a.feasible {
        RowVerdict::Ok
    } else if b.feasible {
        RowVerdict::OkIfSwapped
    } else {
        RowVerdict::InfeasibleBoth
    };
    out.as_printed = Some(a);
    out.swapped = Some(b);
    out
}

/// Audits each row as printed and with mean and median swapped.
pub fn audit_tables<S: Scalar>(rows: &[TableRow], tol: &AuditTolerance<S>) -> AuditReport {
    AuditReport {
        rows: rows.iter().map(|r| audit_row(r, tol)).collect(),
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{descriptive_stats, SdConvention, StatTriple};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Experiment,
    Control,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecall {
    /// Location remembered.
    pub r#where: bool,
    /// Type of action remembered.
    pub what: bool,
}

impl StepRecall {
    pub fn is_error(self) -> bool {
        !(self.r#where && self.what)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecallRecord {
    pub participant: String,
    pub group: Group,
    #[serde(rename = "perStep")]
    pub per_step: Vec<StepRecall>,
    #[serde(default)]
    pub consultations: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Instrument {
    Satisfaction,
    PerceivedEaseOfUse,
    EaseOfUse,
    Presence,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireResponse {
    pub participant: String,
    pub instrument: Instrument,
    pub item: String,
    pub value: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("no records for the {0:?} group")]
    EmptyGroup(Group),
    #[error("participant {participant} has {found} step entries, lesson has {expected}")]
    StepCountMismatch {
        participant: String,
        expected: usize,
        found: usize,
    },
    #[error("participant {0} appears twice")]
    DuplicateParticipant(String),
    #[error("participant {participant}, item {item:?}: value {value} outside {min}..={max}")]
    ValueOutOfScale {
        participant: String,
        item: String,
        value: i64,
        min: i64,
        max: i64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecallScore<S = f64> {
    pub per_participant_errors: BTreeMap<String, usize>,
    pub group_means: BTreeMap<Group, S>,
    pub group_sizes: BTreeMap<Group, usize>,
    /// Support consultations, reported apart from errors.
    pub penalties: BTreeMap<String, u32>,
}

/// Error count per participant (a step is wrong unless both location and
/// type were recalled) and the mean per group. Both groups must be present.
pub fn score_recall<S: Scalar>(records: &[RecallRecord], step_count: Option<usize>) -> Result<RecallScore<S>, ScoreError> {
    let mut score = RecallScore {
        per_participant_errors: BTreeMap::new(),
        group_means: BTreeMap::new(),
        group_sizes: BTreeMap::new(),
        penalties: BTreeMap::new(),
    };
    let mut sums: BTreeMap<Group, i64> = BTreeMap::new();
    for r in records {
        if let Some(expected) = step_count.filter(|e| *e != r.per_step.len()) {
            return Err(ScoreError::StepCountMismatch {
                participant: r.participant.clone(),
                expected,
                found: r.per_step.len(),
            });
        }
        let errors = r.per_step.iter().filter(|s| s.is_error()).count();
        if score.per_participant_errors.insert(r.participant.clone(), errors).is_some() {
            return Err(ScoreError::DuplicateParticipant(r.participant.clone()));
        }
        score.penalties.insert(r.participant.clone(), r.consultations);
        *sums.entry(r.group).or_default() += errors as i64;
        *score.group_sizes.entry(r.group).or_default() += 1;
    }
    for group in [Group::Experiment, Group::Control] {
        let n = *score.group_sizes.get(&group).ok_or(ScoreError::EmptyGroup(group))?;
        score.group_means.insert(group, S::from_i64(sums[&group]) / S::from_i64(n as i64));
    }
    Ok(score)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanCheck<S = f64> {
    pub group: Group,
    pub reported: S,
    pub computed: S,
    pub n: usize,
    /// Closest value of the form k/n.
    pub nearest_attainable: S,
    pub gap: S,
}

impl<S: Scalar> MeanCheck<S> {
    pub fn attainable(&self) -> bool {
        self.gap.approx_eq(S::zero())
    }
}

/// Compares reported group means with the computed ones and with the
/// nearest mean that integer error counts over the group could produce.
pub fn compare_reported<S: Scalar>(score: &RecallScore<S>, reported: &[(Group, S)]) -> Vec<MeanCheck<S>> {
    reported
        .iter()
        .filter_map(|(group, value)| {
            let n = *score.group_sizes.get(group)?;
            let k = (value.to_f64() * n as f64).round() as i64;
            let nearest = S::from_i64(k) / S::from_i64(n as i64);
            Some(MeanCheck {
                group: *group,
                reported: *value,
                computed: score.group_means[group],
                n,
                nearest_attainable: nearest,
                gap: (*value - nearest).abs(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemSummary<S = f64> {
    pub instrument: Instrument,
    pub item: String,
    pub stats: StatTriple<S>,
}

/// Per-item statistics of raw responses on a 1..=6 scale, in
/// (instrument, item) order.
pub fn summarize_responses<S: Scalar>(
    responses: &[QuestionnaireResponse],
    convention: SdConvention,
) -> Result<Vec<ItemSummary<S>>, ScoreError> {
    let (min, max) = (1, 6);
    let mut items: BTreeMap<(Instrument, &str), Vec<i64>> = BTreeMap::new();
    for r in responses {
        if !(min..=max).contains(&r.value) {
            return Err(ScoreError::ValueOutOfScale {
                participant: r.participant.clone(),
                item: r.item.clone(),
                value: r.value,
                min,
                max,
            });
        }
        items.entry((r.instrument, &r.item)).or_default().push(r.value);
    }
    Ok(items
        .into_iter()
        .map(|((instrument, item), values)| ItemSummary {
            instrument,
            item: item.to_owned(),
            stats: descriptive_stats(&values, convention).expect("groups are non-empty"),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    fn record(id: &str, group: Group, errors: usize, steps: usize) -> RecallRecord {
        RecallRecord {
            participant: id.into(),
            group,
            per_step: (0..steps)
                .map(|i| StepRecall {
                    r#where: true,
                    what: i >= errors,
                })
                .collect(),
            consultations: 0,
        }
    }

    #[test]
    fn group_means() {
        let mut records: Vec<_> = [1, 1, 1, 1, 0]
            .iter()
            .enumerate()
            .map(|(i, e)| record(&format!("e{i}"), Group::Experiment, *e, 13))
            .collect();
        records.extend([3, 2, 3, 2].iter().enumerate().map(|(i, e)| record(&format!("c{i}"), Group::Control, *e, 13)));
        let s = score_recall::<Exact>(&records, Some(13)).unwrap();
        assert_eq!(s.group_means[&Group::Experiment], Exact::new(4, 5));
        let checks = compare_reported(&s, &[(Group::Experiment, Exact::new(4, 5)), (Group::Control, Exact::new(13, 5))]);
        assert!(checks[0].attainable());
        assert_eq!(checks[1].nearest_attainable, Exact::new(5, 2));
        assert_eq!(checks[1].gap, Exact::new(1, 10));
    }

    #[test]
    fn all_correct_is_zero() {
        let r = record("p", Group::Experiment, 0, 13);
        assert_eq!(r.per_step.iter().filter(|s| s.is_error()).count(), 0);
    }

    #[test]
    fn faults() {
        let only = [record("p", Group::Experiment, 0, 13)];
        assert_eq!(score_recall::<f64>(&only, None), Err(ScoreError::EmptyGroup(Group::Control)));
        assert!(matches!(
            score_recall::<f64>(&only, Some(12)),
            Err(ScoreError::StepCountMismatch { .. })
        ));
    }

    #[test]
    fn wire_names() {
        let r: RecallRecord = serde_json::from_str(
            r#"{"participant":"p1","group":"control","perStep":[{"where":true,"what":false}],"consultations":2}"#,
        )
        .unwrap();
        assert!(r.per_step[0].is_error());
        assert_eq!(r.consultations, 2);
    }
}

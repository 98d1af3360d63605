//! Lessons as linear step sequences: folding steps into machine states,
//! validating ordering rules, checking that installation mirrors removal,
//! and deriving per-step display annotations.

mod oracle;
mod types;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{apply_op, ModelOp, ModelState, PlantModel};
use crate::scalar::Scalar;

pub use oracle::{enumerate_valid_orders, order_is_valid, OrderCount, TooManySteps, MAX_ENUMERATED_STEPS};
pub use types::{
    Annotation, Constraint, HighlightKind, Lesson, Step, ValidationReport, Violation,
};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum StateAtError<S: Scalar = f64> {
    #[error("step {k} out of range 0..={steps}")]
    IndexOutOfRange { k: usize, steps: usize },
    #[error("lesson faults before step {k}")]
    Faulted { k: usize, report: ValidationReport<S> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("step {k} out of range 1..={steps}")]
pub struct StepOutOfRange {
    pub k: usize,
    pub steps: usize,
}

/// State after steps `1..=k`; `k = 0` is the model's initial state.
pub fn state_at<S: Scalar>(
    lesson: &Lesson<S>,
    model: &PlantModel<S>,
    k: usize,
) -> Result<ModelState<S>, StateAtError<S>> {
    let steps = lesson.step_count();
    if k > steps {
        return Err(StateAtError::IndexOutOfRange { k, steps });
    }
    let mut state = model.initial_state();
    for step in &lesson.steps[..k] {
        if let Some(op) = &step.op {
            state = apply_op(&state, op, model).map_err(|fault| StateAtError::Faulted {
                k,
                report: ValidationReport {
                    violations: Vec::new(),
                    op_faults: vec![(step.index, fault)],
                },
            })?;
        }
    }
    Ok(state)
}

/// States after every prefix: element `k` is `state_at(k)`.
pub fn all_states<S: Scalar>(
    lesson: &Lesson<S>,
    model: &PlantModel<S>,
) -> Result<Vec<ModelState<S>>, ValidationReport<S>> {
    let mut states = Vec::with_capacity(lesson.step_count() + 1);
    let mut state = model.initial_state();
    states.push(state.clone());
    for step in &lesson.steps {
        if let Some(op) = &step.op {
            state = apply_op(&state, op, model).map_err(|fault| ValidationReport {
                violations: Vec::new(),
                op_faults: vec![(step.index, fault)],
            })?;
        }
        states.push(state.clone());
    }
    Ok(states)
}

fn in_scope<S: Scalar>(model: &PlantModel<S>, step: &Step<S>, scope: Option<&str>) -> bool {
    scope.is_none_or(|module| model.is_within(&step.target, module))
}

/// Checks op application in sequence, every precedence rule and every
/// verify-between rule. An empty report means the lesson is valid.
pub fn validate_lesson<S: Scalar>(lesson: &Lesson<S>, model: &PlantModel<S>) -> ValidationReport<S> {
    let mut report = ValidationReport::default();

    // Fold, skipping faulted ops so later faults are still found.
    // folded[i] is the state after step i+1.
    let mut state = model.initial_state();
    let mut folded = Vec::with_capacity(lesson.step_count());
    for step in &lesson.steps {
        if let Some(op) = &step.op {
            match apply_op(&state, op, model) {
                Ok(next) => state = next,
                Err(fault) => report.op_faults.push((step.index, fault)),
            }
        }
        folded.push(state.clone());
    }

    for constraint in &lesson.constraints {
        match constraint {
            Constraint::Precedence {
                before,
                after,
                scope,
            } => {
                let scoped: Vec<&Step<S>> = lesson
                    .steps
                    .iter()
                    .filter(|s| in_scope(model, s, scope.as_deref()))
                    .collect();
                let last_before = scoped.iter().filter(|s| &s.class == before).map(|s| s.index).max();
                let first_after = scoped.iter().filter(|s| &s.class == after).map(|s| s.index).min();
                let (Some(last_before), Some(first_after)) = (last_before, first_after) else {
                    continue;
                };
                if first_after > last_before {
                    continue;
                }
                // An `after` step is late iff some `before` step follows it,
                // and symmetrically for `before` steps.
                let offending: BTreeSet<usize> = scoped
                    .iter()
                    .filter(|s| {
                        (&s.class == after && s.index < last_before)
                            || (&s.class == before && s.index > first_after)
                    })
                    .map(|s| s.index)
                    .collect();
                let within = scope
                    .as_ref()
                    .map(|m| format!(" within module {m}"))
                    .unwrap_or_default();
                report.violations.push(Violation {
                    rule: "precedence".into(),
                    step_indices: offending.into_iter().collect(),
                    detail: format!("every {before} step must precede every {after} step{within}"),
                });
            }
            Constraint::VerifyBetween {
                observable,
                comparator,
                value,
                after_class,
                before_class,
            } => {
                let last_after = lesson.steps.iter().filter(|s| &s.class == after_class).map(|s| s.index).max();
                let first_before = lesson.steps.iter().filter(|s| &s.class == before_class).map(|s| s.index).min();
                let (Some(lo), Some(hi)) = (last_after, first_before) else {
                    continue;
                };
                let verified = lo < hi
                    && (lo + 1..hi).any(|k| {
                        let step = &lesson.steps[k - 1];
                        let checks_observable = matches!(
                            &step.op,
                            Some(ModelOp::Verify { name, .. }) if name == observable
                        );
                        checks_observable
                            && folded[k - 1]
                                .observables
                                .get(observable)
                                .is_some_and(|actual| comparator.holds(*actual, *value))
                    });
                if !verified {
                    report.violations.push(Violation {
                        rule: "verify-between".into(),
                        step_indices: vec![lo, hi],
                        detail: format!(
                            "no passing verification of {observable} {comparator} {} between the last {after_class} step and the first {before_class} step",
                            value.to_decimal()
                        ),
                    });
                }
            }
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReversalCheck {
    pub holds: bool,
    pub mismatch: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("lesson declares no reverse pairs")]
pub struct NoReversePairs;

/// Checks that the installation phases run in the reverse order of the
/// removal phases. Only classes named in a reverse pair take part; runs of
/// the same class form one phase.
pub fn check_reversal<S: Scalar>(lesson: &Lesson<S>) -> Result<ReversalCheck, NoReversePairs> {
    if lesson.reverse_pairs.is_empty() {
        return Err(NoReversePairs);
    }
    let phases = |side: fn(&(String, String)) -> &String| -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for step in &lesson.steps {
            if let Some(pair) = lesson.reverse_pairs.iter().position(|p| side(p) == &step.class) {
                if out.last() != Some(&pair) {
                    out.push(pair);
                }
            }
        }
        out
    };
    let removal = phases(|p| &p.0);
    let installation = phases(|p| &p.1);
    let expected: Vec<usize> = removal.iter().rev().copied().collect();

    let describe = |pair: usize| {
        let (off, on) = &lesson.reverse_pairs[pair];
        format!("{off}/{on}")
    };
    for (position, (want, got)) in expected.iter().zip(&installation).enumerate() {
        if want != got {
            return Ok(ReversalCheck {
                holds: false,
                mismatch: Some(format!(
                    "installation phase {} is {} but reversed removal expects {}",
                    position + 1,
                    describe(*got),
                    describe(*want)
                )),
            });
        }
    }
    if expected.len() != installation.len() {
        let (longer, missing_from) = if expected.len() > installation.len() {
            (&expected, "installation")
        } else {
            (&installation, "removal")
        };
        let extra = longer[expected.len().min(installation.len())];
        return Ok(ReversalCheck {
            holds: false,
            mismatch: Some(format!("phase {} has no counterpart in the {missing_from}", describe(extra))),
        });
    }
    Ok(ReversalCheck {
        holds: true,
        mismatch: None,
    })
}

/// Display annotation for step `k` (1-based), derived only from the step's op.
pub fn step_annotation<S: Scalar>(lesson: &Lesson<S>, k: usize) -> Result<Annotation<S>, StepOutOfRange> {
    let step = lesson.step(k).ok_or(StepOutOfRange {
        k,
        steps: lesson.step_count(),
    })?;
    let (highlights, observable_note) = match &step.op {
        Some(ModelOp::Disconnect(c)) => (vec![(c.clone(), HighlightKind::Remove)], None),
        Some(ModelOp::Connect(c)) => (vec![(c.clone(), HighlightKind::Establish)], None),
        Some(ModelOp::Verify { name, value, .. }) => (Vec::new(), Some((name.clone(), *value))),
        Some(ModelOp::SetObservable { .. }) | None => (Vec::new(), None),
    };
    Ok(Annotation {
        step_index: step.index,
        target: step.target.clone(),
        highlights,
        observable_note,
    })
}

//! Exhaustive ordering oracle.
//!
//! Every permutation of a short step list is checked with a deliberately
//! naive rule test (pairwise index comparison, quantifier-style verify
//! windows) that shares no code with [`super::validate_lesson`], so the two
//! can be compared against each other.

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Constraint, Step};
use crate::model::{apply_op, ModelOp, PlantModel};
use crate::scalar::Scalar;

/// Largest step count accepted by [`enumerate_valid_orders`] (9! orders).
pub const MAX_ENUMERATED_STEPS: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("{steps} steps exceed the enumeration limit of {max}")]
pub struct TooManySteps {
    pub steps: usize,
    pub max: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderCount {
    pub count: u64,
    pub total: u64,
    /// Up to `cap` valid orders, each listed by the steps' original indices.
    pub sample: Vec<Vec<usize>>,
}

/// Whether the steps, executed in the given order, fold without fault and
/// satisfy every constraint.
pub fn order_is_valid<S: Scalar>(
    order: &[&Step<S>],
    model: &PlantModel<S>,
    constraints: &[Constraint<S>],
) -> bool {
    let mut state = model.initial_state();
    let mut states = Vec::with_capacity(order.len());
    for step in order {
        if let Some(op) = &step.op {
            match apply_op(&state, op, model) {
                Ok(next) => state = next,
                Err(_) => return false,
            }
        }
        states.push(state.clone());
    }

    constraints.iter().all(|constraint| match constraint {
        Constraint::Precedence {
            before,
            after,
            scope,
        } => {
            let counts = |s: &Step<S>| {
                scope
                    .as_deref()
                    .is_none_or(|module| model.is_within(&s.target, module))
            };
            for i in 0..order.len() {
                for j in i + 1..order.len() {
                    let (early, late) = (order[i], order[j]);
                    if &early.class == after && &late.class == before && counts(early) && counts(late) {
                        return false;
                    }
                }
            }
            true
        }
        Constraint::VerifyBetween {
            observable,
            comparator,
            value,
            after_class,
            before_class,
        } => {
            let after_positions: Vec<usize> = (0..order.len()).filter(|&p| &order[p].class == after_class).collect();
            let before_positions: Vec<usize> = (0..order.len()).filter(|&p| &order[p].class == before_class).collect();
            if after_positions.is_empty() || before_positions.is_empty() {
                return true;
            }
            (0..order.len()).any(|v| {
                let is_verify = matches!(&order[v].op, Some(ModelOp::Verify { name, .. }) if name == observable);
                is_verify
                    && after_positions.iter().all(|&a| a < v)
                    && before_positions.iter().all(|&b| v < b)
                    && comparator.holds(states[v].observables[observable], *value)
            })
        }
    })
}

/// Counts the orderings of `steps` that are valid under `constraints`.
pub fn enumerate_valid_orders<S: Scalar>(
    steps: &[Step<S>],
    model: &PlantModel<S>,
    constraints: &[Constraint<S>],
    cap: usize,
) -> Result<OrderCount, TooManySteps> {
    if steps.len() > MAX_ENUMERATED_STEPS {
        return Err(TooManySteps {
            steps: steps.len(),
            max: MAX_ENUMERATED_STEPS,
        });
    }
    let mut count = 0;
    let mut total = 0;
    let mut sample = Vec::new();
    for perm in (0..steps.len()).permutations(steps.len()) {
        total += 1;
        let order: Vec<&Step<S>> = perm.iter().map(|&i| &steps[i]).collect();
        if order_is_valid(&order, model, constraints) {
            count += 1;
            if sample.len() < cap {
                sample.push(order.iter().map(|s| s.index).collect());
            }
        }
    }
    Ok(OrderCount {
        count,
        total,
        sample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(index: usize, class: &str) -> Step {
        Step {
            index,
            instruction: String::new(),
            target: "A".into(),
            class: class.into(),
            op: None,
        }
    }

    fn model() -> PlantModel {
        let mut m = PlantModel::new("m");
        m.blocks.push(crate::model::Block::new("A", crate::model::Discipline::Mechanical));
        m
    }

    fn prec(before: &str, after: &str) -> Constraint {
        Constraint::Precedence {
            before: before.into(),
            after: after.into(),
            scope: None,
        }
    }

    #[test]
    fn unconstrained_pair_has_two_orders() {
        let r = enumerate_valid_orders(&[step(1, "x"), step(2, "y")], &model(), &[], 10).unwrap();
        assert_eq!((r.count, r.total), (2, 2));
    }

    #[test]
    fn chain_forces_total_order() {
        let steps = [step(1, "c"), step(2, "a"), step(3, "b")];
        let r = enumerate_valid_orders(&steps, &model(), &[prec("a", "b"), prec("b", "c")], 10).unwrap();
        assert_eq!((r.count, r.total), (1, 6));
        assert_eq!(r.sample, vec![vec![2, 3, 1]]);
    }

    #[test]
    fn guard() {
        let steps: Vec<_> = (1..=10).map(|i| step(i, "x")).collect();
        assert_eq!(
            enumerate_valid_orders(&steps, &model(), &[], 1),
            Err(TooManySteps { steps: 10, max: 9 })
        );
    }

    #[test]
    fn cap_limits_samples() {
        let steps: Vec<_> = (1..=4).map(|i| step(i, "x")).collect();
        let r = enumerate_valid_orders(&steps, &model(), &[], 3).unwrap();
        assert_eq!(r.count, 24);
        assert_eq!(r.sample.len(), 3);
    }
}

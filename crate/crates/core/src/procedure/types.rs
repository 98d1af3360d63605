use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Comparator, ModelOp, OpFault};
use crate::scalar::Scalar;

/// A linear sequence of work steps plus the ordering rules it must obey.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lesson<S = f64> {
    pub id: String,
    pub model_id: String,
    pub steps: Vec<Step<S>>,
    pub constraints: Vec<Constraint<S>>,
    /// `(removal class, installation class)` pairs, e.g. `(mount_off, mount_on)`.
    pub reverse_pairs: Vec<(String, String)>,
}

impl<S: Scalar> Lesson<S> {
    pub fn new(id: impl Into<String>, model_id: impl Into<String>) -> Self {
        Lesson {
            id: id.into(),
            model_id: model_id.into(),
            steps: Vec::new(),
            constraints: Vec::new(),
            reverse_pairs: Vec::new(),
        }
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Step with 1-based index `k`.
    pub fn step(&self, k: usize) -> Option<&Step<S>> {
        k.checked_sub(1).and_then(|i| self.steps.get(i))
    }

    /// Renumbers steps 1..N in their current order.
    pub fn renumber(&mut self) {
        for (i, step) in self.steps.iter_mut().enumerate() {
            step.index = i + 1;
        }
    }

    /// Copy of the lesson with steps `i` and `j` (1-based) exchanged.
    pub fn with_swapped(&self, i: usize, j: usize) -> Self {
        let mut out = self.clone();
        out.steps.swap(i - 1, j - 1);
        out.renumber();
        out
    }

    /// Copy of the lesson with step `from` moved to position `to` (1-based).
    pub fn with_moved(&self, from: usize, to: usize) -> Self {
        let mut out = self.clone();
        let step = out.steps.remove(from - 1);
        out.steps.insert(to - 1, step);
        out.renumber();
        out
    }

    /// Copy of the lesson without step `k` (1-based).
    pub fn without_step(&self, k: usize) -> Self {
        let mut out = self.clone();
        out.steps.remove(k - 1);
        out.renumber();
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step<S = f64> {
    pub index: usize,
    pub instruction: String,
    pub target: String,
    pub class: String,
    pub op: Option<ModelOp<S>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Constraint<S = f64> {
    /// Every step of class `before` precedes every step of class `after`.
    /// With a scope, only steps targeting the scope block or one of its
    /// descendants are considered.
    Precedence {
        before: String,
        after: String,
        scope: Option<String>,
    },
    /// Between the last step of `after_class` and the first step of
    /// `before_class` some verify step on `observable` must pass with the
    /// predicate holding in the folded state.
    VerifyBetween {
        observable: String,
        comparator: Comparator,
        value: S,
        after_class: String,
        before_class: String,
    },
}

impl<S: Scalar> fmt::Display for Constraint<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Precedence {
                before,
                after,
                scope,
            } => {
                write!(f, "precedence {before} < {after}")?;
                if let Some(scope) = scope {
                    write!(f, " scope=module:{scope}")?;
                }
                Ok(())
            }
            Constraint::VerifyBetween {
                observable,
                comparator,
                value,
                after_class,
                before_class,
            } => write!(
                f,
                "verify {observable} {comparator} {} after={after_class} before={before_class}",
                value.to_decimal()
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub step_indices: Vec<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport<S: Scalar = f64> {
    pub violations: Vec<Violation>,
    pub op_faults: Vec<(usize, OpFault<S>)>,
}

impl<S: Scalar> Default for ValidationReport<S> {
    fn default() -> Self {
        ValidationReport {
            violations: Vec::new(),
            op_faults: Vec::new(),
        }
    }
}

impl<S: Scalar> ValidationReport<S> {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty() && self.op_faults.is_empty()
    }

    pub fn finding_count(&self) -> usize {
        self.violations.len() + self.op_faults.len()
    }
}

impl<S: Scalar> fmt::Display for ValidationReport<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.finding_count();
        writeln!(f, "{n} {}", if n == 1 { "violation" } else { "violations" })?;
        for (step, fault) in &self.op_faults {
            writeln!(f, "step {step}: op fault: {fault}")?;
        }
        for v in &self.violations {
            let steps = v
                .step_indices
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",");
            writeln!(f, "{} [steps {steps}]: {}", v.rule, v.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HighlightKind {
    Remove,
    Establish,
}

impl HighlightKind {
    pub fn keyword(self) -> &'static str {
        match self {
            HighlightKind::Remove => "remove",
            HighlightKind::Establish => "establish",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "remove" => Some(HighlightKind::Remove),
            "establish" => Some(HighlightKind::Establish),
            _ => None,
        }
    }
}

impl fmt::Display for HighlightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// What the display marks for one step: the target component and the
/// connections to remove or establish.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotation<S = f64> {
    pub step_index: usize,
    pub target: String,
    pub highlights: Vec<(String, HighlightKind)>,
    pub observable_note: Option<(String, S)>,
}

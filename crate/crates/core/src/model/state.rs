use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::PlantModel;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConnStatus {
    Connected,
    Disconnected,
}

impl ConnStatus {
    pub fn keyword(self) -> &'static str {
        match self {
            ConnStatus::Connected => "connected",
            ConnStatus::Disconnected => "disconnected",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "connected" => Some(ConnStatus::Connected),
            "disconnected" => Some(ConnStatus::Disconnected),
            _ => None,
        }
    }
}

impl fmt::Display for ConnStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Machine configuration at one point of a procedure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelState<S = f64> {
    pub status: BTreeMap<String, ConnStatus>,
    pub observables: BTreeMap<String, S>,
}

impl<S: Scalar> ModelState<S> {
    pub fn is_valid_for(&self, model: &PlantModel<S>) -> bool {
        self.status.len() == model.connections.len()
            && model
                .connections
                .iter()
                .all(|c| self.status.contains_key(&c.id))
            && self.observables.keys().eq(model.observables.keys())
    }

    /// Line-oriented canonical form; equal states give equal bytes.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (id, status) in &self.status {
            out.push_str(&format!("status {id} {status}\n"));
        }
        for (name, value) in &self.observables {
            out.push_str(&format!("observable {name} {}\n", value.to_decimal()));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    Eq,
    Le,
    Ge,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "==",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Self> {
        match symbol {
            "==" => Some(Comparator::Eq),
            "<=" => Some(Comparator::Le),
            ">=" => Some(Comparator::Ge),
            _ => None,
        }
    }

    /// `actual <cmp> expected`, with the scalar's equality tolerance applied
    /// to all three comparators.
    pub fn holds<S: Scalar>(self, actual: S, expected: S) -> bool {
        let tol = S::eq_tolerance();
        match self {
            Comparator::Eq => actual.approx_eq(expected),
            Comparator::Le => actual <= expected + tol,
            Comparator::Ge => actual + tol >= expected,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelOp<S = f64> {
    Connect(String),
    Disconnect(String),
    SetObservable {
        name: String,
        value: S,
    },
    Verify {
        name: String,
        comparator: Comparator,
        value: S,
    },
}

impl<S: Scalar> ModelOp<S> {
    /// Connection named by the op, if any.
    pub fn connection(&self) -> Option<&str> {
        match self {
            ModelOp::Connect(c) | ModelOp::Disconnect(c) => Some(c),
            _ => None,
        }
    }

    /// Observable named by the op, if any.
    pub fn observable(&self) -> Option<&str> {
        match self {
            ModelOp::SetObservable { name, .. } | ModelOp::Verify { name, .. } => Some(name),
            _ => None,
        }
    }
}

impl<S: Scalar> fmt::Display for ModelOp<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelOp::Connect(c) => write!(f, "connect {c}"),
            ModelOp::Disconnect(c) => write!(f, "disconnect {c}"),
            ModelOp::SetObservable { name, value } => {
                write!(f, "set {name} {}", value.to_decimal())
            }
            ModelOp::Verify {
                name,
                comparator,
                value,
            } => write!(f, "verify {name} {comparator} {}", value.to_decimal()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error, Serialize, Deserialize)]
pub enum OpFault<S: Scalar = f64> {
    #[error("connection {connection} is already {status}")]
    AlreadyInStatus {
        connection: String,
        status: ConnStatus,
    },
    #[error("verification failed: {observable} is {actual}, expected {comparator} {expected}")]
    VerifyFailed {
        observable: String,
        comparator: Comparator,
        expected: S,
        actual: S,
    },
    #[error("unknown reference {0}")]
    UnknownRef(String),
}

/// Applies one model operation. Pure: the input state is never modified.
pub fn apply_op<S: Scalar>(
    state: &ModelState<S>,
    op: &ModelOp<S>,
    model: &PlantModel<S>,
) -> Result<ModelState<S>, OpFault<S>> {
    match op {
        ModelOp::Connect(id) | ModelOp::Disconnect(id) => {
            let target = if matches!(op, ModelOp::Connect(_)) {
                ConnStatus::Connected
            } else {
                ConnStatus::Disconnected
            };
            let current = match (model.connection(id), state.status.get(id)) {
                (Some(_), Some(s)) => *s,
                _ => return Err(OpFault::UnknownRef(id.clone())),
            };
            if current == target {
                return Err(OpFault::AlreadyInStatus {
                    connection: id.clone(),
                    status: current,
                });
            }
            let mut next = state.clone();
            next.status.insert(id.clone(), target);
            Ok(next)
        }
        ModelOp::SetObservable { name, value } => {
            if !model.observables.contains_key(name) || !state.observables.contains_key(name) {
                return Err(OpFault::UnknownRef(name.clone()));
            }
            let mut next = state.clone();
            next.observables.insert(name.clone(), *value);
            Ok(next)
        }
        ModelOp::Verify {
            name,
            comparator,
            value,
        } => {
            let actual = match (model.observables.get(name), state.observables.get(name)) {
                (Some(_), Some(v)) => *v,
                _ => return Err(OpFault::UnknownRef(name.clone())),
            };
            if comparator.holds(actual, *value) {
                Ok(state.clone())
            } else {
                Err(OpFault::VerifyFailed {
                    observable: name.clone(),
                    comparator: *comparator,
                    expected: *value,
                    actual,
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionChange {
    pub connection: String,
    pub from: ConnStatus,
    pub to: ConnStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableChange<S = f64> {
    pub name: String,
    pub from: S,
    pub to: S,
}

/// Entry-wise difference between two states of one model, sorted by key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeSet<S = f64> {
    pub connection_changes: Vec<ConnectionChange>,
    pub observable_changes: Vec<ObservableChange<S>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StateMismatch {
    #[error("states cover different connections or observables")]
    MismatchedModels,
    #[error("change set does not match the state at {0}")]
    Conflict(String),
}

impl<S: Scalar> ChangeSet<S> {
    pub fn is_empty(&self) -> bool {
        self.connection_changes.is_empty() && self.observable_changes.is_empty()
    }

    /// Swaps every `from`/`to` pair.
    pub fn inverse(&self) -> Self {
        ChangeSet {
            connection_changes: self
                .connection_changes
                .iter()
                .map(|c| ConnectionChange {
                    connection: c.connection.clone(),
                    from: c.to,
                    to: c.from,
                })
                .collect(),
            observable_changes: self
                .observable_changes
                .iter()
                .map(|c| ObservableChange {
                    name: c.name.clone(),
                    from: c.to,
                    to: c.from,
                })
                .collect(),
        }
    }

    /// Applies the changes entry-wise; every `from` must match `state`.
    pub fn apply_to(&self, state: &ModelState<S>) -> Result<ModelState<S>, StateMismatch> {
        let mut next = state.clone();
        for change in &self.connection_changes {
            match next.status.get_mut(&change.connection) {
                Some(s) if *s == change.from => *s = change.to,
                _ => return Err(StateMismatch::Conflict(change.connection.clone())),
            }
        }
        for change in &self.observable_changes {
            match next.observables.get_mut(&change.name) {
                Some(v) if *v == change.from => *v = change.to,
                _ => return Err(StateMismatch::Conflict(change.name.clone())),
            }
        }
        Ok(next)
    }
}

pub fn diff_states<S: Scalar>(
    a: &ModelState<S>,
    b: &ModelState<S>,
) -> Result<ChangeSet<S>, StateMismatch> {
    if !a.status.keys().eq(b.status.keys()) || !a.observables.keys().eq(b.observables.keys()) {
        return Err(StateMismatch::MismatchedModels);
    }
    let connection_changes = a
        .status
        .iter()
        .zip(b.status.values())
        .filter(|((_, from), to)| from != to)
        .map(|((id, from), to)| ConnectionChange {
            connection: id.clone(),
            from: *from,
            to: *to,
        })
        .collect();
    let observable_changes = a
        .observables
        .iter()
        .zip(b.observables.values())
        .filter(|((_, from), to)| from != to)
        .map(|((name, from), to)| ObservableChange {
            name: name.clone(),
            from: *from,
            to: *to,
        })
        .collect();
    Ok(ChangeSet {
        connection_changes,
        observable_changes,
    })
}

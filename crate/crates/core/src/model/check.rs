use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::PlantModel;
use crate::scalar::Scalar;

/// One structural rule broken by a model.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelFault {
    DuplicateBlock(String),
    DuplicatePort(String),
    DuplicateConnection(String),
    MissingParent { block: String, parent: String },
    ContainmentCycle(String),
    MissingOwner { port: String, owner: String },
    UnqualifiedPort(String),
    DanglingEndpoint { connection: String, port: String },
    SelfConnection(String),
    KindMismatch(String),
}

impl ModelFault {
    pub fn rule(&self) -> &'static str {
        match self {
            ModelFault::DuplicateBlock(_) => "unique-block-id",
            ModelFault::DuplicatePort(_) => "unique-port-id",
            ModelFault::DuplicateConnection(_) => "unique-connection-id",
            ModelFault::MissingParent { .. } => "parent-exists",
            ModelFault::ContainmentCycle(_) => "containment-forest",
            ModelFault::MissingOwner { .. } => "port-owner-exists",
            ModelFault::UnqualifiedPort(_) => "port-id-qualified",
            ModelFault::DanglingEndpoint { .. } => "endpoint-exists",
            ModelFault::SelfConnection(_) => "distinct-endpoints",
            ModelFault::KindMismatch(_) => "same-kind-endpoints",
        }
    }

    /// The id the fault is about.
    pub fn subject(&self) -> &str {
        match self {
            ModelFault::DuplicateBlock(id)
            | ModelFault::DuplicatePort(id)
            | ModelFault::DuplicateConnection(id)
            | ModelFault::ContainmentCycle(id)
            | ModelFault::UnqualifiedPort(id)
            | ModelFault::SelfConnection(id)
            | ModelFault::KindMismatch(id) => id,
            ModelFault::MissingParent { block, .. } => block,
            ModelFault::MissingOwner { port, .. } => port,
            ModelFault::DanglingEndpoint { connection, .. } => connection,
        }
    }
}

impl fmt::Display for ModelFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelFault::MissingParent { block, parent } => {
                write!(f, "{}: block {block} names unknown parent {parent}", self.rule())
            }
            ModelFault::MissingOwner { port, owner } => {
                write!(f, "{}: port {port} names unknown block {owner}", self.rule())
            }
            ModelFault::DanglingEndpoint { connection, port } => write!(
                f,
                "{}: connection {connection} names unknown port {port}",
                self.rule()
            ),
            other => write!(f, "{}: {}", other.rule(), other.subject()),
        }
    }
}

/// Structural well-formedness. Returns every broken rule, sorted; an empty
/// list means the model is valid.
pub fn check_model<S: Scalar>(model: &PlantModel<S>) -> Vec<ModelFault> {
    let mut faults = BTreeSet::new();

    let mut blocks = HashMap::new();
    for block in &model.blocks {
        if blocks.contains_key(block.id.as_str()) {
            faults.insert(ModelFault::DuplicateBlock(block.id.clone()));
        } else {
            blocks.insert(block.id.as_str(), block);
        }
    }
    for block in &model.blocks {
        if let Some(parent) = &block.parent {
            if !blocks.contains_key(parent.as_str()) {
                faults.insert(ModelFault::MissingParent {
                    block: block.id.clone(),
                    parent: parent.clone(),
                });
            }
        }
        // Walk up at most |blocks| steps; coming back to the start is a cycle.
        let mut current = block.parent.as_deref();
        let mut steps = 0;
        while let Some(id) = current {
            if id == block.id {
                faults.insert(ModelFault::ContainmentCycle(block.id.clone()));
                break;
            }
            steps += 1;
            if steps > blocks.len() {
                break;
            }
            current = blocks.get(id).and_then(|b| b.parent.as_deref());
        }
    }

    let mut ports = HashMap::new();
    for port in &model.ports {
        if ports.contains_key(port.id.as_str()) {
            faults.insert(ModelFault::DuplicatePort(port.id.clone()));
        } else {
            ports.insert(port.id.as_str(), port);
        }
        if !blocks.contains_key(port.owner.as_str()) {
            faults.insert(ModelFault::MissingOwner {
                port: port.id.clone(),
                owner: port.owner.clone(),
            });
        }
        let qualified = port
            .id
            .strip_prefix(port.owner.as_str())
            .and_then(|rest| rest.strip_prefix('.'))
            .is_some_and(|name| !name.is_empty());
        if !qualified {
            faults.insert(ModelFault::UnqualifiedPort(port.id.clone()));
        }
    }

    let mut connections = BTreeSet::new();
    for conn in &model.connections {
        if !connections.insert(conn.id.as_str()) {
            faults.insert(ModelFault::DuplicateConnection(conn.id.clone()));
        }
        if conn.a == conn.b {
            faults.insert(ModelFault::SelfConnection(conn.id.clone()));
        }
        let mut kinds = Vec::new();
        for end in [&conn.a, &conn.b] {
            match ports.get(end.as_str()) {
                Some(p) => kinds.push(p.kind),
                None => {
                    faults.insert(ModelFault::DanglingEndpoint {
                        connection: conn.id.clone(),
                        port: end.clone(),
                    });
                }
            }
        }
        if kinds.iter().any(|k| *k != conn.kind) {
            faults.insert(ModelFault::KindMismatch(conn.id.clone()));
        }
    }

    faults.into_iter().collect()
}

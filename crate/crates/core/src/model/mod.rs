//! Interdisciplinary structural plant model: blocks typed by engineering
//! discipline, ports typed by connection kind, and the connections between
//! them.

mod check;
mod state;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

pub use check::{check_model, ModelFault};
pub use state::{
    apply_op, diff_states, ChangeSet, Comparator, ConnStatus, ConnectionChange, ModelOp,
    ModelState, ObservableChange, OpFault, StateMismatch,
};

/// Component discipline, one per legend colour of the structural diagram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Discipline {
    MechatronicModule,
    ElectricElectronic,
    Software,
    Mechanical,
}

impl Discipline {
    pub const ALL: [Discipline; 4] = [
        Discipline::MechatronicModule,
        Discipline::ElectricElectronic,
        Discipline::Software,
        Discipline::Mechanical,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Discipline::MechatronicModule => "mechatronic_module",
            Discipline::ElectricElectronic => "electric_electronic",
            Discipline::Software => "software",
            Discipline::Mechanical => "mechanical",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.keyword() == word)
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Kind of a port; both ends of a connection share one kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PortKind {
    Mechanical,
    Electrical,
    Pneumatic,
    Signal,
}

impl PortKind {
    pub const ALL: [PortKind; 4] = [
        PortKind::Mechanical,
        PortKind::Electrical,
        PortKind::Pneumatic,
        PortKind::Signal,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            PortKind::Mechanical => "mechanical",
            PortKind::Electrical => "electrical",
            PortKind::Pneumatic => "pneumatic",
            PortKind::Signal => "signal",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == word)
    }
}

impl fmt::Display for PortKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub id: String,
    pub name: String,
    pub discipline: Discipline,
    /// Containing block, if any.
    pub parent: Option<String>,
}

impl Block {
    pub fn new(id: impl Into<String>, discipline: Discipline) -> Self {
        let id = id.into();
        Block {
            name: id.clone(),
            id,
            discipline,
            parent: None,
        }
    }

    pub fn with_parent(mut self, parent: impl Into<String>) -> Self {
        self.parent = Some(parent.into());
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// A port id is qualified by its owner: `<block-id>.<port-name>`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub id: String,
    pub owner: String,
    pub kind: PortKind,
}

impl Port {
    pub fn new(owner: impl Into<String>, name: &str, kind: PortKind) -> Self {
        let owner = owner.into();
        Port {
            id: format!("{owner}.{name}"),
            owner,
            kind,
        }
    }

    /// Port name without the owner prefix.
    pub fn local_name(&self) -> &str {
        self.id
            .strip_prefix(self.owner.as_str())
            .and_then(|rest| rest.strip_prefix('.'))
            .unwrap_or(&self.id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connection {
    pub id: String,
    pub a: String,
    pub b: String,
    pub kind: PortKind,
    /// Status in the model's initial state.
    pub initial: ConnStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantModel<S = f64> {
    pub id: String,
    pub blocks: Vec<Block>,
    pub ports: Vec<Port>,
    pub connections: Vec<Connection>,
    pub observables: BTreeMap<String, S>,
}

impl<S: Scalar> PlantModel<S> {
    pub fn new(id: impl Into<String>) -> Self {
        PlantModel {
            id: id.into(),
            blocks: Vec::new(),
            ports: Vec::new(),
            connections: Vec::new(),
            observables: BTreeMap::new(),
        }
    }

    pub fn block(&self, id: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.id == id)
    }

    pub fn port(&self, id: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.id == id)
    }

    pub fn connection(&self, id: &str) -> Option<&Connection> {
        self.connections.iter().find(|c| c.id == id)
    }

    /// Adds a connection between two existing ports, deriving its kind from
    /// the first endpoint. Intended for building models in code; no checks.
    pub fn connect(&mut self, id: &str, a: &str, b: &str, initial: ConnStatus) {
        let kind = self.port(a).map_or(PortKind::Mechanical, |p| p.kind);
        self.connections.push(Connection {
            id: id.to_owned(),
            a: a.to_owned(),
            b: b.to_owned(),
            kind,
            initial,
        });
    }

    /// Blocks owning the two endpoints of a connection.
    pub fn connection_blocks(&self, conn: &Connection) -> Option<(&str, &str)> {
        let a = self.port(&conn.a)?;
        let b = self.port(&conn.b)?;
        Some((a.owner.as_str(), b.owner.as_str()))
    }

    /// True when `block` is `ancestor` or transitively contained in it.
    pub fn is_within(&self, block: &str, ancestor: &str) -> bool {
        let mut current = Some(block);
        let mut hops = 0;
        while let Some(id) = current {
            if id == ancestor {
                return true;
            }
            hops += 1;
            if hops > self.blocks.len() {
                return false;
            }
            current = self.block(id).and_then(|b| b.parent.as_deref());
        }
        false
    }

    pub fn initial_state(&self) -> ModelState<S> {
        ModelState {
            status: self
                .connections
                .iter()
                .map(|c| (c.id.clone(), c.initial))
                .collect(),
            observables: self.observables.clone(),
        }
    }

    /// Same model with every declaration list sorted by id.
    pub fn canonicalized(&self) -> Self {
        let mut out = self.clone();
        out.blocks.sort_by(|x, y| x.id.cmp(&y.id));
        out.ports.sort_by(|x, y| x.id.cmp(&y.id));
        out.connections.sort_by(|x, y| x.id.cmp(&y.id));
        out
    }

    /// Equality up to declaration order.
    pub fn structurally_eq(&self, other: &Self) -> bool {
        self.canonicalized() == other.canonicalized()
    }
}

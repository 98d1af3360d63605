use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    decode, Message, Role, ERR_MALFORMED, ERR_ROLE_CONFLICT, ERR_TIME_LIMIT, ERR_UNKNOWN_STEP,
};
use crate::model::{diff_states, ModelState, PlantModel};
use crate::procedure::{all_states, step_annotation, Lesson, ValidationReport};
use crate::scalar::Scalar;

pub const DEFAULT_TIME_LIMIT_SECS: u64 = 300;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClientId(pub String);

impl ClientId {
    pub fn new(id: impl Into<String>) -> Self {
        ClientId(id.into())
    }
}

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A lesson with every step state precomputed.
#[derive(Clone, Debug)]
pub struct SessionContext<S: Scalar = f64> {
    pub lesson: Lesson<S>,
    pub model: PlantModel<S>,
    states: Vec<ModelState<S>>,
}

impl<S: Scalar> SessionContext<S> {
    /// Fails when some step's op cannot be applied.
    pub fn new(lesson: Lesson<S>, model: PlantModel<S>) -> Result<Self, ValidationReport<S>> {
        let states = all_states(&lesson, &model)?;
        Ok(SessionContext { lesson, model, states })
    }

    pub fn step_count(&self) -> usize {
        self.lesson.step_count()
    }

    pub fn state(&self, k: usize) -> &ModelState<S> {
        &self.states[k]
    }

    /// `STEP`, `TARGET` and `HILITE` lines for step `k`.
    fn step_frames(&self, k: usize) -> Vec<Message<S>> {
        let Ok(annotation) = step_annotation(&self.lesson, k) else {
            return vec![Message::Step {
                index: 0,
                instruction: String::new(),
            }];
        };
        let mut frames = vec![
            Message::Step {
                index: k,
                instruction: self.lesson.steps[k - 1].instruction.clone(),
            },
            Message::Target(annotation.target),
        ];
        frames.extend(annotation.highlights.into_iter().map(|(c, kind)| Message::Hilite(c, kind)));
        frames
    }

    /// Frames for a cursor move from `from` to `to`; `OBS` lines cover the
    /// observables that differ between the two states.
    fn move_frames(&self, from: usize, to: usize) -> Vec<Message<S>> {
        let mut frames = self.step_frames(to);
        let changes = diff_states(&self.states[from], &self.states[to]).expect("states share one model");
        frames.extend(changes.observable_changes.into_iter().map(|c| Message::Obs(c.name, c.to)));
        frames
    }

    /// Frames bringing a newly joined client up to step `k`, every
    /// observable included.
    fn snapshot_frames(&self, k: usize) -> Vec<Message<S>> {
        let mut frames = self.step_frames(k);
        frames.extend(self.states[k].observables.iter().map(|(n, v)| Message::Obs(n.clone(), *v)));
        frames
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventOutcome {
    Accepted,
    Rejected(u16),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event<S = f64> {
    /// Milliseconds since session start.
    pub t: u64,
    pub client: ClientId,
    pub message: Message<S>,
    pub outcome: EventOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recipient {
    Client(ClientId),
    /// Every client in the session once the message has been handled.
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delivery<S = f64> {
    pub to: Recipient,
    pub message: Message<S>,
}

/// Messages produced by one handled input, in delivery order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome<S = f64> {
    pub deliveries: Vec<Delivery<S>>,
}

impl<S> Default for Outcome<S> {
    fn default() -> Self {
        Outcome { deliveries: Vec::new() }
    }
}

impl<S: Clone> Outcome<S> {
    fn reply(&mut self, to: &ClientId, message: Message<S>) {
        self.deliveries.push(Delivery {
            to: Recipient::Client(to.clone()),
            message,
        });
    }

    fn broadcast(&mut self, message: Message<S>) {
        self.deliveries.push(Delivery {
            to: Recipient::All,
            message,
        });
    }

    pub fn replies(&self) -> impl Iterator<Item = (&ClientId, &Message<S>)> {
        self.deliveries.iter().filter_map(|d| match &d.to {
            Recipient::Client(c) => Some((c, &d.message)),
            Recipient::All => None,
        })
    }

    pub fn broadcasts(&self) -> impl Iterator<Item = &Message<S>> {
        self.deliveries
            .iter()
            .filter(|d| d.to == Recipient::All)
            .map(|d| &d.message)
    }

    pub fn is_empty(&self) -> bool {
        self.deliveries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState<S = f64> {
    pub session_id: String,
    pub lesson_id: String,
    pub step_count: usize,
    pub current_step: usize,
    pub clients: BTreeMap<ClientId, Role>,
    pub penalties: u32,
    pub mirror: bool,
    pub event_log: Vec<Event<S>>,
    pub steps_visited: BTreeSet<usize>,
    /// Milliseconds; every other timestamp is relative to this.
    pub started_at: u64,
    pub time_limit: Option<u64>,
    pub expired: bool,
    pub ended_at: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub duration_ms: u64,
    pub steps_visited: BTreeSet<usize>,
    pub penalties: u32,
    pub ended_early: bool,
}

impl SessionReport {
    pub fn duration_secs(&self) -> f64 {
        self.duration_ms as f64 / 1000.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("session is still active")]
pub struct SessionActive;

impl<S: Scalar> SessionState<S> {
    pub fn new(session_id: impl Into<String>, ctx: &SessionContext<S>, time_limit: Option<u64>) -> Self {
        SessionState {
            session_id: session_id.into(),
            lesson_id: ctx.lesson.id.clone(),
            step_count: ctx.step_count(),
            current_step: 0,
            clients: BTreeMap::new(),
            penalties: 0,
            mirror: false,
            event_log: Vec::new(),
            steps_visited: BTreeSet::from([0]),
            started_at: 0,
            time_limit,
            expired: false,
            ended_at: None,
        }
    }

    pub fn is_ended(&self) -> bool {
        self.ended_at.is_some()
    }

    pub fn display_client(&self) -> Option<&ClientId> {
        self.clients.iter().find(|(_, r)| **r == Role::Display).map(|(c, _)| c)
    }

    fn deadline(&self) -> Option<u64> {
        self.time_limit.map(|secs| self.started_at + secs * 1000)
    }

    /// Advances the clock; once the time limit passes the cursor freezes and
    /// every client is sent `ERR 408`.
    pub fn tick(&mut self, t: u64) -> Outcome<S> {
        let mut out = Outcome::default();
        if self.expired || self.is_ended() {
            return out;
        }
        if let Some(deadline) = self.deadline().filter(|d| t >= *d) {
            self.expired = true;
            self.ended_at = Some(deadline);
            out.broadcast(Message::err(ERR_TIME_LIMIT, "time limit reached"));
        }
        out
    }

    /// Decodes and handles one raw line. Undecodable lines are answered
    /// with `ERR 400` and never reach the event log.
    pub fn handle_line(&mut self, ctx: &SessionContext<S>, t: u64, client: &ClientId, line: &str) -> Outcome<S> {
        match decode::<S>(line) {
            Ok(message) => self.handle(ctx, t, client, message),
            Err(fault) => {
                let mut out = self.tick(t);
                out.reply(client, Message::Err(fault.code, fault.reason));
                out
            }
        }
    }

    /// Functional form of [`SessionState::handle`].
    pub fn handled(&self, ctx: &SessionContext<S>, t: u64, client: &ClientId, message: Message<S>) -> (Self, Outcome<S>) {
        let mut next = self.clone();
        let out = next.handle(ctx, t, client, message);
        (next, out)
    }

    pub fn handle(&mut self, ctx: &SessionContext<S>, t: u64, client: &ClientId, message: Message<S>) -> Outcome<S> {
        let mut out = self.tick(t);
        let result = self.apply(ctx, t, client, &message, &mut out);
        let outcome = match result {
            Ok(()) => EventOutcome::Accepted,
            Err((code, text)) => {
                out.reply(client, Message::err(code, text));
                EventOutcome::Rejected(code)
            }
        };
        self.event_log.push(Event {
            t,
            client: client.clone(),
            message,
            outcome,
        });
        out
    }

    fn apply(
        &mut self,
        ctx: &SessionContext<S>,
        t: u64,
        client: &ClientId,
        message: &Message<S>,
        out: &mut Outcome<S>,
    ) -> Result<(), (u16, String)> {
        if !message.is_client_message() {
            return Err((ERR_MALFORMED, "not a client message".into()));
        }
        if let Message::Hello(role) = message {
            if self.clients.contains_key(client) {
                return Err((ERR_MALFORMED, "already joined".into()));
            }
            if self.is_ended() {
                return Err((ERR_TIME_LIMIT, "session has ended".into()));
            }
            if *role == Role::Display && self.display_client().is_some() {
                return Err((ERR_ROLE_CONFLICT, "a display is already connected".into()));
            }
            self.clients.insert(client.clone(), *role);
            out.reply(
                client,
                Message::Welcome {
                    session: self.session_id.clone(),
                    steps: self.step_count,
                },
            );
            for frame in ctx.snapshot_frames(self.current_step) {
                out.reply(client, frame);
            }
            return Ok(());
        }
        if !self.clients.contains_key(client) {
            return Err((ERR_MALFORMED, "send HELLO first".into()));
        }

        let target = match message {
            Message::Next => Some(self.current_step.checked_add(1)),
            Message::Prev => Some(self.current_step.checked_sub(1)),
            Message::Goto(n) => Some(Some(*n)),
            _ => None,
        };
        if let Some(target) = target {
            if self.expired {
                return Err((ERR_TIME_LIMIT, "time limit reached".into()));
            }
            let to = target
                .filter(|k| *k <= self.step_count)
                .ok_or_else(|| (ERR_UNKNOWN_STEP, "unknown step".to_owned()))?;
            for frame in ctx.move_frames(self.current_step, to) {
                out.broadcast(frame);
            }
            self.current_step = to;
            self.steps_visited.insert(to);
            return Ok(());
        }

        match message {
            Message::View(..) => {
                let displays: Vec<ClientId> = self
                    .clients
                    .iter()
                    .filter(|(_, r)| **r == Role::Display)
                    .map(|(c, _)| c.clone())
                    .collect();
                for d in &displays {
                    out.reply(d, message.clone());
                }
                out.reply(client, Message::Ok);
            }
            Message::Mirror(on) => {
                self.mirror = *on;
                out.reply(client, Message::Ok);
            }
            Message::Support => {
                self.penalties += 1;
                out.reply(client, Message::Ok);
            }
            Message::Bye => {
                self.clients.remove(client);
                out.reply(client, Message::Ok);
                if self.clients.is_empty() && !self.is_ended() {
                    self.ended_at = Some(t);
                }
            }
            _ => unreachable!("client messages are handled above"),
        }
        Ok(())
    }

    pub fn session_report(&self) -> Result<SessionReport, SessionActive> {
        let ended_at = self.ended_at.ok_or(SessionActive)?;
        Ok(SessionReport {
            duration_ms: ended_at - self.started_at,
            steps_visited: self.steps_visited.clone(),
            penalties: self.penalties,
            ended_early: !self.expired,
        })
    }

    /// Accepted `SUPPORT` events in the log.
    pub fn logged_penalties(&self) -> u32 {
        self.event_log
            .iter()
            .filter(|e| e.message == Message::Support && e.outcome == EventOutcome::Accepted)
            .count() as u32
    }
}

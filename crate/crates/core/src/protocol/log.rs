//! JSON-lines session log and deterministic replay.
//!
//! Each session opens with `model`, `lesson` and `config` records holding the
//! exact source texts, so a log replays without any other input. Inputs are
//! `in` records, produced lines are `out` records (client `*` for a
//! broadcast), clock-driven output is a `tick` record and a finished session
//! closes with an `end` record carrying its report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::session::{ClientId, Outcome, Recipient, SessionContext, SessionReport, SessionState};
use super::encode;
use crate::format::{parse_lesson_in, parse_model_in};
use crate::scalar::Scalar;

pub const SERVER_CLIENT: &str = "server";
pub const BROADCAST_CLIENT: &str = "*";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Model,
    Lesson,
    Config,
    In,
    Out,
    Tick,
    End,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub session: String,
    pub t: u64,
    pub client: String,
    pub dir: Direction,
    pub line: String,
}

impl LogRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("log records always serialize")
    }
}

fn config_line(time_limit: Option<u64>) -> String {
    match time_limit {
        Some(secs) => format!("time_limit={secs}"),
        None => "time_limit=none".to_owned(),
    }
}

fn parse_config(line: &str) -> Option<Option<u64>> {
    match line.strip_prefix("time_limit=")? {
        "none" => Some(None),
        secs => secs.parse().ok().map(Some),
    }
}

/// A session together with the log records it has produced so far.
#[derive(Clone, Debug)]
pub struct RecordedSession<S: Scalar = f64> {
    pub state: SessionState<S>,
    records: Vec<LogRecord>,
    closed: bool,
}

impl<S: Scalar> RecordedSession<S> {
    pub fn open(
        session_id: &str,
        ctx: &SessionContext<S>,
        model_text: &str,
        lesson_text: &str,
        time_limit: Option<u64>,
    ) -> Self {
        let mut session = RecordedSession {
            state: SessionState::new(session_id, ctx, time_limit),
            records: Vec::new(),
            closed: false,
        };
        session.push(0, SERVER_CLIENT, Direction::Model, model_text);
        session.push(0, SERVER_CLIENT, Direction::Lesson, lesson_text);
        session.push(0, SERVER_CLIENT, Direction::Config, &config_line(time_limit));
        session
    }

    fn push(&mut self, t: u64, client: &str, dir: Direction, line: &str) {
        self.records.push(LogRecord {
            session: self.state.session_id.clone(),
            t,
            client: client.to_owned(),
            dir,
            line: line.to_owned(),
        });
    }

    fn record_outcome(&mut self, t: u64, outcome: &Outcome<S>) {
        for d in &outcome.deliveries {
            let to = match &d.to {
                Recipient::Client(c) => c.0.as_str(),
                Recipient::All => BROADCAST_CLIENT,
            };
            let line = encode(&d.message);
            self.push(t, to, Direction::Out, line.trim_end_matches('\n'));
        }
        if !self.closed {
            if let Ok(report) = self.state.session_report() {
                self.closed = true;
                let json = serde_json::to_string(&report).expect("reports always serialize");
                self.push(t, SERVER_CLIENT, Direction::End, &json);
            }
        }
    }

    pub fn input(&mut self, ctx: &SessionContext<S>, t: u64, client: &ClientId, line: &str) -> Outcome<S> {
        let line = line.trim_end_matches(['\n', '\r']);
        self.push(t, &client.0, Direction::In, line);
        let outcome = self.state.handle_line(ctx, t, client, line);
        self.record_outcome(t, &outcome);
        outcome
    }

    /// Only ticks that produce output are recorded.
    pub fn tick(&mut self, t: u64) -> Outcome<S> {
        let outcome = self.state.tick(t);
        if !outcome.is_empty() {
            self.push(t, SERVER_CLIENT, Direction::Tick, "");
            self.record_outcome(t, &outcome);
        }
        outcome
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Records written since the last drain.
    pub fn drain(&mut self) -> Vec<LogRecord> {
        std::mem::take(&mut self.records)
    }
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("session {session}: missing {what} record")]
    MissingHeader { session: String, what: &'static str },
    #[error("session {session}: {detail}")]
    Source { session: String, detail: String },
    #[error("session {session}: record {index} diverges: logged {logged}, replayed {replayed}")]
    Divergence {
        session: String,
        index: usize,
        logged: String,
        replayed: String,
    },
}

pub fn read_log(text: &str) -> Result<Vec<LogRecord>, ReplayError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ReplayError::Json {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ReplayedSession {
    pub state: SessionState<f64>,
    pub report: Option<SessionReport>,
}

fn header<'r>(records: &[&'r LogRecord], session: &str, dir: Direction, what: &'static str) -> Result<&'r LogRecord, ReplayError> {
    records
        .iter()
        .find(|r| r.dir == dir)
        .copied()
        .ok_or_else(|| ReplayError::MissingHeader {
            session: session.to_owned(),
            what,
        })
}

fn replay_session(session: &str, records: &[&LogRecord]) -> Result<ReplayedSession, ReplayError> {
    let source = |detail: String| ReplayError::Source {
        session: session.to_owned(),
        detail,
    };
    let model_text = &header(records, session, Direction::Model, "model")?.line;
    let lesson_text = &header(records, session, Direction::Lesson, "lesson")?.line;
    let config = &header(records, session, Direction::Config, "config")?.line;
    let time_limit = parse_config(config).ok_or_else(|| source(format!("bad config {config:?}")))?;

    let join = |faults: Vec<crate::format::ParseFault>| faults.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
    let model = parse_model_in::<f64>("<log model>", model_text).map_err(|f| source(join(f)))?;
    let lesson = parse_lesson_in("<log lesson>", lesson_text, &model).map_err(|f| source(join(f)))?;
    let ctx = SessionContext::new(lesson, model).map_err(|r| source(r.to_string()))?;

    let mut replayed = RecordedSession::open(session, &ctx, model_text, lesson_text, time_limit);
    let mut produced = replayed.drain();
    for record in records {
        match record.dir {
            Direction::In => {
                replayed.input(&ctx, record.t, &ClientId::new(record.client.clone()), &record.line);
            }
            Direction::Tick => {
                replayed.tick(record.t);
            }
            _ => {}
        }
        produced.extend(replayed.drain());
    }

    let show = |r: Option<&&LogRecord>| r.map_or_else(|| "nothing".to_owned(), |r| r.to_json());
    let logged: Vec<&LogRecord> = records.to_vec();
    let produced_refs: Vec<&LogRecord> = produced.iter().collect();
    if let Some(index) = (0..logged.len().max(produced_refs.len())).find(|&i| logged.get(i) != produced_refs.get(i)) {
        return Err(ReplayError::Divergence {
            session: session.to_owned(),
            index,
            logged: show(logged.get(index)),
            replayed: show(produced_refs.get(index)),
        });
    }
    let report = replayed.state.session_report().ok();
    Ok(ReplayedSession {
        state: replayed.state,
        report,
    })
}

/// Re-runs every session in the log and checks that each produced record
/// matches the logged one exactly. Sessions are returned in order of first
/// appearance.
pub fn replay(records: &[LogRecord]) -> Result<Vec<(String, ReplayedSession)>, ReplayError> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_session: BTreeMap<&str, Vec<&LogRecord>> = BTreeMap::new();
    for r in records {
        by_session
            .entry(&r.session)
            .or_insert_with(|| {
                order.push(&r.session);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|id| replay_session(id, &by_session[id]).map(|s| (id.to_owned(), s)))
        .collect()
}

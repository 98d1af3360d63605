//! Plain-text session protocol between the lesson engine and its clients.
//!
//! One LF-terminated UTF-8 line per message. Verbs are uppercase; a final
//! free-text field is introduced by ` :` and runs to the end of the line.
//!
//! ```text
//! client -> server   HELLO <display|remote|support>
//!                    NEXT | PREV | GOTO <n> | SUPPORT | BYE
//!                    VIEW <pan|zoom|rotate> <decimal> [<decimal>]
//!                    MIRROR <on|off>
//! server -> client   WELCOME <session-id> <step-count>
//!                    STEP <n> :<instruction>
//!                    TARGET <block-id>
//!                    HILITE <conn-id> <remove|establish>
//!                    OBS <name> <decimal>
//!                    OK | ERR <code> :<text>
//! ```

pub mod log;
mod session;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::procedure::HighlightKind;
use crate::scalar::Scalar;

pub use session::{
    ClientId, Delivery, Event, EventOutcome, Outcome, Recipient, SessionActive, SessionContext,
    SessionReport, SessionState, DEFAULT_TIME_LIMIT_SECS,
};

pub const ERR_MALFORMED: u16 = 400;
pub const ERR_UNKNOWN_STEP: u16 = 404;
pub const ERR_TIME_LIMIT: u16 = 408;
pub const ERR_ROLE_CONFLICT: u16 = 409;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Display,
    Remote,
    Support,
}

impl Role {
    pub fn keyword(self) -> &'static str {
        match self {
            Role::Display => "display",
            Role::Remote => "remote",
            Role::Support => "support",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "display" => Some(Role::Display),
            "remote" => Some(Role::Remote),
            "support" => Some(Role::Support),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViewVerb {
    Pan,
    Zoom,
    Rotate,
}

impl ViewVerb {
    pub fn keyword(self) -> &'static str {
        match self {
            ViewVerb::Pan => "pan",
            ViewVerb::Zoom => "zoom",
            ViewVerb::Rotate => "rotate",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "pan" => Some(ViewVerb::Pan),
            "zoom" => Some(ViewVerb::Zoom),
            "rotate" => Some(ViewVerb::Rotate),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Message<S = f64> {
    Hello(Role),
    Next,
    Prev,
    Goto(usize),
    /// One or two arguments.
    View(ViewVerb, Vec<S>),
    Mirror(bool),
    Support,
    Bye,
    Welcome { session: String, steps: usize },
    Step { index: usize, instruction: String },
    Target(String),
    Hilite(String, HighlightKind),
    Obs(String, S),
    Err(u16, String),
    Ok,
}

impl<S> Message<S> {
    /// Messages a client may send.
    pub fn is_client_message(&self) -> bool {
        matches!(
            self,
            Message::Hello(_)
                | Message::Next
                | Message::Prev
                | Message::Goto(_)
                | Message::View(..)
                | Message::Mirror(_)
                | Message::Support
                | Message::Bye
        )
    }

    pub fn err(code: u16, text: impl Into<String>) -> Self {
        Message::Err(code, text.into())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("ERR {code} :{reason}")]
pub struct ProtocolFault {
    pub code: u16,
    pub reason: String,
}

fn malformed(reason: impl Into<String>) -> ProtocolFault {
    ProtocolFault {
        code: ERR_MALFORMED,
        reason: reason.into(),
    }
}

fn single_line(text: &str) -> String {
    text.replace(['\n', '\r'], " ")
}

/// Encodes a message as one LF-terminated line. Free text has CR/LF
/// replaced by spaces.
pub fn encode<S: Scalar>(message: &Message<S>) -> String {
    let body = match message {
        Message::Hello(role) => format!("HELLO {}", role.keyword()),
        Message::Next => "NEXT".to_owned(),
        Message::Prev => "PREV".to_owned(),
        Message::Goto(n) => format!("GOTO {n}"),
        Message::View(verb, args) => {
            let mut line = format!("VIEW {}", verb.keyword());
            for a in args {
                line.push(' ');
                line.push_str(&a.to_decimal());
            }
            line
        }
        Message::Mirror(on) => format!("MIRROR {}", if *on { "on" } else { "off" }),
        Message::Support => "SUPPORT".to_owned(),
        Message::Bye => "BYE".to_owned(),
        Message::Welcome { session, steps } => format!("WELCOME {session} {steps}"),
        Message::Step { index, instruction } => format!("STEP {index} :{}", single_line(instruction)),
        Message::Target(block) => format!("TARGET {block}"),
        Message::Hilite(conn, kind) => format!("HILITE {conn} {}", kind.keyword()),
        Message::Obs(name, value) => format!("OBS {name} {}", value.to_decimal()),
        Message::Err(code, text) => format!("ERR {code} :{}", single_line(text)),
        Message::Ok => "OK".to_owned(),
    };
    body + "\n"
}

fn word(token: &str) -> Result<String, ProtocolFault> {
    if token.is_empty() || token.starts_with(':') {
        Err(malformed("expected a word"))
    } else {
        Ok(token.to_owned())
    }
}

fn number(token: &str) -> Result<usize, ProtocolFault> {
    if !token.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(format!("not a step number: {token}")));
    }
    token.parse().map_err(|_| malformed(format!("not a step number: {token}")))
}

fn decimal<S: Scalar>(token: &str) -> Result<S, ProtocolFault> {
    S::from_decimal(token).ok_or_else(|| malformed(format!("not a decimal: {token}")))
}

/// Decodes one line (a trailing LF or CRLF is tolerated).
pub fn decode<S: Scalar>(line: &str) -> Result<Message<S>, ProtocolFault> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.contains('\n') {
        return Err(malformed("embedded line feed"));
    }
    let (head, trailing) = match line.find(" :") {
        Some(at) => (&line[..at], Some(&line[at + 2..])),
        None => (line, None),
    };
    let tokens: Vec<&str> = head.split(' ').filter(|t| !t.is_empty()).collect();
    let Some((verb, args)) = tokens.split_first() else {
        return Err(malformed("empty line"));
    };
    let arity = |n: usize| -> Result<(), ProtocolFault> {
        if args.len() == n {
            Ok(())
        } else {
            Err(malformed(format!("{verb} takes {n} argument(s)")))
        }
    };
    let no_trailing = || -> Result<(), ProtocolFault> {
        match trailing {
            None => Ok(()),
            Some(_) => Err(malformed(format!("{verb} takes no text field"))),
        }
    };
    let message = match *verb {
        "HELLO" => {
            arity(1)?;
            no_trailing()?;
            Message::Hello(Role::from_keyword(args[0]).ok_or_else(|| malformed("unknown role"))?)
        }
        "NEXT" | "PREV" | "SUPPORT" | "BYE" | "OK" => {
            arity(0)?;
            no_trailing()?;
            match *verb {
                "NEXT" => Message::Next,
                "PREV" => Message::Prev,
                "SUPPORT" => Message::Support,
                "BYE" => Message::Bye,
                _ => Message::Ok,
            }
        }
        "GOTO" => {
            arity(1)?;
            no_trailing()?;
            Message::Goto(number(args[0])?)
        }
        "VIEW" => {
            no_trailing()?;
            if !(2..=3).contains(&args.len()) {
                return Err(malformed("VIEW takes a verb and one or two decimals"));
            }
            let verb = ViewVerb::from_keyword(args[0]).ok_or_else(|| malformed("unknown view verb"))?;
            let values = args[1..].iter().map(|a| decimal(a)).collect::<Result<_, _>>()?;
            Message::View(verb, values)
        }
        "MIRROR" => {
            arity(1)?;
            no_trailing()?;
            match args[0] {
                "on" => Message::Mirror(true),
                "off" => Message::Mirror(false),
                _ => return Err(malformed("MIRROR takes on or off")),
            }
        }
        "WELCOME" => {
            arity(2)?;
            no_trailing()?;
            Message::Welcome {
                session: word(args[0])?,
                steps: number(args[1])?,
            }
        }
        "STEP" => {
            arity(1)?;
            let instruction = trailing.ok_or_else(|| malformed("STEP needs :<instruction>"))?;
            Message::Step {
                index: number(args[0])?,
                instruction: instruction.to_owned(),
            }
        }
        "TARGET" => {
            arity(1)?;
            no_trailing()?;
            Message::Target(word(args[0])?)
        }
        "HILITE" => {
            arity(2)?;
            no_trailing()?;
            let kind = HighlightKind::from_keyword(args[1]).ok_or_else(|| malformed("HILITE takes remove or establish"))?;
            Message::Hilite(word(args[0])?, kind)
        }
        "OBS" => {
            arity(2)?;
            no_trailing()?;
            Message::Obs(word(args[0])?, decimal(args[1])?)
        }
        "ERR" => {
            arity(1)?;
            let text = trailing.ok_or_else(|| malformed("ERR needs :<text>"))?;
            let code = args[0]
                .parse::<u16>()
                .ok()
                .filter(|c| (100..1000).contains(c) && args[0].len() == 3)
                .ok_or_else(|| malformed("ERR code must be three digits"))?;
            Message::Err(code, text.to_owned())
        }
        other => return Err(malformed(format!("unknown verb {other}"))),
    };
    Ok(message)
}

impl<S: Scalar> fmt::Display for Message<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(encode(self).trim_end_matches('\n'))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dec(line: &str) -> Result<Message, ProtocolFault> {
        decode(line)
    }

    #[test]
    fn decode_examples() {
        assert_eq!(dec("GOTO 3"), Ok(Message::Goto(3)));
        assert_eq!(
            dec("STEP 1 :Deactivate the pneumatic supply in the control software."),
            Ok(Message::Step {
                index: 1,
                instruction: "Deactivate the pneumatic supply in the control software.".into()
            })
        );
        assert_eq!(dec("FLY AWAY").unwrap_err().code, 400);
        assert_eq!(dec("VIEW zoom 1.5\r\n"), Ok(Message::View(ViewVerb::Zoom, vec![1.5])));
        assert_eq!(dec("STEP 0 :"), Ok(Message::Step { index: 0, instruction: String::new() }));
        assert_eq!(dec("ERR 404 :a : b"), Ok(Message::Err(404, "a : b".into())));
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode(&Message::<f64>::Err(404, "unknown step".into())), "ERR 404 :unknown step\n");
        assert_eq!(encode(&Message::<f64>::Hilite("c_air".into(), HighlightKind::Remove)), "HILITE c_air remove\n");
        assert_eq!(encode(&Message::Obs("pressure_pickalpha".into(), 0.0)), "OBS pressure_pickalpha 0\n");
    }

    #[test]
    fn arity_and_argument_faults() {
        for bad in [
            "", "NEXT 1", "GOTO", "GOTO -1", "GOTO x", "HELLO boss", "VIEW pan", "VIEW spin 1",
            "VIEW pan 1 2 3", "VIEW pan 1e3", "MIRROR maybe", "STEP 1", "ERR 40 :x", "ERR 404",
            "HILITE c up", "OBS p", "next", "NEXT :x", "TARGET :x",
        ] {
            assert_eq!(dec(bad).map_err(|e| e.code), Err(400), "{bad:?}");
        }
    }
}
